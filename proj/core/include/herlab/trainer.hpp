#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "herlab/policy.hpp"

namespace herlab {

struct TrainExample {
  std::vector<std::string> tokens;
  std::vector<Eigen::VectorXd> features;
  std::size_t target = 0;
};

enum class Optimizer { Adam, Sgd };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.02;
  int epochs = 8;
  int batch_size = 64;
  // Decoupled (AdamW-style) decay applied to every parameter after each step.
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  // Scale of the Gaussian used to initialise embeddings of newly seen tokens.
  double token_init_scale = 0.1;
};

struct Gradient {
  Eigen::MatrixXd scorer;
  std::map<std::string, Eigen::VectorXd, std::less<>> tokens;
};

/// Mean cross-entropy of softmax(score_objects) against the targets. When `grad` is
/// non-null it receives the gradient with respect to the scorer and to every token
/// already present in the table.
double loss_and_gradient(const PolicyParams& params, std::span<const TrainExample> examples,
                         Gradient* grad);

/// Behavioral cloning by minibatch gradient descent on the mean cross-entropy.
/// Tokens missing from `init` are added with seed-derived embeddings first. Shuffling
/// and batch order depend only on config.seed. epochs == 0 returns `init` unchanged.
/// `epoch_losses`, when given, receives the mean minibatch loss of each epoch.
/// Throws std::invalid_argument on bad input and TrainingDivergedError on a non-finite loss.
PolicyParams bc_train(std::span<const TrainExample> dataset, const TrainConfig& config,
                      PolicyParams init, std::vector<double>* epoch_losses = nullptr);

}  // namespace herlab
