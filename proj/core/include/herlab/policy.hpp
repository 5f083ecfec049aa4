#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace herlab {

/// Bilinear instruction-object scorer: logit_i = u^T W f_i, where u is the mean of
/// the instruction's token embeddings (unknown tokens contribute zero vectors).
struct PolicyParams {
  int token_dim = 16;
  int feature_dim = 32;
  std::map<std::string, Eigen::VectorXd, std::less<>> tokens;
  Eigen::MatrixXd scorer;  // token_dim x feature_dim

  bool all_finite() const;
  friend bool operator==(const PolicyParams& a, const PolicyParams& b);
};

/// Empty token table and a seeded Gaussian scorer with entries of scale 1/sqrt(feature_dim).
/// An untrained policy therefore scores every object 0 for any instruction.
PolicyParams init_policy(int token_dim, int feature_dim, std::uint64_t seed);

/// Throws std::invalid_argument on an empty token list.
Eigen::VectorXd encode_instruction(std::span<const std::string> tokens, const PolicyParams& params);

/// Throws std::invalid_argument on dimension mismatch.
Eigen::VectorXd score_objects(const Eigen::VectorXd& instruction,
                              std::span<const Eigen::VectorXd> features,
                              const PolicyParams& params);

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

enum class ActMode { Greedy, Sample, UniformRandom };

std::string_view to_string(ActMode mode);
ActMode parse_act_mode(std::string_view text);

/// Index of the object to lift. Greedy takes the lowest-index argmax; Sample draws
/// from softmax(logits); UniformRandom ignores the policy. `seed` feeds the draws.
std::size_t act(const PolicyParams& params, std::span<const std::string> tokens,
                std::span<const Eigen::VectorXd> features, ActMode mode, std::uint64_t seed);

/// Index of the lowest-index maximum.
std::size_t argmax(const Eigen::VectorXd& values);

}  // namespace herlab
