#include "herlab/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "herlab/error.hpp"
#include "herlab/random.hpp"

namespace herlab {
namespace {

struct CompiledExample {
  std::vector<std::pair<int, double>> tokens;  // (vocabulary index, count / length)
  Eigen::MatrixXd features;                    // feature_dim x n_objects
  Eigen::Index target = 0;
};

struct Vocabulary {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;
};

Vocabulary vocabulary_of(const PolicyParams& params) {
  Vocabulary v;
  for (const auto& [token, embedding] : params.tokens) {
    v.index.emplace(token, static_cast<int>(v.words.size()));
    v.words.push_back(token);
  }
  return v;
}

Eigen::MatrixXd embedding_matrix(const PolicyParams& params) {
  Eigen::MatrixXd e(params.token_dim, static_cast<Eigen::Index>(params.tokens.size()));
  Eigen::Index col = 0;
  for (const auto& [token, embedding] : params.tokens) e.col(col++) = embedding;
  return e;
}

CompiledExample compile(const TrainExample& ex, const Vocabulary& vocab, int feature_dim) {
  if (ex.tokens.empty()) throw std::invalid_argument("training example has no instruction tokens");
  if (ex.features.empty() || ex.target >= ex.features.size()) {
    throw std::invalid_argument("training example target " + std::to_string(ex.target) +
                                " outside a room of " + std::to_string(ex.features.size()));
  }
  CompiledExample c;
  std::map<int, int> counts;
  for (const auto& t : ex.tokens) {
    if (auto it = vocab.index.find(t); it != vocab.index.end()) ++counts[it->second];
  }
  const double length = static_cast<double>(ex.tokens.size());
  for (const auto& [id, n] : counts) c.tokens.emplace_back(id, n / length);
  c.features.resize(feature_dim, static_cast<Eigen::Index>(ex.features.size()));
  for (std::size_t i = 0; i < ex.features.size(); ++i) {
    if (ex.features[i].size() != feature_dim) {
      throw std::invalid_argument("training example feature dimension does not match the policy");
    }
    c.features.col(static_cast<Eigen::Index>(i)) = ex.features[i];
  }
  c.target = static_cast<Eigen::Index>(ex.target);
  return c;
}

// Summed (not averaged) loss over `batch`; gradients are accumulated into dE and dW.
double accumulate(const Eigen::MatrixXd& E, const Eigen::MatrixXd& W,
                  const std::vector<CompiledExample>& data, std::span<const std::size_t> batch,
                  Eigen::MatrixXd* dE, Eigen::MatrixXd* dW) {
  double total = 0.0;
  Eigen::VectorXd u(E.rows());
  for (std::size_t idx : batch) {
    const CompiledExample& ex = data[idx];
    u.setZero();
    for (const auto& [id, w] : ex.tokens) u += w * E.col(id);
    const Eigen::RowVectorXd projected = u.transpose() * W;
    const Eigen::VectorXd logits = (projected * ex.features).transpose();
    const double max = logits.maxCoeff();
    const Eigen::VectorXd shifted = (logits.array() - max).exp().matrix();
    const double sum = shifted.sum();
    total += std::log(sum) + max - logits[ex.target];
    if (dW == nullptr) continue;
    Eigen::VectorXd residual = shifted / sum;
    residual[ex.target] -= 1.0;
    const Eigen::VectorXd g = ex.features * residual;
    dW->noalias() += u * g.transpose();
    const Eigen::VectorXd du = W * g;
    for (const auto& [id, w] : ex.tokens) dE->col(id) += w * du;
  }
  return total;
}

void add_missing_tokens(std::span<const TrainExample> dataset, const TrainConfig& config,
                        PolicyParams& params) {
  for (const auto& ex : dataset) {
    for (const auto& t : ex.tokens) {
      if (params.tokens.contains(t)) continue;
      Engine rng(derive_seed(config.seed, "token-init", fnv1a(t)));
      Eigen::VectorXd v(params.token_dim);
      for (int i = 0; i < params.token_dim; ++i) v[i] = config.token_init_scale * standard_normal(rng);
      params.tokens.emplace(t, std::move(v));
    }
  }
}

struct AdamState {
  Eigen::MatrixXd m_w, v_w, m_e, v_e;
  long step = 0;
};

}  // namespace

std::string_view to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "adam") return Optimizer::Adam;
  if (text == "sgd") return Optimizer::Sgd;
  throw Error("unknown optimizer '" + std::string(text) + "' (expected adam or sgd)");
}

double loss_and_gradient(const PolicyParams& params, std::span<const TrainExample> examples,
                         Gradient* grad) {
  if (examples.empty()) throw std::invalid_argument("loss over an empty dataset");
  const Vocabulary vocab = vocabulary_of(params);
  std::vector<CompiledExample> data;
  data.reserve(examples.size());
  for (const auto& ex : examples) data.push_back(compile(ex, vocab, params.feature_dim));
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  const Eigen::MatrixXd E = embedding_matrix(params);
  Eigen::MatrixXd dE = Eigen::MatrixXd::Zero(E.rows(), E.cols());
  Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(params.scorer.rows(), params.scorer.cols());
  const double n = static_cast<double>(data.size());
  const double loss = accumulate(E, params.scorer, data, all, grad ? &dE : nullptr,
                                 grad ? &dW : nullptr) / n;
  if (grad != nullptr) {
    grad->scorer = dW / n;
    grad->tokens.clear();
    for (std::size_t i = 0; i < vocab.words.size(); ++i) {
      grad->tokens.emplace(vocab.words[i], dE.col(static_cast<Eigen::Index>(i)) / n);
    }
  }
  return loss;
}

PolicyParams bc_train(std::span<const TrainExample> dataset, const TrainConfig& config,
                      PolicyParams init, std::vector<double>* epoch_losses) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (config.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (epoch_losses != nullptr) epoch_losses->clear();
  if (config.epochs == 0) return init;
  if (dataset.empty()) throw std::invalid_argument("cannot train on an empty dataset");

  PolicyParams params = std::move(init);
  add_missing_tokens(dataset, config, params);
  const Vocabulary vocab = vocabulary_of(params);
  std::vector<CompiledExample> data;
  data.reserve(dataset.size());
  for (const auto& ex : dataset) data.push_back(compile(ex, vocab, params.feature_dim));

  Eigen::MatrixXd E = embedding_matrix(params);
  Eigen::MatrixXd& W = params.scorer;
  Eigen::MatrixXd dE(E.rows(), E.cols());
  Eigen::MatrixXd dW(W.rows(), W.cols());

  AdamState adam;
  if (config.optimizer == Optimizer::Adam) {
    adam.m_w = Eigen::MatrixXd::Zero(W.rows(), W.cols());
    adam.v_w = adam.m_w;
    adam.m_e = Eigen::MatrixXd::Zero(E.rows(), E.cols());
    adam.v_e = adam.m_e;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.weight_decay;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Engine rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle(std::span<std::size_t>(order), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t size = std::min(batch, order.size() - start);
      dE.setZero();
      dW.setZero();
      const double loss =
          accumulate(E, W, data, std::span(order).subspan(start, size), &dE, &dW) / size;
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError("non-finite training loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batches) +
                                    "; lower the learning rate");
      }
      epoch_loss += loss;
      ++batches;
      dE /= static_cast<double>(size);
      dW /= static_cast<double>(size);

      if (config.optimizer == Optimizer::Adam) {
        ++adam.step;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
        adam.m_w = kBeta1 * adam.m_w + (1.0 - kBeta1) * dW;
        adam.v_w = kBeta2 * adam.v_w + (1.0 - kBeta2) * dW.cwiseProduct(dW);
        adam.m_e = kBeta1 * adam.m_e + (1.0 - kBeta1) * dE;
        adam.v_e = kBeta2 * adam.v_e + (1.0 - kBeta2) * dE.cwiseProduct(dE);
        W = decay * W - lr * ((adam.m_w / c1).array() / ((adam.v_w / c2).array().sqrt() + kEps)).matrix();
        E = decay * E - lr * ((adam.m_e / c1).array() / ((adam.v_e / c2).array().sqrt() + kEps)).matrix();
      } else {
        W = decay * W - lr * dW;
        E = decay * E - lr * dE;
      }
    }
    if (epoch_losses != nullptr) epoch_losses->push_back(epoch_loss / batches);
  }

  Eigen::Index col = 0;
  for (auto& [token, embedding] : params.tokens) embedding = E.col(col++);
  if (!params.all_finite()) {
    throw TrainingDivergedError("training produced non-finite parameters; lower the learning rate");
  }
  return params;
}

}  // namespace herlab
