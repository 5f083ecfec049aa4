#include "herlab/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "herlab/error.hpp"
#include "herlab/random.hpp"

namespace herlab {

bool PolicyParams::all_finite() const {
  if (!scorer.allFinite()) return false;
  for (const auto& [token, v] : tokens) {
    if (!v.allFinite()) return false;
  }
  return true;
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (a.token_dim != b.token_dim || a.feature_dim != b.feature_dim) return false;
  if (a.scorer.rows() != b.scorer.rows() || a.scorer.cols() != b.scorer.cols()) return false;
  if (a.scorer != b.scorer || a.tokens.size() != b.tokens.size()) return false;
  auto it = b.tokens.begin();
  for (const auto& [token, v] : a.tokens) {
    if (token != it->first || v.size() != it->second.size() || v != it->second) return false;
    ++it;
  }
  return true;
}

PolicyParams init_policy(int token_dim, int feature_dim, std::uint64_t seed) {
  if (token_dim <= 0 || feature_dim <= 0) {
    throw std::invalid_argument("policy dimensions must be positive");
  }
  PolicyParams p;
  p.token_dim = token_dim;
  p.feature_dim = feature_dim;
  p.scorer.resize(token_dim, feature_dim);
  Engine rng(derive_seed(seed, "scorer-init"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (int r = 0; r < token_dim; ++r) {
    for (int c = 0; c < feature_dim; ++c) p.scorer(r, c) = scale * standard_normal(rng);
  }
  return p;
}

Eigen::VectorXd encode_instruction(std::span<const std::string> tokens, const PolicyParams& params) {
  if (tokens.empty()) throw std::invalid_argument("cannot encode an empty instruction");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(params.token_dim);
  for (const auto& t : tokens) {
    if (auto it = params.tokens.find(t); it != params.tokens.end()) u += it->second;
  }
  return u / static_cast<double>(tokens.size());
}

Eigen::VectorXd score_objects(const Eigen::VectorXd& instruction,
                              std::span<const Eigen::VectorXd> features,
                              const PolicyParams& params) {
  if (instruction.size() != params.token_dim || params.scorer.rows() != params.token_dim ||
      params.scorer.cols() != params.feature_dim) {
    throw std::invalid_argument("instruction embedding does not match the policy dimensions");
  }
  const Eigen::RowVectorXd projected = instruction.transpose() * params.scorer;
  Eigen::VectorXd logits(static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != params.feature_dim) {
      throw std::invalid_argument("object feature dimension " + std::to_string(features[i].size()) +
                                  " does not match the policy's " + std::to_string(params.feature_dim));
    }
    logits[static_cast<Eigen::Index>(i)] = projected.dot(features[i]);
  }
  return logits;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  const Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

std::size_t argmax(const Eigen::VectorXd& values) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::string_view to_string(ActMode mode) {
  switch (mode) {
    case ActMode::Greedy: return "greedy";
    case ActMode::Sample: return "sample";
    case ActMode::UniformRandom: return "uniform";
  }
  return "sample";
}

ActMode parse_act_mode(std::string_view text) {
  for (auto m : {ActMode::Greedy, ActMode::Sample, ActMode::UniformRandom}) {
    if (to_string(m) == text) return m;
  }
  throw Error("unknown action mode '" + std::string(text) + "' (expected greedy, sample or uniform)");
}

std::size_t act(const PolicyParams& params, std::span<const std::string> tokens,
                std::span<const Eigen::VectorXd> features, ActMode mode, std::uint64_t seed) {
  if (features.empty()) throw std::invalid_argument("cannot act in an empty room");
  Engine rng(derive_seed(seed, "act"));
  if (mode == ActMode::UniformRandom) return uniform_index(rng, features.size());

  const Eigen::VectorXd logits = score_objects(encode_instruction(tokens, params), features, params);
  if (mode == ActMode::Greedy) return argmax(logits);

  const Eigen::VectorXd probs = softmax(logits);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(probs.size() - 1);
}

}  // namespace herlab
