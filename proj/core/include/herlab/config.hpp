#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "herlab/env.hpp"
#include "herlab/pipeline.hpp"
#include "herlab/remote.hpp"
#include "herlab/trainer.hpp"

namespace herlab {

enum class ExperimentKind { Names, Attributes, Categories, Preferences, NoiseAnalysis };

std::string_view to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Names;
  // attributes: name | color; categories: zeroshot | fewshot-1 .. fewshot-5;
  // preferences: aligned | arbitrary; empty for names and noise-analysis.
  std::string variant;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/herlab";

  EnvConfig env;
  bool auto_colors = true;  // fixed colors, or per-episode permutation for attributes

  std::size_t n_trajectories = 10000;

  // oracle | remote | auto (the experiment's shipped preset) | a preset name
  std::string relabeler = "auto";
  double keep_fraction = 1.0;
  double k_generalization = 0.92;
  EndpointConfig endpoint;

  TrainConfig train;
  int token_dim = 16;
  std::optional<std::uint64_t> train_seed;  // derived from seed when absent

  EvalConfig eval;
  double eval_p_timeout = 0.0;
  std::string eval_tasks = "auto";  // or a comma-separated list of task ids

  double analysis_filter_keep = 0.5;
  int calibration_bins = 10;

  /// Effective values after defaults and derivations are resolved.
  EnvConfig resolved_env() const;
  EnvConfig resolved_eval_env() const;
  TrainConfig resolved_train() const;
};

/// Parses the INI-style config text. Unknown keys and invalid values raise
/// ConfigError naming the offending field ("section.key").
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when fields are inconsistent.
void validate(const ExperimentConfig& config);

/// Config text with every field spelled out; parsing it yields the same config.
std::string render_config(const ExperimentConfig& config);

}  // namespace herlab
