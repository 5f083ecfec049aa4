#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "herlab/config.hpp"

namespace herlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStage = 3;

struct CommandOptions {
  std::filesystem::path config;
  int workers = 1;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
};

struct RelabelOptions {
  std::optional<std::string> template_kind;  // name | color | foodtoy | preference
  std::optional<std::string> relabeler;
  std::optional<std::filesystem::path> labels;
};

struct TrainOptions {
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> checkpoint;
};

struct EvalOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> results;
};

struct AnalyzeOptions {
  std::vector<std::filesystem::path> labels;
  std::vector<std::filesystem::path> results;  // empty, or one per label set
  std::filesystem::path output = "analysis";
  int calibration_bins = 10;
};

/// Config file plus command-line overrides, validated.
ExperimentConfig effective_config(const CommandOptions& options);

/// Where an arm's artifacts live: the output directory itself for single-arm
/// experiments, a subdirectory per arm otherwise.
std::filesystem::path arm_dir(const ExperimentConfig& config, const std::string& arm);

int cmd_exp(const CommandOptions& options, std::ostream& out);
int cmd_gen(const CommandOptions& options, std::ostream& out);
int cmd_relabel(const CommandOptions& options, const RelabelOptions& relabel, std::ostream& out);
int cmd_train(const CommandOptions& options, const TrainOptions& train, std::ostream& out);
int cmd_eval(const CommandOptions& options, const EvalOptions& eval, std::ostream& out);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& out);

/// Runs a command, mapping ConfigError to exit 2 and any other failure to exit 3
/// with the message written to `err`.
int run_command(const std::function<int()>& command, std::ostream& err);

}  // namespace herlab
