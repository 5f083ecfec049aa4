#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "herlab/config.hpp"
#include "herlab/pipeline.hpp"
#include "herlab/regression.hpp"

namespace herlab {

/// Everything derived from the config that the stages share.
struct ExperimentSetup {
  Catalog catalog;
  std::optional<PreferenceStructure> prefs;
  TemplateKind kind = TemplateKind::NameQA;
  std::vector<GoalSpec> tasks;

  const PreferenceStructure* preferences() const { return prefs ? &*prefs : nullptr; }
  std::vector<std::string> vocab() const { return task_vocab(kind, catalog); }
};

/// One relabel-filter-train-evaluate branch over the shared trajectories.
struct ArmSpec {
  std::string name;
  std::string relabeler;  // resolved: oracle, remote or a preset name
  double keep_fraction = 1.0;
};

struct ArmResult {
  ArmSpec spec;
  RelabelStats stats;
  std::vector<LabeledTrajectory> labeled;
  std::vector<char> kept;  // parallel to `labeled`
  LabelQualityReport quality;  // over kept labels
  std::vector<TaskQuality> task_quality;
  PolicyParams policy;
  EvalReport eval;

  std::vector<LabeledTrajectory> training_set() const;
};

struct ExperimentResult {
  std::vector<Trajectory> trajectories;
  std::vector<ArmResult> arms;
  std::optional<RegressionFit> regression;
};

ExperimentSetup make_setup(const ExperimentConfig& config);

/// The arms a config runs: one for the single experiments, four (zeroshot,
/// zeroshot-filtered, fewshot, fewshot-filtered) for noise-analysis.
std::vector<ArmSpec> experiment_arms(const ExperimentConfig& config);

/// Resolves "auto" to the experiment's shipped preset.
std::string resolve_relabeler(const ExperimentConfig& config, const std::string& name);

std::unique_ptr<Relabeler> make_relabeler(const ExperimentConfig& config, const std::string& resolved);
PromptSpec make_prompt(const ExperimentConfig& config, const ExperimentSetup& setup, const std::string& resolved);

std::vector<Trajectory> stage_generate(const ExperimentConfig& config, const ExperimentSetup& setup, int workers);

struct RelabelStageResult {
  RelabelResult relabeled;
  std::vector<char> kept;
};
RelabelStageResult stage_relabel(const ExperimentConfig& config, const ExperimentSetup& setup, const ArmSpec& arm,
                                 std::span<const Trajectory> trajectories, LabelCache* cache, int workers);

PolicyParams stage_train(const ExperimentConfig& config, std::span<const LabeledTrajectory> training_set);

EvalReport stage_evaluate(const ExperimentConfig& config, const ExperimentSetup& setup, const PolicyParams& policy,
                          int workers);

/// Regression points pairing each task's label precision and accuracy with its success.
std::vector<RegressionPoint> regression_points(std::span<const TaskQuality> quality, const EvalReport& eval);

/// Runs every stage in memory. Stage failures surface as StageError tagged with the stage.
ExperimentResult run_experiment(const ExperimentConfig& config, int workers = 1);

}  // namespace herlab
