#pragma once

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "herlab/analysis.hpp"
#include "herlab/catalog.hpp"
#include "herlab/env.hpp"
#include "herlab/policy.hpp"
#include "herlab/relabeler.hpp"
#include "herlab/trainer.hpp"

namespace herlab {

inline constexpr std::string_view kGenericInstruction = "Lift an object";

struct Trajectory {
  std::size_t episode_index = 0;
  std::uint64_t episode_seed = 0;
  std::string instruction;
  RoomInstance room;
  std::size_t chosen_index = 0;
  Outcome outcome;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct LabeledTrajectory {
  Trajectory trajectory;
  Label label;
  std::string instruction;  // post-processed, starts with "Lift a "
};

std::uint64_t episode_seed(std::uint64_t global_seed, std::size_t episode_index);

/// n episodes of the generic instruction. Deterministic in the global seed and
/// independent of `workers`.
std::vector<Trajectory> generate_batch(const Catalog& catalog, const EnvConfig& env,
                                       const PolicyParams& policy, std::size_t n, ActMode mode,
                                       std::uint64_t global_seed, int workers = 1);

/// Rebuilds an episode from its seed and checks it against the recorded choice.
Trajectory replay_trajectory(const Catalog& catalog, const EnvConfig& env, std::size_t episode_index,
                             std::uint64_t seed, std::size_t chosen_index);

/// Label cache keyed on (outcome identity, prompt, relabeler configuration, episode seed).
/// Concurrent inserts of the same key are idempotent.
class LabelCache {
 public:
  static std::uint64_t key(const Outcome& outcome, const PromptSpec& prompt, const Relabeler& relabeler,
                           std::uint64_t episode_seed);

  std::optional<Label> find(std::uint64_t key) const;
  void insert(std::uint64_t key, const Label& label);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, Label> entries_;
};

struct RelabelStats {
  std::size_t input = 0;
  std::size_t timeouts = 0;
  std::size_t postprocess_drops = 0;
  std::size_t labeled = 0;
  std::size_t cache_hits = 0;
  std::size_t invocations = 0;

  bool balanced() const { return input == labeled + timeouts + postprocess_drops; }
};

struct RelabelResult {
  std::vector<LabeledTrajectory> labeled;
  RelabelStats stats;
};

/// Drops timeouts, relabels the rest and post-processes each label. Labels that are
/// empty after post-processing drop their trajectory and are counted.
RelabelResult relabel_batch(std::span<const Trajectory> trajectories, const PromptSpec& prompt,
                            const Relabeler& relabeler, LabelCache* cache = nullptr, int workers = 1);

/// The ceil(keep_fraction * n) most confident items in their original order; ties go
/// to the lower episode index. Throws herlab::Error for an empty dataset or
/// keep_fraction outside (0, 1].
std::vector<LabeledTrajectory> filter_by_confidence(std::span<const LabeledTrajectory> dataset,
                                                    double keep_fraction);

std::vector<TrainExample> to_train_examples(std::span<const LabeledTrajectory> dataset);

/// Analysis view of a labeled dataset under the given template.
std::vector<ScoredLabel> scored_labels(std::span<const LabeledTrajectory> dataset, TemplateKind kind,
                                       const PreferenceStructure* prefs = nullptr);

struct TaskResult {
  std::string task;
  std::string instruction;
  std::size_t n = 0;
  std::size_t successes = 0;
  double rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct EvalReport {
  std::vector<TaskResult> tasks;
  double mean_success = 0.0;

  const TaskResult* find(std::string_view task) const;
  /// Mean rate over the named tasks. Throws herlab::Error if one is missing.
  double mean_over(std::span<const std::string> task_ids) const;
};

/// Wilson score interval at the given normal quantile (default 95%).
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct EvalConfig {
  std::size_t rollouts = 10000;
  ActMode mode = ActMode::Sample;
};

/// Rollouts split evenly across tasks on fresh rooms; every task sees the same rooms.
EvalReport evaluate(const PolicyParams& policy, const Catalog& catalog, const EnvConfig& env,
                    std::span<const GoalSpec> tasks, const EvalConfig& config, std::uint64_t global_seed,
                    int workers = 1);

/// The experiment's task instructions: all names, all colors (Attributes evaluates
/// names and colors), food and toy, or likes and hates.
std::vector<GoalSpec> default_tasks(const Catalog& catalog, const PreferenceStructure* prefs = nullptr);

}  // namespace herlab
