#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "herlab/analysis.hpp"
#include "herlab/pipeline.hpp"

namespace herlab {

inline constexpr int kArtifactVersion = 1;

/// Hash of the episode identity: seed, room layout, choice and outcome.
std::uint64_t trajectory_hash(const Trajectory& t);

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories);

/// Reads a trajectories file and rebuilds every episode from its seed. Throws
/// herlab::Error when a record does not replay to the recorded room and outcome.
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path, const Catalog& catalog,
                                          const EnvConfig& env);

struct LabelRecord {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  std::size_t chosen = 0;
  std::uint64_t traj_hash = 0;
  std::string experiment;
  std::string template_kind;
  std::string object;
  std::string color;
  std::string truth;
  std::string text;
  std::string instruction;
  double confidence = 1.0;
  bool fallback = false;
  bool kept = true;
  LabelClass label_class = LabelClass::Irrelevant;
};

std::vector<LabelRecord> make_label_records(std::span<const LabeledTrajectory> labeled, std::span<const char> kept,
                                            const Catalog& catalog, TemplateKind kind,
                                            const PreferenceStructure* prefs);

void write_labels(const std::filesystem::path& path, std::span<const LabelRecord> records);

/// Throws herlab::Error for a missing, malformed or empty file.
std::vector<LabelRecord> read_labels(const std::filesystem::path& path);

/// Pairs kept label records with their trajectories, checking the trajectory hash.
std::vector<LabeledTrajectory> attach_labels(std::span<const LabelRecord> records,
                                             std::span<const Trajectory> trajectories);

std::vector<ScoredLabel> scored_labels(std::span<const LabelRecord> records, bool kept_only = true);

/// Task vocabulary of the experiment and template the records were produced under.
std::vector<std::string> record_vocab(std::span<const LabelRecord> records);

void write_results_csv(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_results_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace herlab
