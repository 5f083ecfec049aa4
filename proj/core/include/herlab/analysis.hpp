#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace herlab {

enum class LabelClass { Correct, Wrong, Irrelevant };

std::string_view to_string(LabelClass c);

/// Correct when the truth token occurs in the tokenized text, otherwise Wrong when
/// any other vocabulary token occurs, otherwise Irrelevant.
LabelClass classify_label(std::string_view text, std::span<const std::string> vocab,
                          std::string_view truth);

struct ClassCounts {
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::size_t irrelevant = 0;

  std::size_t n() const { return correct + wrong + irrelevant; }
  void add(LabelClass c);
  double accuracy() const;
  /// Undefined when no label is task-relevant.
  std::optional<double> precision() const;
};

/// One relabeled trajectory as seen by the analyses.
struct ScoredLabel {
  std::string text;     // the instruction built from the label
  std::string truth;    // canonical truth token
  std::string object;   // held object name, for per-object breakdowns
  double confidence = 1.0;
  std::size_t episode_index = 0;
};

struct ObjectQuality {
  std::string object;
  ClassCounts counts;
};

struct LabelQualityReport {
  std::size_t n = 0;
  ClassCounts counts;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::vector<ObjectQuality> per_object;  // sorted by object name
};

/// Throws herlab::Error on an empty input.
LabelQualityReport quality_report(std::span<const ScoredLabel> labels, std::span<const std::string> vocab);

/// Indices of the ceil(keep_fraction * n) most confident items, ties broken by
/// ascending episode index, returned in ascending index order.
/// Throws herlab::Error unless keep_fraction lies in (0, 1].
std::vector<std::size_t> select_most_confident(std::span<const double> confidence,
                                               std::span<const std::size_t> episode_index,
                                               double keep_fraction);

struct SweepPoint {
  double keep_fraction = 1.0;
  std::size_t kept = 0;
  std::optional<double> precision;
  double accuracy = 0.0;
};

/// Precision of the retained subset at keep fractions 1.0, 0.9, ..., 0.1. Needs n >= 10.
std::vector<SweepPoint> decile_sweep(std::span<const ScoredLabel> labels, std::span<const std::string> vocab);

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  ClassCounts counts;
};

/// Uniform bins on [0, 1]; confidence 1.0 falls in the last bin. Needs n_bins >= 2.
std::vector<CalibrationBin> calibration_histogram(std::span<const ScoredLabel> labels,
                                                  std::span<const std::string> vocab, int n_bins);

/// Lowercased, punctuation-stripped, stopword-filtered token counts; descending
/// count with alphabetical ties.
std::vector<std::pair<std::string, std::size_t>> unigram_frequencies(std::span<const std::string> texts);

/// Tokens dropped by unigram_frequencies.
std::span<const std::string_view> stopwords();

struct TaskQuality {
  std::string task;
  std::size_t mentions = 0;    // labels containing the task token
  std::size_t truths = 0;      // labels whose truth is the task token
  std::size_t correct = 0;     // both
  double precision = 0.0;      // correct / mentions, 0 when nothing mentions the task
  double accuracy = 0.0;       // correct / truths
};

/// Per-task label quality for each vocabulary token.
std::vector<TaskQuality> task_quality(std::span<const ScoredLabel> labels, std::span<const std::string> vocab);

}  // namespace herlab
