#include "herlab/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "herlab/error.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

constexpr std::array<std::string_view, 23> kStopwords = {
    "a",  "an", "and", "are", "as", "at", "be", "but",  "by",   "for", "from", "in",
    "is", "it", "its", "of",  "on", "or", "that", "the", "this", "to", "with",
};

bool contains(const std::vector<std::string>& tokens, std::string_view t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

LabelClass classify_tokens(const std::vector<std::string>& tokens, std::span<const std::string> vocab,
                           std::string_view truth) {
  if (contains(tokens, truth)) return LabelClass::Correct;
  for (const auto& v : vocab) {
    if (v != truth && contains(tokens, v)) return LabelClass::Wrong;
  }
  return LabelClass::Irrelevant;
}

}  // namespace

std::string_view to_string(LabelClass c) {
  switch (c) {
    case LabelClass::Correct: return "correct";
    case LabelClass::Wrong: return "wrong";
    case LabelClass::Irrelevant: return "irrelevant";
  }
  return "irrelevant";
}

LabelClass classify_label(std::string_view text, std::span<const std::string> vocab,
                          std::string_view truth) {
  return classify_tokens(tokenize(text), vocab, truth);
}

void ClassCounts::add(LabelClass c) {
  switch (c) {
    case LabelClass::Correct: ++correct; break;
    case LabelClass::Wrong: ++wrong; break;
    case LabelClass::Irrelevant: ++irrelevant; break;
  }
}

double ClassCounts::accuracy() const {
  return n() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n());
}

std::optional<double> ClassCounts::precision() const {
  if (correct + wrong == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(correct + wrong);
}

LabelQualityReport quality_report(std::span<const ScoredLabel> labels, std::span<const std::string> vocab) {
  if (labels.empty()) throw Error("label quality report needs at least one label");
  LabelQualityReport report;
  std::map<std::string, ClassCounts> per_object;
  for (const auto& l : labels) {
    const LabelClass c = classify_label(l.text, vocab, l.truth);
    report.counts.add(c);
    per_object[l.object].add(c);
  }
  report.n = labels.size();
  report.accuracy = report.counts.accuracy();
  report.precision = report.counts.precision();
  for (const auto& [object, counts] : per_object) report.per_object.push_back({object, counts});
  return report;
}

std::vector<std::size_t> select_most_confident(std::span<const double> confidence,
                                               std::span<const std::size_t> episode_index,
                                               double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw Error("keep_fraction must lie in (0, 1]");
  }
  if (confidence.size() != episode_index.size()) throw Error("confidence and index lists differ in length");
  const std::size_t n = confidence.size();
  const auto keep = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(n), std::ceil(keep_fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (confidence[a] != confidence[b]) return confidence[a] > confidence[b];
    return episode_index[a] < episode_index[b];
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<SweepPoint> decile_sweep(std::span<const ScoredLabel> labels, std::span<const std::string> vocab) {
  if (labels.size() < 10) throw Error("decile sweep needs at least 10 labels");
  std::vector<double> confidence;
  std::vector<std::size_t> episodes;
  std::vector<LabelClass> classes;
  for (const auto& l : labels) {
    confidence.push_back(l.confidence);
    episodes.push_back(l.episode_index);
    classes.push_back(classify_label(l.text, vocab, l.truth));
  }
  std::vector<SweepPoint> out;
  for (int decile = 10; decile >= 1; --decile) {
    const double keep = decile / 10.0;
    ClassCounts counts;
    for (std::size_t i : select_most_confident(confidence, episodes, keep)) counts.add(classes[i]);
    out.push_back(SweepPoint{keep, counts.n(), counts.precision(), counts.accuracy()});
  }
  return out;
}

std::vector<CalibrationBin> calibration_histogram(std::span<const ScoredLabel> labels,
                                                  std::span<const std::string> vocab, int n_bins) {
  if (n_bins < 2) throw Error("calibration histogram needs at least 2 bins");
  std::vector<CalibrationBin> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / n_bins;
    bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / n_bins;
  }
  for (const auto& l : labels) {
    const double c = std::clamp(l.confidence, 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(c * n_bins), bins.size() - 1);
    bins[b].counts.add(classify_label(l.text, vocab, l.truth));
  }
  return bins;
}

std::span<const std::string_view> stopwords() { return kStopwords; }

std::vector<std::pair<std::string, std::size_t>> unigram_frequencies(std::span<const std::string> texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& token : tokenize(text)) {
      if (std::find(kStopwords.begin(), kStopwords.end(), token) == kStopwords.end()) ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<TaskQuality> task_quality(std::span<const ScoredLabel> labels, std::span<const std::string> vocab) {
  std::vector<TaskQuality> out;
  out.reserve(vocab.size());
  for (const auto& v : vocab) out.push_back(TaskQuality{v});
  for (const auto& l : labels) {
    const auto tokens = tokenize(l.text);
    for (auto& q : out) {
      const bool mentions = contains(tokens, q.task);
      const bool truth = l.truth == q.task;
      q.mentions += mentions;
      q.truths += truth;
      q.correct += mentions && truth;
    }
  }
  for (auto& q : out) {
    q.precision = q.mentions == 0 ? 0.0 : static_cast<double>(q.correct) / static_cast<double>(q.mentions);
    q.accuracy = q.truths == 0 ? 0.0 : static_cast<double>(q.correct) / static_cast<double>(q.truths);
  }
  return out;
}

}  // namespace herlab
