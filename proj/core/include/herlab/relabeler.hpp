#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "herlab/catalog.hpp"
#include "herlab/env.hpp"

namespace herlab {

enum class TemplateKind { NameQA, ColorQA, FoodToyQA, PreferenceQA };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template_kind(std::string_view text);

inline constexpr std::size_t kMaxExemplars = 32;

struct Exemplar {
  HeldObject held;
  std::string answer;
};

struct PromptSpec {
  TemplateKind kind = TemplateKind::NameQA;
  bool fewshot = false;
  std::vector<Exemplar> exemplars;
  std::optional<PreferenceStructure> preferences;
  std::map<std::string, std::string> answer_map;

  /// Throws herlab::Error when the exemplar count exceeds 32 or a PreferenceQA
  /// prompt lacks a preference structure or an answer map covering yes and no.
  void validate() const;
  std::string question() const;
  /// Full prompt text: optional preamble, exemplar lines, then the query line.
  std::string render() const;
};

PromptSpec name_prompt(std::vector<Exemplar> exemplars = {});
PromptSpec color_prompt(std::vector<Exemplar> exemplars = {});
PromptSpec food_toy_prompt(std::vector<Exemplar> exemplars = {});
PromptSpec preference_prompt(const PreferenceStructure& prefs, std::vector<Exemplar> exemplars = {});

/// Maps the lowercased, trimmed short answer through the prompt's answer map.
/// Throws UnmappedAnswerError for answers outside the map.
std::string apply_answer_map(std::string_view short_answer, const PromptSpec& prompt);

/// Canonical token that a correct label must contain: the name, color, food/toy, or likes/hates.
std::string truth_token(TemplateKind kind, const HeldObject& held,
                        const PreferenceStructure* prefs = nullptr);
/// All tokens that make a label task-relevant for the template over this catalog.
std::vector<std::string> task_vocab(TemplateKind kind, const Catalog& catalog);

/// Identity a noise profile keys its rows on: the color for ColorQA, the name otherwise.
std::string row_key(TemplateKind kind, const HeldObject& held);
/// The short answer a perfect relabeler gives: name, color, food/toy, or yes/no.
std::string truth_answer(TemplateKind kind, const HeldObject& held,
                         const PreferenceStructure* prefs = nullptr);

struct Label {
  std::string text;  // goal phrase before the "Lift a " prefix
  double confidence = 1.0;
  bool confidence_fallback = false;

  friend bool operator==(const Label&, const Label&) = default;
};

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  double mean() const { return alpha / (alpha + beta); }
};

struct ConfidenceModel {
  bool calibrated = false;
  BetaParams correct;
  BetaParams other;
};

ConfidenceModel calibrated_confidence();
ConfidenceModel miscalibrated_confidence();

struct NoiseRow {
  std::string key;
  std::string truth;           // the correct answer for this row
  std::vector<double> probs;   // distribution over NoiseProfile::answers, given relevance
  std::optional<double> p_irrelevant;  // overrides the profile-wide value
};

struct NoiseProfile {
  std::string name;
  TemplateKind kind = TemplateKind::NameQA;
  std::vector<std::string> answers;
  std::vector<NoiseRow> rows;
  double p_irrelevant = 0.0;
  std::vector<std::string> distractor_vocab;
  std::string answer_template = "{}";
  std::vector<std::string> extraneous_templates;
  double extraneous_rate = 0.0;
  ConfidenceModel confidence;

  const NoiseRow* find_row(std::string_view key) const;
  double irrelevance(const NoiseRow& row) const;
  /// Probability of a correct answer given relevance.
  double diagonal(const NoiseRow& row) const;
  /// Probability that a label for this row is correct.
  double correct_rate(const NoiseRow& row) const;
  /// Throws herlab::Error when a row is not a distribution or a probability is out of range.
  void validate() const;
};

/// Fewshot prompting: irrelevance collapses, exemplar-covered rows become nearly
/// always correct, uncovered rows whose category has a covered exemplar get
/// correct mass `k_generalization`, and confidence becomes calibrated.
struct CoverageOptions {
  double covered_level = 0.98;
  double p_irrelevant = 0.005;
  std::string answer_template = "{}";
};

NoiseProfile fewshot_coverage_profile(const NoiseProfile& base, const std::set<std::string>& exemplar_names,
                                      double k_generalization, const CoverageOptions& options = {});

class Relabeler {
 public:
  virtual ~Relabeler() = default;
  /// Pure in (outcome, prompt, episode_seed) and the relabeler's own configuration.
  /// Throws herlab::Error for a timed-out outcome.
  virtual Label relabel(const Outcome& outcome, const PromptSpec& prompt,
                        std::uint64_t episode_seed) const = 0;
  /// Identifies the configuration for cache keys and artifacts.
  virtual std::string fingerprint() const = 0;
};

class OracleRelabeler final : public Relabeler {
 public:
  Label relabel(const Outcome& outcome, const PromptSpec& prompt,
                std::uint64_t episode_seed) const override;
  std::string fingerprint() const override { return "oracle"; }
};

class NoisyRelabeler final : public Relabeler {
 public:
  explicit NoisyRelabeler(NoiseProfile profile);

  Label relabel(const Outcome& outcome, const PromptSpec& prompt,
                std::uint64_t episode_seed) const override;
  std::string fingerprint() const override { return fingerprint_; }
  const NoiseProfile& profile() const noexcept { return profile_; }

 private:
  NoiseProfile profile_;
  std::string fingerprint_;
};

}  // namespace herlab
