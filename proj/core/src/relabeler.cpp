#include "herlab/relabeler.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "herlab/error.hpp"
#include "herlab/random.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

const HeldObject& held_or_throw(const Outcome& outcome) {
  if (outcome.is_timeout()) throw Error("cannot relabel a timed-out episode");
  return *outcome.held;
}

std::size_t pick(double u, std::size_t n) {
  return std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
}

std::string map_or_keep(const std::string& phrase, const PromptSpec& prompt) {
  if (prompt.kind != TemplateKind::PreferenceQA) return phrase;
  try {
    return apply_answer_map(phrase, prompt);
  } catch (const UnmappedAnswerError&) {
    return phrase;
  }
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::NameQA: return "name";
    case TemplateKind::ColorQA: return "color";
    case TemplateKind::FoodToyQA: return "foodtoy";
    case TemplateKind::PreferenceQA: return "preference";
  }
  return "name";
}

TemplateKind parse_template_kind(std::string_view text) {
  for (auto k : {TemplateKind::NameQA, TemplateKind::ColorQA, TemplateKind::FoodToyQA,
                 TemplateKind::PreferenceQA}) {
    if (to_string(k) == text) return k;
  }
  throw Error("unknown prompt template '" + std::string(text) +
              "' (expected name, color, foodtoy or preference)");
}

void PromptSpec::validate() const {
  if (exemplars.size() > kMaxExemplars) {
    throw Error("prompt holds " + std::to_string(exemplars.size()) + " exemplars; at most " +
                std::to_string(kMaxExemplars) + " fit in context");
  }
  if (!fewshot && !exemplars.empty()) throw Error("zeroshot prompt cannot carry exemplars");
  if (kind == TemplateKind::PreferenceQA) {
    if (!preferences) throw Error("preference prompt needs a preference structure");
    if (!answer_map.contains("yes") || !answer_map.contains("no")) {
      throw Error("preference prompt needs an answer map covering yes and no");
    }
  }
}

std::string PromptSpec::question() const {
  switch (kind) {
    case TemplateKind::NameQA: return "Q: What is this object? A:";
    case TemplateKind::ColorQA: return "Q: What color is this object? A:";
    case TemplateKind::FoodToyQA: return "Q: Is this food or a toy? A:";
    case TemplateKind::PreferenceQA: {
      const std::string persona = preferences ? preferences->persona : "John Doe";
      return "Q: Would " + persona + " like this? A:";
    }
  }
  return {};
}

std::string PromptSpec::render() const {
  std::string out;
  if (kind == TemplateKind::PreferenceQA && preferences) out += preferences->preamble() + "\n";
  const std::string q = question();
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    out += "[IMG_" + std::to_string(i) + "] " + q + " " + exemplars[i].answer + "\n";
  }
  out += "[IMG_" + std::to_string(exemplars.size()) + "] " + q;
  return out;
}

PromptSpec name_prompt(std::vector<Exemplar> exemplars) {
  PromptSpec p;
  p.kind = TemplateKind::NameQA;
  p.fewshot = !exemplars.empty();
  p.exemplars = std::move(exemplars);
  return p;
}

PromptSpec color_prompt(std::vector<Exemplar> exemplars) {
  PromptSpec p = name_prompt(std::move(exemplars));
  p.kind = TemplateKind::ColorQA;
  return p;
}

PromptSpec food_toy_prompt(std::vector<Exemplar> exemplars) {
  PromptSpec p = name_prompt(std::move(exemplars));
  p.kind = TemplateKind::FoodToyQA;
  return p;
}

PromptSpec preference_prompt(const PreferenceStructure& prefs, std::vector<Exemplar> exemplars) {
  PromptSpec p = name_prompt(std::move(exemplars));
  p.kind = TemplateKind::PreferenceQA;
  p.preferences = prefs;
  p.answer_map = {{"yes", "an object " + prefs.persona + " likes"},
                  {"no", "an object " + prefs.persona + " hates"}};
  return p;
}

std::string apply_answer_map(std::string_view short_answer, const PromptSpec& prompt) {
  const std::string key = to_lower(trim(short_answer));
  if (auto it = prompt.answer_map.find(key); it != prompt.answer_map.end()) return it->second;
  throw UnmappedAnswerError("answer '" + std::string(short_answer) + "' is outside the answer map");
}

std::string truth_token(TemplateKind kind, const HeldObject& held, const PreferenceStructure* prefs) {
  switch (kind) {
    case TemplateKind::NameQA: return held.name;
    case TemplateKind::ColorQA: return held.color;
    case TemplateKind::FoodToyQA: return std::string(to_string(category_of(held.name)));
    case TemplateKind::PreferenceQA:
      if (prefs == nullptr) throw Error("preference truth needs a preference structure");
      return prefs->likes(held.name) ? "likes" : "hates";
  }
  return {};
}

std::vector<std::string> task_vocab(TemplateKind kind, const Catalog& catalog) {
  switch (kind) {
    case TemplateKind::NameQA: return catalog.names();
    case TemplateKind::ColorQA: return catalog.colors;
    case TemplateKind::FoodToyQA: return {"food", "toy"};
    case TemplateKind::PreferenceQA: return {"likes", "hates"};
  }
  return {};
}

std::string row_key(TemplateKind kind, const HeldObject& held) {
  return kind == TemplateKind::ColorQA ? held.color : held.name;
}

std::string truth_answer(TemplateKind kind, const HeldObject& held, const PreferenceStructure* prefs) {
  if (kind == TemplateKind::PreferenceQA) {
    if (prefs == nullptr) throw Error("preference truth needs a preference structure");
    return prefs->likes(held.name) ? "yes" : "no";
  }
  return truth_token(kind, held, prefs);
}

ConfidenceModel calibrated_confidence() {
  return ConfidenceModel{true, BetaParams{8.0, 1.5}, BetaParams{1.5, 4.0}};
}

ConfidenceModel miscalibrated_confidence() {
  return ConfidenceModel{false, BetaParams{4.0, 2.5}, BetaParams{3.6, 2.5}};
}

const NoiseRow* NoiseProfile::find_row(std::string_view key) const {
  for (const auto& r : rows) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

double NoiseProfile::irrelevance(const NoiseRow& row) const {
  return row.p_irrelevant.value_or(p_irrelevant);
}

double NoiseProfile::diagonal(const NoiseRow& row) const {
  for (std::size_t j = 0; j < answers.size(); ++j) {
    if (answers[j] == row.truth) return row.probs[j];
  }
  return 0.0;
}

double NoiseProfile::correct_rate(const NoiseRow& row) const {
  return (1.0 - irrelevance(row)) * diagonal(row);
}

void NoiseProfile::validate() const {
  const std::string where = "noise profile '" + name + "': ";
  if (answers.empty()) throw Error(where + "no answers");
  if (!is_probability(p_irrelevant)) throw Error(where + "p_irrelevant outside [0, 1]");
  if (!is_probability(extraneous_rate)) throw Error(where + "extraneous_rate outside [0, 1]");
  if (extraneous_rate > 0.0 && extraneous_templates.empty()) {
    throw Error(where + "extraneous_rate set without extraneous templates");
  }
  for (const auto& r : rows) {
    if (r.probs.size() != answers.size()) throw Error(where + "row '" + r.key + "' has the wrong width");
    double sum = 0.0;
    for (double p : r.probs) {
      if (!is_probability(p)) throw Error(where + "row '" + r.key + "' has a probability outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(where + "row '" + r.key + "' does not sum to 1");
    const double irr = irrelevance(r);
    if (!is_probability(irr)) throw Error(where + "row '" + r.key + "' p_irrelevant outside [0, 1]");
    if (irr > 0.0 && distractor_vocab.empty()) throw Error(where + "irrelevant labels need distractors");
  }
  for (const auto* beta : {&confidence.correct, &confidence.other}) {
    if (!(beta->alpha > 0.0) || !(beta->beta > 0.0)) throw Error(where + "Beta parameters must be positive");
  }
  if (confidence.calibrated && !(confidence.correct.mean() > confidence.other.mean())) {
    throw Error(where + "a calibrated model must give correct labels higher mean confidence");
  }
}

NoiseProfile fewshot_coverage_profile(const NoiseProfile& base, const std::set<std::string>& exemplar_names,
                                      double k_generalization, const CoverageOptions& options) {
  if (!is_probability(k_generalization) || !is_probability(options.covered_level)) {
    throw Error("coverage levels must lie in [0, 1]");
  }
  std::set<Category> covered_categories;
  for (const auto& n : exemplar_names) {
    if (category_of(n) != Category::None) covered_categories.insert(category_of(n));
  }
  NoiseProfile out = base;
  out.p_irrelevant = options.p_irrelevant;
  out.extraneous_templates.clear();
  out.extraneous_rate = 0.0;
  out.answer_template = options.answer_template;
  out.confidence = calibrated_confidence();
  for (auto& row : out.rows) {
    row.p_irrelevant.reset();
    double level = -1.0;
    if (exemplar_names.contains(row.key)) {
      level = options.covered_level;
    } else if (covered_categories.contains(category_of(row.key))) {
      level = k_generalization;
    }
    if (level < 0.0) continue;

    std::size_t truth_col = out.answers.size();
    double off_mass = 0.0;
    for (std::size_t j = 0; j < out.answers.size(); ++j) {
      if (out.answers[j] == row.truth) {
        truth_col = j;
      } else {
        off_mass += row.probs[j];
      }
    }
    if (truth_col == out.answers.size()) continue;
    const double others = static_cast<double>(out.answers.size() - 1);
    for (std::size_t j = 0; j < out.answers.size(); ++j) {
      if (j == truth_col) {
        row.probs[j] = level;
      } else if (off_mass > 0.0) {
        row.probs[j] = (1.0 - level) * row.probs[j] / off_mass;
      } else {
        row.probs[j] = others > 0.0 ? (1.0 - level) / others : 0.0;
      }
    }
  }
  return out;
}

Label OracleRelabeler::relabel(const Outcome& outcome, const PromptSpec& prompt,
                               std::uint64_t /*episode_seed*/) const {
  const HeldObject& held = held_or_throw(outcome);
  switch (prompt.kind) {
    case TemplateKind::NameQA: return Label{held.name, 1.0};
    case TemplateKind::ColorQA:
      if (held.color.empty()) throw TemplateMismatchError("object '" + held.name + "' has no color");
      return Label{held.color + " object", 1.0};
    case TemplateKind::FoodToyQA: {
      const Category c = category_of(held.name);
      if (c == Category::None) {
        throw TemplateMismatchError("object '" + held.name + "' is neither food nor a toy");
      }
      return Label{std::string(to_string(c)), 1.0};
    }
    case TemplateKind::PreferenceQA: {
      if (!prompt.preferences) throw TemplateMismatchError("preference prompt without preferences");
      const std::string answer = prompt.preferences->likes(held.name) ? "yes" : "no";
      return Label{apply_answer_map(answer, prompt), 1.0};
    }
  }
  return Label{};
}

NoisyRelabeler::NoisyRelabeler(NoiseProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
  std::ostringstream desc;
  desc << std::setprecision(17) << to_string(profile_.kind) << '|' << profile_.p_irrelevant << '|'
       << profile_.answer_template << '|' << profile_.extraneous_rate << '|'
       << profile_.confidence.calibrated << profile_.confidence.correct.alpha << ','
       << profile_.confidence.correct.beta << ',' << profile_.confidence.other.alpha << ','
       << profile_.confidence.other.beta;
  for (const auto& a : profile_.answers) desc << '|' << a;
  for (const auto& d : profile_.distractor_vocab) desc << '|' << d;
  for (const auto& t : profile_.extraneous_templates) desc << '|' << t;
  for (const auto& r : profile_.rows) {
    desc << '|' << r.key << ':' << r.truth << ':' << r.p_irrelevant.value_or(-1.0);
    for (double p : r.probs) desc << ',' << p;
  }
  std::ostringstream fp;
  fp << profile_.name << '@' << std::hex << std::setw(16) << std::setfill('0') << fnv1a(desc.str());
  fingerprint_ = fp.str();
}

Label NoisyRelabeler::relabel(const Outcome& outcome, const PromptSpec& prompt,
                              std::uint64_t episode_seed) const {
  const HeldObject& held = held_or_throw(outcome);
  if (prompt.kind != profile_.kind) {
    throw TemplateMismatchError("profile '" + profile_.name + "' answers " +
                                std::string(to_string(profile_.kind)) + " prompts, not " +
                                std::string(to_string(prompt.kind)));
  }
  const std::string key = row_key(profile_.kind, held);
  const NoiseRow* row = profile_.find_row(key);
  if (row == nullptr) {
    throw TemplateMismatchError("profile '" + profile_.name + "' has no row for '" + key + "'");
  }

  // A fixed number of uniforms per call keeps draws aligned across profiles that
  // share episode seeds.
  Engine rng(derive_seed(episode_seed, "relabel"));
  const double u_irrelevant = uniform01(rng);
  const double u_pick = uniform01(rng);
  const double u_wrap = uniform01(rng);
  const double u_wrap_pick = uniform01(rng);

  std::string phrase;
  bool correct = false;
  if (u_irrelevant < profile_.irrelevance(*row)) {
    phrase = profile_.distractor_vocab[pick(u_pick, profile_.distractor_vocab.size())];
  } else {
    std::size_t col = row->probs.size() - 1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < row->probs.size(); ++j) {
      cumulative += row->probs[j];
      if (u_pick < cumulative) {
        col = j;
        break;
      }
    }
    while (row->probs[col] == 0.0 && col > 0) --col;
    const std::string& answer = profile_.answers[col];
    correct = answer == row->truth;
    phrase = format_phrase(profile_.answer_template, answer);
    if (u_wrap < profile_.extraneous_rate) {
      const auto& wrapper = profile_.extraneous_templates[pick(u_wrap_pick, profile_.extraneous_templates.size())];
      phrase = format_phrase(wrapper, phrase);
    }
  }
  const BetaParams& beta = correct ? profile_.confidence.correct : profile_.confidence.other;
  Label label;
  label.text = map_or_keep(phrase, prompt);
  label.confidence = beta_sample(rng, beta.alpha, beta.beta);
  return label;
}

}  // namespace herlab
