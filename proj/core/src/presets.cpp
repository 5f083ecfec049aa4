#include "herlab/presets.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "herlab/error.hpp"

namespace herlab {
namespace {

struct RowSpec {
  std::string key;
  double p_irrelevant = 0.0;
  double diagonal = 1.0;
  std::map<std::string, double> steals;  // answer -> probability given relevance
};

// Remaining mass after the diagonal and the steals is spread evenly over the other answers.
NoiseRow make_row(const std::vector<std::string>& answers, const RowSpec& spec,
                  std::optional<std::string> truth = std::nullopt, bool override_irrelevance = true) {
  NoiseRow row;
  row.key = spec.key;
  row.truth = truth.value_or(spec.key);
  if (override_irrelevance) row.p_irrelevant = spec.p_irrelevant;
  row.probs.assign(answers.size(), 0.0);
  double assigned = 0.0;
  std::size_t free = 0;
  for (std::size_t j = 0; j < answers.size(); ++j) {
    if (answers[j] == row.truth) {
      row.probs[j] = spec.diagonal;
    } else if (auto it = spec.steals.find(answers[j]); it != spec.steals.end()) {
      row.probs[j] = it->second;
    } else {
      ++free;
      continue;
    }
    assigned += row.probs[j];
  }
  const double rest = std::max(0.0, 1.0 - assigned);
  for (std::size_t j = 0; j < answers.size(); ++j) {
    const bool is_free = answers[j] != row.truth && !spec.steals.contains(answers[j]);
    if (is_free) row.probs[j] = free > 0 ? rest / static_cast<double>(free) : 0.0;
  }
  if (free == 0 && rest > 0.0) {
    for (std::size_t j = 0; j < answers.size(); ++j) {
      if (answers[j] == row.truth) row.probs[j] += rest;
    }
  }
  return row;
}

const std::vector<std::string> kNameDistractors = {
    "a cube",
    "it is a cube that is a child of the camera",
    "it is a cube that is a child of a camera",
    "a box",
    "it is a cube",
    "a yellow ray",
    "a 3d model",
    "a room with a floor",
    "a wall",
    "a shelf",
};

NoiseProfile names_zeroshot() {
  NoiseProfile p;
  p.name = "names-zeroshot";
  p.kind = TemplateKind::NameQA;
  p.answers = names_catalog().names();
  p.answer_template = "a {}";
  p.extraneous_templates = {"it is {}", "its {}", "a 3d model of {}"};
  p.extraneous_rate = 0.35;
  p.distractor_vocab = kNameDistractors;
  p.confidence = miscalibrated_confidence();
  const std::vector<RowSpec> rows = {
      {"table", 0.27, 0.67, {{"book", 0.30}}},
      {"chair", 0.21, 0.92, {}},
      {"book", 0.97, 0.92, {}},
      {"basketball", 0.01, 0.99, {}},
      {"racket", 0.80, 0.90, {}},
      {"plane", 0.05, 0.94, {}},
      {"car", 0.17, 0.90, {}},
      {"banana", 0.02, 0.68, {{"carrot", 0.30}}},
      {"carrot", 0.96, 0.90, {}},
      {"pear", 0.17, 0.93, {}},
  };
  for (const auto& r : rows) p.rows.push_back(make_row(p.answers, r));
  return p;
}

NoiseProfile names_fewshot() {
  NoiseProfile p;
  p.name = "names-fewshot";
  p.kind = TemplateKind::NameQA;
  p.answers = names_catalog().names();
  p.p_irrelevant = 0.005;
  p.distractor_vocab = {"a cube", "a box"};
  p.confidence = calibrated_confidence();
  for (const auto& name : p.answers) {
    RowSpec r{name, 0.0, 0.999, {}};
    if (name == "racket") r = {name, 0.0, 0.0, {{"basketball", 1.0}}};
    if (name == "plane") r = {name, 0.0, 0.35, {{"car", 0.64}}};
    if (name == "car") r = {name, 0.0, 0.35, {{"plane", 0.64}}};
    p.rows.push_back(make_row(p.answers, r, std::nullopt, false));
  }
  return p;
}

NoiseProfile names_detector() {
  NoiseProfile p;
  p.name = "names-detector";
  p.kind = TemplateKind::NameQA;
  p.answers = {"basketball", "book", "chair", "table"};
  const std::map<std::string, double> base = {
      {"basketball", 0.13}, {"book", 0.24}, {"chair", 0.15}, {"table", 0.48}};
  const std::map<std::string, double> hit = {
      {"basketball", 0.09}, {"book", 0.30}, {"chair", 0.12}, {"table", 0.33}};
  p.answer_template = "a {}";
  p.p_irrelevant = 0.03;
  p.distractor_vocab = {"nothing"};
  p.confidence = miscalibrated_confidence();
  for (const auto& name : names_catalog().names()) {
    NoiseRow row;
    row.key = name;
    row.truth = name;
    if (auto h = hit.find(name); h != hit.end()) {
      const double others = 1.0 - base.at(name);
      for (const auto& a : p.answers) {
        row.probs.push_back(a == name ? h->second : (1.0 - h->second) * base.at(a) / others);
      }
    } else {
      for (const auto& a : p.answers) row.probs.push_back(base.at(a));
    }
    p.rows.push_back(std::move(row));
  }
  return p;
}

NoiseProfile attributes_name() {
  NoiseProfile p;
  p.name = "attributes-name";
  p.kind = TemplateKind::NameQA;
  p.answers = attributes_catalog().names();
  p.answer_template = "a {}";
  p.p_irrelevant = 0.05;
  p.distractor_vocab = {"a cube", "a box", "a toy"};
  p.confidence = miscalibrated_confidence();
  for (const auto& name : p.answers) {
    RowSpec r{name, 0.0, 0.95, {}};
    if (name == "racket") r = {name, 0.0, 0.45, {{"basketball", 0.50}}};
    p.rows.push_back(make_row(p.answers, r, std::nullopt, false));
  }
  return p;
}

NoiseProfile attributes_color() {
  NoiseProfile p;
  p.name = "attributes-color";
  p.kind = TemplateKind::ColorQA;
  p.answers = attributes_catalog().colors;
  p.answer_template = "{} object";
  p.p_irrelevant = 0.05;
  p.distractor_vocab = {"a cube", "a box", "a toy"};
  p.confidence = miscalibrated_confidence();
  for (const auto& color : p.answers) {
    RowSpec r{color, 0.0, 0.93, {}};
    if (color == "pink") r = {color, 0.0, 0.45, {{"red", 0.50}}};
    p.rows.push_back(make_row(p.answers, r, std::nullopt, false));
  }
  return p;
}

NoiseProfile categories_zeroshot() {
  NoiseProfile p;
  p.name = "categories-zeroshot";
  p.kind = TemplateKind::FoodToyQA;
  p.answers = {"food", "toy"};
  p.answer_template = "its a {}";
  p.extraneous_templates = {"{} but its also food", "{} but it can be used as food"};
  p.extraneous_rate = 0.01;
  p.p_irrelevant = 0.11;
  p.distractor_vocab = {"its both", "both", "it is both"};
  p.confidence = miscalibrated_confidence();
  for (const auto& name : categories_catalog().names()) {
    const bool food = category_of(name) == Category::Food;
    const std::string truth(to_string(category_of(name)));
    RowSpec r{name, 0.0, food ? 0.04 : 0.985, {}};
    p.rows.push_back(make_row(p.answers, r, truth, false));
  }
  return p;
}

NoiseProfile preferences(PreferenceKind kind) {
  const PreferenceStructure prefs = make_preferences(kind);
  // Toy rows come from the canonical-coloring relabeling accuracies; the food rows
  // were not reported and are set to comparable values.
  const std::map<std::string, double> aligned = {
      {"car", 0.91},  {"dice", 0.97},   {"plane", 0.85},  {"robot", 0.96}, {"train", 0.87},
      {"pear", 0.90}, {"banana", 0.94}, {"carrot", 0.93}, {"lemon", 0.90}, {"grapes", 0.92}};
  const std::map<std::string, double> arbitrary = {
      {"car", 0.46},    {"dice", 0.94},  {"plane", 0.85},  {"robot", 0.70}, {"train", 0.59},
      {"carrot", 0.86}, {"lemon", 0.78}, {"banana", 0.88}, {"grapes", 0.52}, {"pear", 0.55}};
  const auto& correct = kind == PreferenceKind::Aligned ? aligned : arbitrary;

  NoiseProfile p;
  p.name = std::string("preferences-") + std::string(to_string(kind));
  p.kind = TemplateKind::PreferenceQA;
  p.answers = {"yes", "no"};
  p.p_irrelevant = 0.02;
  p.distractor_vocab = {"maybe", "i dont know", "not sure"};
  p.confidence = calibrated_confidence();
  for (const auto& name : preferences_catalog().names()) {
    const std::string truth = prefs.likes(name) ? "yes" : "no";
    p.rows.push_back(make_row(p.answers, RowSpec{name, 0.0, correct.at(name), {}}, truth, false));
  }
  return p;
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kCategoryExemplarPairs = {{
    {"carrot", "robot"}, {"lemon", "dice"}, {"plane", "banana"}, {"grapes", "car"}, {"train", "pear"},
}};

}  // namespace

std::vector<std::string> preset_names() {
  return {"names-zeroshot",       "names-fewshot",        "names-detector",       "attributes-name",
          "attributes-color",     "categories-zeroshot",  "categories-fewshot-1", "categories-fewshot-2",
          "categories-fewshot-3", "categories-fewshot-4", "categories-fewshot-5", "preferences-aligned",
          "preferences-arbitrary"};
}

bool preset_is_fewshot(std::string_view name) {
  return name == "fewshot" || name == "names-fewshot" || name.starts_with("categories-fewshot-") ||
         name.starts_with("preferences-");
}

NoiseProfile make_preset(std::string_view name, double k_generalization) {
  if (name == "names-zeroshot" || name == "zeroshot") return names_zeroshot();
  if (name == "names-fewshot" || name == "fewshot") return names_fewshot();
  if (name == "names-detector" || name == "detector") return names_detector();
  if (name == "attributes-name") return attributes_name();
  if (name == "attributes-color") return attributes_color();
  if (name == "categories-zeroshot") return categories_zeroshot();
  if (name == "preferences-aligned") return preferences(PreferenceKind::Aligned);
  if (name == "preferences-arbitrary") return preferences(PreferenceKind::Arbitrary);
  constexpr std::string_view fewshot_prefix = "categories-fewshot-";
  if (name.starts_with(fewshot_prefix) && name.size() == fewshot_prefix.size() + 1) {
    const int k = name.back() - '0';
    if (k >= 1 && k <= 5) {
      NoiseProfile p = fewshot_coverage_profile(categories_zeroshot(), category_exemplar_names(k),
                                                k_generalization);
      p.name = std::string(name);
      return p;
    }
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown relabeler preset '" + std::string(name) + "' (known: " + known + ")");
}

std::set<std::string> category_exemplar_names(int k) {
  if (k < 0 || k > static_cast<int>(kCategoryExemplarPairs.size())) {
    throw Error("Fewshot-k needs k in [1, 5]");
  }
  std::set<std::string> names;
  for (int i = 0; i < k; ++i) {
    names.emplace(kCategoryExemplarPairs[static_cast<std::size_t>(i)].first);
    names.emplace(kCategoryExemplarPairs[static_cast<std::size_t>(i)].second);
  }
  return names;
}

std::vector<Exemplar> category_exemplars(int k, const Catalog& catalog) {
  std::vector<Exemplar> out;
  for (int i = 0; i < k; ++i) {
    const auto& pair = kCategoryExemplarPairs.at(static_cast<std::size_t>(i));
    for (int repeat = 0; repeat < 3; ++repeat) {
      for (auto name : {pair.first, pair.second}) {
        const ObjectSpec& spec = catalog.find(name);
        out.push_back(Exemplar{HeldObject{spec.name, spec.default_color.value_or("")},
                               std::string(to_string(spec.category))});
      }
    }
  }
  return out;
}

std::vector<Exemplar> catalog_exemplars(TemplateKind kind, const Catalog& catalog,
                                        const PreferenceStructure* prefs) {
  std::vector<Exemplar> out;
  for (std::size_t i = 0; i < catalog.objects.size(); ++i) {
    const ObjectSpec& spec = catalog.objects[i];
    std::string color = spec.default_color.value_or("");
    if (color.empty() && !catalog.colors.empty()) color = catalog.colors[i % catalog.colors.size()];
    HeldObject held{spec.name, color};
    std::string answer = truth_answer(kind, held, prefs);
    if (kind == TemplateKind::ColorQA) answer += " object";
    out.push_back(Exemplar{std::move(held), std::move(answer)});
  }
  return out;
}

}  // namespace herlab
