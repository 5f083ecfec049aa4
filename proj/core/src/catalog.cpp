#include "herlab/catalog.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "herlab/error.hpp"

namespace herlab {
namespace {

constexpr std::array<std::string_view, 5> kFood = {"pear", "banana", "carrot", "lemon", "grapes"};
constexpr std::array<std::string_view, 5> kToys = {"plane", "train", "car", "robot", "dice"};

ObjectSpec object(std::string name, std::optional<std::string> color) {
  ObjectSpec spec;
  spec.category = category_of(name);
  spec.name = std::move(name);
  spec.default_color = std::move(color);
  return spec;
}

std::vector<std::string> distinct_colors(const std::vector<ObjectSpec>& objects) {
  std::vector<std::string> colors;
  for (const auto& o : objects) {
    if (o.default_color && std::find(colors.begin(), colors.end(), *o.default_color) == colors.end()) {
      colors.push_back(*o.default_color);
    }
  }
  return colors;
}

// Food/toy catalog shared by the category and preference experiments. Toy colors
// follow the canonical renderings of the original environment; train has none.
std::vector<ObjectSpec> food_toy_objects() {
  return {
      object("pear", "green"),   object("banana", "yellow"), object("carrot", "orange"),
      object("lemon", "yellow"), object("grapes", "purple"), object("plane", "orange"),
      object("train", std::nullopt), object("car", "aquamarine"), object("robot", "purple"),
      object("dice", "white"),
  };
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Food: return "food";
    case Category::Toy: return "toy";
    case Category::None: break;
  }
  return "none";
}

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Names: return "names";
    case ExperimentId::Attributes: return "attributes";
    case ExperimentId::Categories: return "categories";
    case ExperimentId::Preferences: return "preferences";
  }
  return "names";
}

ExperimentId parse_experiment_id(std::string_view text) {
  for (auto id : {ExperimentId::Names, ExperimentId::Attributes, ExperimentId::Categories,
                  ExperimentId::Preferences}) {
    if (to_string(id) == text) return id;
  }
  throw Error("unknown experiment '" + std::string(text) + "'");
}

std::string_view to_string(PreferenceKind kind) {
  return kind == PreferenceKind::Aligned ? "aligned" : "arbitrary";
}

Category category_of(std::string_view name) {
  if (std::find(kFood.begin(), kFood.end(), name) != kFood.end()) return Category::Food;
  if (std::find(kToys.begin(), kToys.end(), name) != kToys.end()) return Category::Toy;
  return Category::None;
}

const ObjectSpec& Catalog::find(std::string_view name) const {
  for (const auto& o : objects) {
    if (o.name == name) return o;
  }
  throw Error("object '" + std::string(name) + "' is not in the " +
              std::string(to_string(experiment)) + " catalog");
}

bool Catalog::contains(std::string_view name) const {
  return std::any_of(objects.begin(), objects.end(), [&](const auto& o) { return o.name == name; });
}

std::vector<std::string> Catalog::names() const {
  std::vector<std::string> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.name);
  return out;
}

Catalog names_catalog() {
  Catalog c;
  c.experiment = ExperimentId::Names;
  c.objects = {
      object("table", "brown"),      object("chair", "white"), object("book", "blue"),
      object("basketball", "orange"), object("racket", "black"), object("plane", "silver"),
      object("car", "red"),          object("banana", "yellow"), object("carrot", "orange"),
      object("pear", "green"),
  };
  c.colors = distinct_colors(c.objects);
  return c;
}

Catalog attributes_catalog() {
  Catalog c;
  c.experiment = ExperimentId::Attributes;
  for (const char* name : {"plane", "racket", "chair", "table", "basketball"}) {
    c.objects.push_back(object(name, std::nullopt));
  }
  c.colors = {"red", "green", "blue", "pink", "yellow"};
  return c;
}

Catalog categories_catalog() {
  Catalog c;
  c.experiment = ExperimentId::Categories;
  c.objects = food_toy_objects();
  c.colors = distinct_colors(c.objects);
  return c;
}

Catalog preferences_catalog() {
  Catalog c = categories_catalog();
  c.experiment = ExperimentId::Preferences;
  return c;
}

Catalog make_catalog(ExperimentId id) {
  switch (id) {
    case ExperimentId::Names: return names_catalog();
    case ExperimentId::Attributes: return attributes_catalog();
    case ExperimentId::Categories: return categories_catalog();
    case ExperimentId::Preferences: return preferences_catalog();
  }
  return names_catalog();
}

void validate(const Catalog& catalog) {
  std::unordered_set<std::string> seen;
  int food = 0;
  int toys = 0;
  for (const auto& o : catalog.objects) {
    if (!seen.insert(o.name).second) {
      throw Error("duplicate object name '" + o.name + "' in catalog");
    }
    if (o.category != category_of(o.name)) {
      throw Error("object '" + o.name + "' has the wrong category");
    }
    food += o.category == Category::Food;
    toys += o.category == Category::Toy;
  }
  const auto n = catalog.objects.size();
  switch (catalog.experiment) {
    case ExperimentId::Names:
      if (n != 10) throw Error("names catalog must hold 10 objects");
      break;
    case ExperimentId::Attributes:
      if (n != 5 || catalog.colors.size() != 5) {
        throw Error("attributes catalog must hold 5 objects and 5 colors");
      }
      break;
    case ExperimentId::Categories:
    case ExperimentId::Preferences:
      if (n != 10 || food != 5 || toys != 5) {
        throw Error("category catalogs must hold 5 food and 5 toy objects");
      }
      break;
  }
}

std::string PreferenceStructure::preamble() const {
  if (kind == PreferenceKind::Aligned) {
    return persona + " likes food.";
  }
  // Plural listing in the persona's own order of preference.
  return persona + " likes robots, planes, carrots, lemons, and bananas.";
}

PreferenceStructure aligned_preferences() {
  PreferenceStructure p;
  p.kind = PreferenceKind::Aligned;
  for (auto name : kFood) p.liked.emplace(name);
  return p;
}

PreferenceStructure arbitrary_preferences() {
  PreferenceStructure p;
  p.kind = PreferenceKind::Arbitrary;
  p.liked = {"robot", "plane", "carrot", "lemon", "banana"};
  return p;
}

PreferenceStructure make_preferences(PreferenceKind kind) {
  return kind == PreferenceKind::Aligned ? aligned_preferences() : arbitrary_preferences();
}

void validate(const PreferenceStructure& prefs, const Catalog& catalog) {
  std::size_t liked = 0;
  for (const auto& o : catalog.objects) liked += prefs.likes(o.name);
  if (liked != prefs.liked.size()) {
    throw Error("preference structure names objects outside the catalog");
  }
  if (catalog.objects.size() != 10 || liked != 5) {
    throw Error("preferences must split the 10 catalog objects 5/5");
  }
  if (prefs.kind == PreferenceKind::Aligned) {
    for (const auto& o : catalog.objects) {
      if (prefs.likes(o.name) != (o.category == Category::Food)) {
        throw Error("aligned preferences must coincide with the food category");
      }
    }
  }
}

}  // namespace herlab
