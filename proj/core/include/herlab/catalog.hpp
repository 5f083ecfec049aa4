#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace herlab {

enum class Category { None, Food, Toy };
enum class ExperimentId { Names, Attributes, Categories, Preferences };

std::string_view to_string(Category c);
std::string_view to_string(ExperimentId id);
ExperimentId parse_experiment_id(std::string_view text);

/// Food or Toy for the ten category-experiment objects, None for everything else.
Category category_of(std::string_view name);

struct ObjectSpec {
  std::string name;
  Category category = Category::None;
  std::optional<std::string> default_color;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct Catalog {
  ExperimentId experiment = ExperimentId::Names;
  std::vector<ObjectSpec> objects;
  std::vector<std::string> colors;

  const ObjectSpec& find(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
};

Catalog names_catalog();
Catalog attributes_catalog();
Catalog categories_catalog();
Catalog preferences_catalog();
Catalog make_catalog(ExperimentId id);

/// Throws herlab::Error when the catalog breaks its experiment's invariants.
void validate(const Catalog& catalog);

enum class PreferenceKind { Aligned, Arbitrary };

std::string_view to_string(PreferenceKind kind);

struct PreferenceStructure {
  std::string persona = "John Doe";
  std::set<std::string> liked;
  PreferenceKind kind = PreferenceKind::Aligned;

  bool likes(std::string_view name) const { return liked.contains(std::string(name)); }
  /// Prompt preamble stating the persona's preferences.
  std::string preamble() const;

  friend bool operator==(const PreferenceStructure&, const PreferenceStructure&) = default;
};

PreferenceStructure aligned_preferences();
PreferenceStructure arbitrary_preferences();
PreferenceStructure make_preferences(PreferenceKind kind);

/// Liked set and its complement must split the catalog 5/5; Aligned must equal Food.
void validate(const PreferenceStructure& prefs, const Catalog& catalog);

}  // namespace herlab
