#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "herlab/catalog.hpp"
#include "herlab/relabeler.hpp"

namespace herlab {

inline constexpr double kDefaultKGeneralization = 0.92;

/// names-zeroshot, names-fewshot, names-detector, attributes-name, attributes-color,
/// categories-zeroshot, categories-fewshot-1 .. -5, preferences-aligned, preferences-arbitrary.
std::vector<std::string> preset_names();

/// Throws herlab::Error for an unknown name. "zeroshot", "fewshot" and "detector"
/// are accepted as short forms of the names-* presets.
NoiseProfile make_preset(std::string_view name, double k_generalization = kDefaultKGeneralization);

/// Whether the preset emulates a prompt with in-context exemplars.
bool preset_is_fewshot(std::string_view name);

/// Objects shown as exemplars in the Fewshot-k category prompt: the first k of
/// (carrot, robot), (lemon, dice), (plane, banana), (grapes, car), (train, pear).
std::set<std::string> category_exemplar_names(int k);

/// Three in-context examples for every object of category_exemplar_names(k).
std::vector<Exemplar> category_exemplars(int k, const Catalog& catalog);

/// One in-context example per catalog object, answered for the given template.
std::vector<Exemplar> catalog_exemplars(TemplateKind kind, const Catalog& catalog,
                                        const PreferenceStructure* prefs = nullptr);

}  // namespace herlab
