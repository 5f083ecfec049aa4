#include "herlab/env.hpp"

#include <algorithm>
#include <numeric>

#include "herlab/error.hpp"
#include "herlab/random.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

std::vector<std::string> recolored_palette(const Catalog& catalog, std::uint64_t seed) {
  std::vector<std::string> colors;
  colors.reserve(catalog.objects.size());
  for (const auto& o : catalog.objects) colors.push_back(o.default_color.value_or(""));
  Engine rng(derive_seed(seed, "recolor"));
  shuffle(std::span<std::string>(colors), rng);
  return colors;
}

}  // namespace

std::string_view to_string(CountPolicy p) {
  return p == CountPolicy::AllCatalog ? "all" : "sampled";
}

std::string_view to_string(ColorPolicy p) {
  switch (p) {
    case ColorPolicy::Fixed: return "fixed";
    case ColorPolicy::PermutePerEpisode: return "permute";
    case ColorPolicy::Recolored: return "recolor";
  }
  return "fixed";
}

FeatureSpace::FeatureSpace(std::uint64_t world_seed, int dim) : seed_(world_seed), dim_(dim) {
  if (dim <= 0) throw Error("feature dimension must be positive");
}

Eigen::VectorXd FeatureSpace::embed(std::string_view token) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  if (token.empty()) return v;
  Engine rng(derive_seed(seed_, "embedding", fnv1a(token)));
  for (int i = 0; i < dim_; ++i) v[i] = standard_normal(rng);
  return v;
}

std::vector<Eigen::VectorXd> RoomInstance::features() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.features);
  return out;
}

RoomInstance generate_room(const Catalog& catalog, std::uint64_t episode_seed,
                           const EnvConfig& config) {
  const std::size_t available = catalog.objects.size();
  if (available == 0) throw Error("cannot generate a room from an empty catalog");

  Engine rng(derive_seed(episode_seed, "room"));
  std::vector<std::size_t> order(available);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t count = available;
  if (config.count_policy == CountPolicy::Sampled) {
    if (config.min_objects < 1 || config.min_objects > config.max_objects) {
      throw Error("object count range is empty");
    }
    if (static_cast<std::size_t>(config.max_objects) > available) {
      throw Error("object count policy asks for up to " + std::to_string(config.max_objects) +
                  " objects but the catalog holds " + std::to_string(available));
    }
    const auto span = static_cast<std::size_t>(config.max_objects - config.min_objects + 1);
    count = static_cast<std::size_t>(config.min_objects) + uniform_index(rng, span);
  }
  shuffle(std::span<std::size_t>(order), rng);
  order.resize(count);

  std::vector<std::string> colors(count);
  switch (config.color_policy) {
    case ColorPolicy::Fixed:
      for (std::size_t i = 0; i < count; ++i) {
        colors[i] = catalog.objects[order[i]].default_color.value_or("");
      }
      break;
    case ColorPolicy::PermutePerEpisode: {
      if (catalog.colors.size() < count) {
        throw Error("not enough colors to give every object a distinct one");
      }
      std::vector<std::string> palette = catalog.colors;
      shuffle(std::span<std::string>(palette), rng);
      std::copy_n(palette.begin(), count, colors.begin());
      break;
    }
    case ColorPolicy::Recolored: {
      const auto palette = recolored_palette(catalog, config.recolor_seed);
      for (std::size_t i = 0; i < count; ++i) colors[i] = palette[order[i]];
      break;
    }
  }

  const FeatureSpace space(config.world_seed, config.embedding_dim);
  Engine render(derive_seed(episode_seed, "render"));
  RoomInstance room;
  room.episode_seed = episode_seed;
  room.objects.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PlacedObject placed;
    placed.spec = catalog.objects[order[i]];
    placed.color = colors[i];
    placed.features = space.embed(placed.spec.name) + space.embed(placed.color);
    for (int k = 0; k < config.embedding_dim; ++k) {
      placed.features[k] += config.render_noise * standard_normal(render);
    }
    room.objects.push_back(std::move(placed));
  }
  return room;
}

Outcome execute_lift(const RoomInstance& room, std::size_t chosen_index,
                     std::uint64_t episode_seed, double p_timeout) {
  if (chosen_index >= room.objects.size()) {
    throw std::out_of_range("chosen object index " + std::to_string(chosen_index) +
                            " outside a room of " + std::to_string(room.objects.size()));
  }
  if (!(p_timeout >= 0.0 && p_timeout <= 1.0)) {
    throw Error("p_timeout must lie in [0, 1]");
  }
  Engine rng(derive_seed(episode_seed, "timeout"));
  if (uniform01(rng) < p_timeout) return Outcome::timeout();
  const auto& chosen = room.objects[chosen_index];
  return Outcome::lifted(chosen.spec.name, chosen.color);
}

std::string GoalSpec::instruction_text() const {
  struct Visitor {
    std::string operator()(const NameGoal& g) const { return "Lift a " + g.name; }
    std::string operator()(const ColorGoal& g) const { return "Lift a " + g.color + " object"; }
    std::string operator()(const CategoryGoal& g) const {
      return "Lift a " + std::string(to_string(g.category));
    }
    std::string operator()(const PreferenceGoal& g) const {
      return "Lift something " + g.structure.persona +
             (g.side == PreferenceSide::Liked ? " likes" : " hates");
    }
  };
  return std::visit(Visitor{}, kind);
}

std::string GoalSpec::task_id() const {
  struct Visitor {
    std::string operator()(const NameGoal& g) const { return g.name; }
    std::string operator()(const ColorGoal& g) const { return g.color; }
    std::string operator()(const CategoryGoal& g) const { return std::string(to_string(g.category)); }
    std::string operator()(const PreferenceGoal& g) const {
      return g.side == PreferenceSide::Liked ? "likes" : "hates";
    }
  };
  return std::visit(Visitor{}, kind);
}

bool goal_satisfied(const GoalSpec& goal, const Outcome& outcome) {
  if (outcome.is_timeout()) return false;
  const HeldObject& held = *outcome.held;
  struct Visitor {
    const HeldObject& held;
    bool operator()(const NameGoal& g) const { return held.name == g.name; }
    bool operator()(const ColorGoal& g) const { return held.color == g.color; }
    bool operator()(const CategoryGoal& g) const {
      return g.category != Category::None && category_of(held.name) == g.category;
    }
    bool operator()(const PreferenceGoal& g) const {
      return g.structure.likes(held.name) == (g.side == PreferenceSide::Liked);
    }
  };
  return std::visit(Visitor{held}, goal.kind);
}

std::optional<GoalSpec> parse_instruction(std::string_view text, const Catalog& catalog,
                                          const PreferenceStructure* preferences) {
  const auto tokens = tokenize(text);
  const auto has = [&](std::string_view t) {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
  };
  for (const auto& o : catalog.objects) {
    if (has(o.name)) return GoalSpec{NameGoal{o.name}};
  }
  for (const auto& c : catalog.colors) {
    if (has(c)) return GoalSpec{ColorGoal{c}};
  }
  if (has("food")) return GoalSpec{CategoryGoal{Category::Food}};
  if (has("toy")) return GoalSpec{CategoryGoal{Category::Toy}};
  if (preferences != nullptr) {
    if (has("likes")) return GoalSpec{PreferenceGoal{*preferences, PreferenceSide::Liked}};
    if (has("hates")) return GoalSpec{PreferenceGoal{*preferences, PreferenceSide::Hated}};
  }
  return std::nullopt;
}

}  // namespace herlab
