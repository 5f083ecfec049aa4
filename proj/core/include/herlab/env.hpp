#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "herlab/catalog.hpp"

namespace herlab {

enum class CountPolicy { AllCatalog, Sampled };
enum class ColorPolicy { Fixed, PermutePerEpisode, Recolored };

std::string_view to_string(CountPolicy p);
std::string_view to_string(ColorPolicy p);

struct EnvConfig {
  CountPolicy count_policy = CountPolicy::AllCatalog;
  int min_objects = 5;
  int max_objects = 10;
  ColorPolicy color_policy = ColorPolicy::Fixed;
  // Recolored: one fixed permutation of the catalog's default colors, drawn from this seed.
  std::uint64_t recolor_seed = 1;
  int embedding_dim = 32;
  double render_noise = 0.1;
  double p_timeout = 0.03;
  // Seed of the frozen per-token feature embeddings.
  std::uint64_t world_seed = 0;
};

/// Frozen per-token feature embeddings, each entry drawn from a unit Gaussian.
/// Pure function of (world seed, token); an empty token maps to zero.
class FeatureSpace {
 public:
  FeatureSpace(std::uint64_t world_seed, int dim);

  Eigen::VectorXd embed(std::string_view token) const;
  int dim() const noexcept { return dim_; }

 private:
  std::uint64_t seed_;
  int dim_;
};

struct PlacedObject {
  ObjectSpec spec;
  std::string color;  // empty when the object is uncolored
  Eigen::VectorXd features;

  friend bool operator==(const PlacedObject& a, const PlacedObject& b) {
    return a.spec == b.spec && a.color == b.color && a.features == b.features;
  }
};

struct RoomInstance {
  std::vector<PlacedObject> objects;
  std::uint64_t episode_seed = 0;

  std::vector<Eigen::VectorXd> features() const;
  friend bool operator==(const RoomInstance&, const RoomInstance&) = default;
};

struct HeldObject {
  std::string name;
  std::string color;
  friend auto operator<=>(const HeldObject&, const HeldObject&) = default;
};

struct Outcome {
  std::optional<HeldObject> held;  // empty on timeout

  static Outcome lifted(std::string name, std::string color) {
    return Outcome{HeldObject{std::move(name), std::move(color)}};
  }
  static Outcome timeout() { return Outcome{}; }
  bool is_timeout() const noexcept { return !held.has_value(); }

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Deterministic in (catalog, episode_seed, config). Object order is shuffled per
/// episode. Throws herlab::Error when the count policy exceeds the catalog.
RoomInstance generate_room(const Catalog& catalog, std::uint64_t episode_seed,
                           const EnvConfig& config);

/// Lifts the chosen object unless the episode times out (probability p_timeout,
/// drawn from a stream independent of the room layout).
Outcome execute_lift(const RoomInstance& room, std::size_t chosen_index,
                     std::uint64_t episode_seed, double p_timeout);

enum class PreferenceSide { Liked, Hated };

struct NameGoal {
  std::string name;
};
struct ColorGoal {
  std::string color;
};
struct CategoryGoal {
  Category category = Category::Food;
};
struct PreferenceGoal {
  PreferenceStructure structure;
  PreferenceSide side = PreferenceSide::Liked;
};

struct GoalSpec {
  std::variant<NameGoal, ColorGoal, CategoryGoal, PreferenceGoal> kind;

  /// "Lift a plane", "Lift a red object", "Lift a food", "Lift something John Doe likes".
  std::string instruction_text() const;
  /// Short identifier used in reports: the name, color, category, or likes/hates.
  std::string task_id() const;
};

bool goal_satisfied(const GoalSpec& goal, const Outcome& outcome);

/// Recovers the goal expressed by an instruction, if any task-vocabulary token is present.
/// Names take precedence over colors, colors over categories, categories over preferences.
std::optional<GoalSpec> parse_instruction(std::string_view text, const Catalog& catalog,
                                          const PreferenceStructure* preferences = nullptr);

}  // namespace herlab
