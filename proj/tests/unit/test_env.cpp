#include <doctest.h>

#include <map>
#include <set>

#include "herlab/env.hpp"
#include "herlab/error.hpp"
#include "herlab/random.hpp"
#include "oracles.hpp"

using namespace herlab;

TEST_CASE("catalogs hold the experiment objects") {
  CHECK(names_catalog().objects.size() == 10);
  CHECK(attributes_catalog().objects.size() == 5);
  CHECK(attributes_catalog().colors.size() == 5);
  CHECK(categories_catalog().objects.size() == 10);
  for (auto id : {ExperimentId::Names, ExperimentId::Attributes, ExperimentId::Categories,
                  ExperimentId::Preferences}) {
    CHECK_NOTHROW(validate(make_catalog(id)));
  }
  std::size_t food = 0;
  for (const auto& o : categories_catalog().objects) food += o.category == Category::Food;
  CHECK(food == 5);
  CHECK_THROWS_AS(names_catalog().find("dice"), Error);
}

TEST_CASE("rooms are deterministic in the episode seed") {
  const auto catalog = names_catalog();
  const EnvConfig env;
  const auto a = generate_room(catalog, 1234, env);
  const auto b = generate_room(catalog, 1234, env);
  CHECK(a == b);
  CHECK(a.objects.size() == 10);
  CHECK_FALSE(a == generate_room(catalog, 1235, env));

  std::set<std::string> names;
  for (const auto& o : a.objects) names.insert(o.spec.name);
  CHECK(names.size() == 10);
}

TEST_CASE("the timeout draw does not disturb the room") {
  const auto catalog = names_catalog();
  EnvConfig with;
  EnvConfig without = with;
  without.p_timeout = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    CHECK(generate_room(catalog, s, with) == generate_room(catalog, s, without));
  }
}

TEST_CASE("attribute rooms cover every color for every object") {
  const auto catalog = attributes_catalog();
  EnvConfig env;
  env.color_policy = ColorPolicy::PermutePerEpisode;
  std::map<std::string, std::set<std::string>> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto room = generate_room(catalog, s, env);
    std::set<std::string> colors;
    for (const auto& o : room.objects) {
      seen[o.spec.name].insert(o.color);
      colors.insert(o.color);
    }
    CHECK(colors.size() == 5);
  }
  CHECK(seen.size() == 5);
  for (const auto& [name, colors] : seen) CHECK(colors.size() == 5);
}

TEST_CASE("recoloring permutes the default colors once") {
  const auto catalog = names_catalog();
  EnvConfig env;
  env.color_policy = ColorPolicy::Recolored;
  std::map<std::string, std::string> mapping;
  std::multiset<std::string> colors;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (const auto& o : generate_room(catalog, s, env).objects) {
      auto [it, inserted] = mapping.emplace(o.spec.name, o.color);
      CHECK(it->second == o.color);
      if (inserted) colors.insert(o.color);
    }
  }
  std::multiset<std::string> defaults;
  for (const auto& o : catalog.objects) defaults.insert(*o.default_color);
  CHECK(colors == defaults);
  std::size_t moved = 0;
  for (const auto& o : catalog.objects) moved += mapping[o.name] != *o.default_color;
  CHECK(moved > 0);
}

TEST_CASE("sampled rooms respect the count bounds") {
  const auto catalog = names_catalog();
  EnvConfig env;
  env.count_policy = CountPolicy::Sampled;
  std::set<std::size_t> sizes;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto room = generate_room(catalog, s, env);
    CHECK(room.objects.size() >= 5);
    CHECK(room.objects.size() <= 10);
    std::set<std::string> names;
    for (const auto& o : room.objects) names.insert(o.spec.name);
    CHECK(names.size() == room.objects.size());
    sizes.insert(room.objects.size());
  }
  CHECK(sizes.size() == 6);

  env.max_objects = 11;
  CHECK_THROWS_AS(generate_room(catalog, 0, env), Error);
}

TEST_CASE("features identify name and color when rendering is noiseless") {
  const auto catalog = attributes_catalog();
  EnvConfig env;
  env.render_noise = 0.0;
  env.color_policy = ColorPolicy::PermutePerEpisode;
  const auto a = generate_room(catalog, 1, env);
  const auto b = generate_room(catalog, 2, env);
  for (const auto& x : a.objects) {
    for (const auto& y : b.objects) {
      const bool same = x.spec.name == y.spec.name && x.color == y.color;
      CHECK((x.features == y.features) == same);
    }
  }
  CHECK(a.objects.front().features.size() == env.embedding_dim);
}

TEST_CASE("lifting returns the chosen object") {
  const auto catalog = names_catalog();
  const auto room = generate_room(catalog, 7, EnvConfig{});
  const auto outcome = execute_lift(room, 2, 7, 0.0);
  REQUIRE_FALSE(outcome.is_timeout());
  CHECK(outcome.held->name == room.objects[2].spec.name);
  CHECK(outcome.held->color == room.objects[2].color);
  CHECK(execute_lift(room, 2, 7, 1.0).is_timeout());
  CHECK_THROWS(execute_lift(room, 10, 7, 0.0));
}

TEST_CASE("timeouts fall inside the binomial band of 3%") {
  const auto catalog = names_catalog();
  const EnvConfig env;
  const std::size_t n = 10000;
  std::size_t timeouts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto seed = derive_seed(99, "episode", i);
    const auto room = generate_room(catalog, seed, env);
    timeouts += execute_lift(room, 0, seed, env.p_timeout).is_timeout();
  }
  const auto [lo, hi] = oracle::binomial_band(n, 0.03, 0.99);
  CHECK(lo >= 250);
  CHECK(hi <= 360);
  CHECK(timeouts >= lo);
  CHECK(timeouts <= hi);
}

TEST_CASE("goal satisfaction") {
  const auto banana = Outcome::lifted("banana", "yellow");
  CHECK(goal_satisfied(GoalSpec{NameGoal{"banana"}}, banana));
  CHECK_FALSE(goal_satisfied(GoalSpec{NameGoal{"pear"}}, banana));
  CHECK(goal_satisfied(GoalSpec{ColorGoal{"yellow"}}, banana));
  CHECK_FALSE(goal_satisfied(GoalSpec{ColorGoal{"red"}}, banana));
  CHECK(goal_satisfied(GoalSpec{CategoryGoal{Category::Food}}, banana));
  CHECK_FALSE(goal_satisfied(GoalSpec{CategoryGoal{Category::Toy}}, banana));
  CHECK_FALSE(goal_satisfied(GoalSpec{NameGoal{"banana"}}, Outcome::timeout()));

  const auto prefs = aligned_preferences();
  CHECK(goal_satisfied(GoalSpec{PreferenceGoal{prefs, PreferenceSide::Liked}}, banana));
  CHECK_FALSE(goal_satisfied(GoalSpec{PreferenceGoal{prefs, PreferenceSide::Hated}}, banana));

  CHECK(GoalSpec{NameGoal{"plane"}}.instruction_text() == "Lift a plane");
  CHECK(GoalSpec{ColorGoal{"red"}}.instruction_text() == "Lift a red object");
  CHECK(GoalSpec{CategoryGoal{Category::Food}}.instruction_text() == "Lift a food");
  CHECK(GoalSpec{PreferenceGoal{prefs, PreferenceSide::Liked}}.instruction_text() ==
        "Lift something John Doe likes");
}

TEST_CASE("aligned preferences are the food category") {
  const auto catalog = preferences_catalog();
  const auto aligned = aligned_preferences();
  const auto arbitrary = arbitrary_preferences();
  CHECK_NOTHROW(validate(aligned, catalog));
  CHECK_NOTHROW(validate(arbitrary, catalog));
  CHECK(arbitrary.liked.size() == 5);
  std::size_t differ = 0;
  for (const auto& o : catalog.objects) {
    CHECK(aligned.likes(o.name) == (o.category == Category::Food));
    differ += arbitrary.likes(o.name) != aligned.likes(o.name);
    const auto outcome = Outcome::lifted(o.name, o.default_color.value_or(""));
    const bool liked = goal_satisfied(GoalSpec{PreferenceGoal{arbitrary, PreferenceSide::Liked}}, outcome);
    const bool hated = goal_satisfied(GoalSpec{PreferenceGoal{arbitrary, PreferenceSide::Hated}}, outcome);
    CHECK(liked != hated);
  }
  CHECK(differ > 0);
}

TEST_CASE("instructions parse back to their goals") {
  const auto names = names_catalog();
  const auto goal = parse_instruction("Lift a a red car", names);
  REQUIRE(goal);
  CHECK(goal->task_id() == "car");
  CHECK_FALSE(parse_instruction("Lift a thing", names));
  const auto color = parse_instruction("Lift a red object", attributes_catalog());
  REQUIRE(color);
  CHECK(color->task_id() == "red");
  const auto prefs = aligned_preferences();
  const auto liked = parse_instruction("Lift something John Doe likes", preferences_catalog(), &prefs);
  REQUIRE(liked);
  CHECK(goal_satisfied(*liked, Outcome::lifted("pear", "green")));
}
