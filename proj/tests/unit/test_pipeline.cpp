#include <doctest.h>

#include <atomic>
#include <cmath>

#include "herlab/error.hpp"
#include "herlab/experiment.hpp"
#include "herlab/presets.hpp"
#include "oracles.hpp"

using namespace herlab;

namespace {

class CountingRelabeler final : public Relabeler {
 public:
  Label relabel(const Outcome& outcome, const PromptSpec& prompt, std::uint64_t seed) const override {
    ++calls;
    return inner.relabel(outcome, prompt, seed);
  }
  std::string fingerprint() const override { return inner.fingerprint(); }

  OracleRelabeler inner;
  mutable std::atomic<int> calls{0};
};

class BlankRelabeler final : public Relabeler {
 public:
  Label relabel(const Outcome& outcome, const PromptSpec&, std::uint64_t) const override {
    return Label{outcome.held->name == "banana" ? "\n" : outcome.held->name, 1.0};
  }
  std::string fingerprint() const override { return "blank-bananas"; }
};

LabeledTrajectory with_confidence(std::size_t episode, double confidence) {
  LabeledTrajectory t;
  t.trajectory.episode_index = episode;
  t.label = Label{"x", confidence};
  t.instruction = "Lift a x";
  return t;
}

ExperimentConfig small_config(ExperimentKind kind, const std::string& variant, const std::string& relabeler) {
  ExperimentConfig c;
  c.kind = kind;
  c.variant = variant;
  c.relabeler = relabeler;
  validate(c);
  return c;
}

}  // namespace

TEST_CASE("generation") {
  const auto catalog = names_catalog();
  const EnvConfig env;
  const auto policy = init_policy(16, 32, 0);
  const auto batch = generate_batch(catalog, env, policy, 10000, ActMode::UniformRandom, 7);
  REQUIRE(batch.size() == 10000);
  std::size_t lifted = 0;
  for (const auto& t : batch) {
    lifted += !t.outcome.is_timeout();
    CHECK(t.instruction == kGenericInstruction);
  }
  const auto [lo, hi] = oracle::binomial_band(10000, 0.97, 0.99);
  CHECK(lo >= 9640);
  CHECK(hi <= 9750);
  CHECK(lifted >= lo);
  CHECK(lifted <= hi);

  const auto one = generate_batch(catalog, env, policy, 1, ActMode::UniformRandom, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].instruction == "Lift an object");
  CHECK(one[0] == batch[0]);

  const auto again = generate_batch(catalog, env, policy, 300, ActMode::UniformRandom, 7, 1);
  const auto threaded = generate_batch(catalog, env, policy, 300, ActMode::UniformRandom, 7, 3);
  CHECK(again == threaded);
  for (std::size_t i = 0; i < 300; ++i) CHECK(again[i] == batch[i]);

  const auto& t = batch[17];
  CHECK(replay_trajectory(catalog, env, 17, t.episode_seed, t.chosen_index) == t);
  CHECK_THROWS(replay_trajectory(catalog, env, 17, t.episode_seed, 11));
}

TEST_CASE("relabeling drops timeouts and uses the cache") {
  const auto catalog = names_catalog();
  EnvConfig env;
  env.p_timeout = 0.0;
  auto batch = generate_batch(catalog, env, init_policy(16, 32, 0), 4, ActMode::UniformRandom, 3);
  batch[2].outcome = Outcome::timeout();

  CountingRelabeler relabeler;
  LabelCache cache;
  const auto first = relabel_batch(batch, name_prompt(), relabeler, &cache);
  CHECK(first.labeled.size() == 3);
  CHECK(first.stats.timeouts == 1);
  CHECK(first.stats.balanced());
  CHECK(relabeler.calls == 3);
  for (const auto& l : first.labeled) {
    CHECK(l.instruction == "Lift a " + l.trajectory.outcome.held->name);
  }

  relabeler.calls = 0;
  const auto second = relabel_batch(batch, name_prompt(), relabeler, &cache);
  CHECK(relabeler.calls == 0);
  CHECK(second.stats.cache_hits == 3);
  CHECK(second.stats.invocations == 0);
  REQUIRE(second.labeled.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(second.labeled[i].label == first.labeled[i].label);

  relabel_batch(batch, color_prompt(), relabeler, &cache);
  CHECK(relabeler.calls == 3);
}

TEST_CASE("unusable labels are dropped and counted") {
  const auto catalog = names_catalog();
  const auto batch = generate_batch(catalog, EnvConfig{}, init_policy(16, 32, 0), 2000, ActMode::UniformRandom, 5);
  const auto result = relabel_batch(batch, name_prompt(), BlankRelabeler{}, nullptr, 2);
  CHECK(result.stats.input == 2000);
  CHECK(result.stats.postprocess_drops > 100);
  CHECK(result.stats.balanced());
  CHECK(result.labeled.size() == result.stats.labeled);
  for (const auto& l : result.labeled) CHECK(l.trajectory.outcome.held->name != "banana");
}

TEST_CASE("confidence filtering") {
  std::vector<LabeledTrajectory> data;
  for (double c : {0.9, 0.1, 0.5, 0.7}) data.push_back(with_confidence(data.size(), c));
  const auto half = filter_by_confidence(data, 0.5);
  REQUIRE(half.size() == 2);
  CHECK(half[0].label.confidence == 0.9);
  CHECK(half[1].label.confidence == 0.7);

  const auto all = filter_by_confidence(data, 1.0);
  REQUIRE(all.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(all[i].label.confidence == data[i].label.confidence);

  std::vector<LabeledTrajectory> ties;
  for (int i = 0; i < 3; ++i) ties.push_back(with_confidence(i, 0.5));
  const auto one = filter_by_confidence(ties, 0.3);
  REQUIRE(one.size() == 1);
  CHECK(one[0].trajectory.episode_index == 0);

  CHECK_THROWS_AS(filter_by_confidence(data, 0.0), Error);
  CHECK_THROWS_AS(filter_by_confidence(data, 1.5), Error);
  CHECK_THROWS_AS(filter_by_confidence(std::span<const LabeledTrajectory>{}, 0.5), Error);
}

TEST_CASE("filtering calibrated labels raises precision") {
  const auto catalog = names_catalog();
  const auto batch = generate_batch(catalog, EnvConfig{}, init_policy(16, 32, 0), 5000, ActMode::UniformRandom, 9);
  const NoisyRelabeler fs(make_preset("names-fewshot"));
  const auto labeled = relabel_batch(batch, name_prompt(), fs).labeled;
  const auto kept = filter_by_confidence(labeled, 0.5);
  const auto vocab = task_vocab(TemplateKind::NameQA, catalog);
  const auto full = quality_report(scored_labels(labeled, TemplateKind::NameQA), vocab);
  const auto top = quality_report(scored_labels(kept, TemplateKind::NameQA), vocab);
  CHECK(*top.precision > *full.precision);
}

TEST_CASE("oracle relabeling is sound for every experiment") {
  for (auto kind : {ExperimentKind::Names, ExperimentKind::Attributes, ExperimentKind::Categories,
                    ExperimentKind::Preferences}) {
    CAPTURE(to_string(kind));
    const std::string variant = kind == ExperimentKind::Attributes    ? "color"
                                : kind == ExperimentKind::Categories  ? "zeroshot"
                                : kind == ExperimentKind::Preferences ? "arbitrary"
                                                                      : "";
    auto config = small_config(kind, variant, "oracle");
    config.n_trajectories = 2000;
    const auto setup = make_setup(config);
    const auto trajectories = stage_generate(config, setup, 1);
    const auto prompt = make_prompt(config, setup, "oracle");
    const auto result = relabel_batch(trajectories, prompt, OracleRelabeler{});
    CHECK(result.stats.balanced());
    CHECK(result.stats.postprocess_drops == 0);
    for (const auto& l : result.labeled) {
      const auto goal = parse_instruction(l.instruction, setup.catalog, setup.preferences());
      REQUIRE(goal);
      CHECK(goal_satisfied(*goal, l.trajectory.outcome));
    }
  }
}

TEST_CASE("wilson intervals") {
  const auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
  const auto [zlo, zhi] = wilson_interval(0, 20);
  CHECK(zlo == 0.0);
  CHECK(zhi > 0.0);
}

TEST_CASE("an untrained policy performs at chance") {
  for (auto id : {ExperimentId::Names, ExperimentId::Attributes, ExperimentId::Categories,
                  ExperimentId::Preferences}) {
    CAPTURE(to_string(id));
    const auto catalog = make_catalog(id);
    const auto prefs = aligned_preferences();
    const auto tasks = default_tasks(catalog, id == ExperimentId::Preferences ? &prefs : nullptr);
    EnvConfig env;
    env.p_timeout = 0.0;
    if (id == ExperimentId::Attributes) env.color_policy = ColorPolicy::PermutePerEpisode;
    const auto report = evaluate(init_policy(16, 32, 1), catalog, env, tasks, EvalConfig{}, 11);
    const double chance = id == ExperimentId::Names        ? 0.1
                          : id == ExperimentId::Attributes ? 0.2
                                                           : 0.5;
    const auto [lo, hi] = oracle::binomial_band(10000, chance, 0.99);
    const auto successes = static_cast<std::size_t>(std::lround(report.mean_success * 10000));
    CHECK(successes >= lo);
    CHECK(successes <= hi);
  }
}

TEST_CASE("oracle relabeling reaches the ceiling and runs are deterministic") {
  const auto config = small_config(ExperimentKind::Names, "", "oracle");
  const auto a = run_experiment(config);
  REQUIRE(a.arms.size() == 1);
  CHECK(a.arms[0].eval.mean_success >= 0.95);
  CHECK(a.arms[0].stats.balanced());
  CHECK(a.arms[0].stats.input == config.n_trajectories);

  const auto b = run_experiment(config, 2);
  CHECK(b.trajectories == a.trajectories);
  CHECK(b.arms[0].policy == a.arms[0].policy);
  CHECK(b.arms[0].eval.mean_success == a.arms[0].eval.mean_success);
}

TEST_CASE("label quality orders downstream success") {
  auto run = [](const std::string& relabeler, double keep) {
    auto config = small_config(ExperimentKind::Names, "", relabeler);
    config.keep_fraction = keep;
    return run_experiment(config).arms.at(0).eval.mean_success;
  };
  const double oracle = run("oracle", 1.0);
  const double fewshot_filtered = run("names-fewshot", 0.5);
  const double zeroshot = run("names-zeroshot", 1.0);
  const double detector = run("names-detector", 1.0);
  CAPTURE(oracle);
  CAPTURE(fewshot_filtered);
  CAPTURE(zeroshot);
  CAPTURE(detector);
  CHECK(oracle - fewshot_filtered >= 0.05);
  CHECK(fewshot_filtered - zeroshot >= 0.05);
  CHECK(zeroshot - detector >= 0.05);
  CHECK(zeroshot > 0.1 + 0.10);
  CHECK(zeroshot < oracle - 0.10);
}
