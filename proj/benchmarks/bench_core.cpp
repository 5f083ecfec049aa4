#include <benchmark/benchmark.h>

#include "herlab/pipeline.hpp"
#include "herlab/presets.hpp"
#include "herlab/random.hpp"
#include "herlab/regression.hpp"
#include "herlab/text.hpp"

using namespace herlab;

namespace {

std::vector<Trajectory> batch(std::size_t n) {
  return generate_batch(names_catalog(), EnvConfig{}, init_policy(16, 32, 0), n, ActMode::UniformRandom, 1);
}

void BM_GenerateRoom(benchmark::State& state) {
  const auto catalog = names_catalog();
  const EnvConfig env;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_room(catalog, seed++, env));
}
BENCHMARK(BM_GenerateRoom);

void BM_Act(benchmark::State& state) {
  const auto data = batch(1);
  PolicyParams policy = init_policy(16, 32, 0);
  Engine rng(3);
  for (const char* t : {"lift", "a", "banana"}) {
    Eigen::VectorXd v(16);
    for (int i = 0; i < 16; ++i) v(i) = standard_normal(rng);
    policy.tokens[t] = v;
  }
  const auto tokens = tokenize("Lift a banana");
  const auto features = data[0].room.features();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(act(policy, tokens, features, ActMode::Sample, seed++));
}
BENCHMARK(BM_Act);

void BM_RelabelBatch(benchmark::State& state) {
  const auto data = batch(static_cast<std::size_t>(state.range(0)));
  const NoisyRelabeler relabeler(make_preset("names-zeroshot"));
  for (auto _ : state) benchmark::DoNotOptimize(relabel_batch(data, name_prompt(), relabeler));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RelabelBatch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const auto labeled = relabel_batch(batch(static_cast<std::size_t>(state.range(0))), name_prompt(), OracleRelabeler{});
  const auto examples = to_train_examples(labeled.labeled);
  TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(bc_train(examples, config, init_policy(16, 32, 0)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(examples.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const auto catalog = names_catalog();
  const auto tasks = default_tasks(catalog);
  EvalConfig config;
  config.rollouts = static_cast<std::size_t>(state.range(0));
  const auto policy = init_policy(16, 32, 0);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(policy, catalog, EnvConfig{}, tasks, config, 2));
}
BENCHMARK(BM_Evaluate)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Regression(benchmark::State& state) {
  Engine rng(4);
  std::vector<RegressionPoint> points;
  for (int i = 0; i < 40; ++i) {
    points.push_back({"t" + std::to_string(i % 10), uniform01(rng), uniform01(rng), uniform01(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_task_regression(points));
}
BENCHMARK(BM_Regression);

}  // namespace

BENCHMARK_MAIN();
