#include "herlab/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include "herlab/error.hpp"
#include "herlab/parallel.hpp"
#include "herlab/random.hpp"
#include "herlab/text.hpp"

namespace herlab {

std::uint64_t episode_seed(std::uint64_t global_seed, std::size_t episode_index) {
  return derive_seed(global_seed, "episode", episode_index);
}

std::vector<Trajectory> generate_batch(const Catalog& catalog, const EnvConfig& env,
                                       const PolicyParams& policy, std::size_t n, ActMode mode,
                                       std::uint64_t global_seed, int workers) {
  if (n == 0) throw Error("generate_batch needs n > 0");
  const std::vector<std::string> tokens = tokenize(kGenericInstruction);
  std::vector<Trajectory> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Trajectory& t = out[i];
    t.episode_index = i;
    t.episode_seed = episode_seed(global_seed, i);
    t.instruction = std::string(kGenericInstruction);
    t.room = generate_room(catalog, t.episode_seed, env);
    const auto features = t.room.features();
    t.chosen_index = act(policy, tokens, features, mode, derive_seed(t.episode_seed, "generate"));
    t.outcome = execute_lift(t.room, t.chosen_index, t.episode_seed, env.p_timeout);
  });
  return out;
}

Trajectory replay_trajectory(const Catalog& catalog, const EnvConfig& env, std::size_t episode_index,
                             std::uint64_t seed, std::size_t chosen_index) {
  Trajectory t;
  t.episode_index = episode_index;
  t.episode_seed = seed;
  t.instruction = std::string(kGenericInstruction);
  t.room = generate_room(catalog, seed, env);
  t.chosen_index = chosen_index;
  t.outcome = execute_lift(t.room, chosen_index, seed, env.p_timeout);
  return t;
}

std::uint64_t LabelCache::key(const Outcome& outcome, const PromptSpec& prompt, const Relabeler& relabeler,
                              std::uint64_t episode_seed) {
  std::uint64_t h = splitmix64(episode_seed);
  const std::string identity = outcome.is_timeout() ? std::string("<timeout>")
                                                    : outcome.held->name + "\x1f" + outcome.held->color;
  h = splitmix64(h ^ fnv1a(identity));
  h = splitmix64(h ^ fnv1a(std::string(to_string(prompt.kind)) + "\x1f" + prompt.render()));
  return splitmix64(h ^ fnv1a(relabeler.fingerprint()));
}

std::optional<Label> LabelCache::find(std::uint64_t key) const {
  std::shared_lock lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void LabelCache::insert(std::uint64_t key, const Label& label) {
  std::unique_lock lock(mutex_);
  entries_.try_emplace(key, label);
}

std::size_t LabelCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

RelabelResult relabel_batch(std::span<const Trajectory> trajectories, const PromptSpec& prompt,
                            const Relabeler& relabeler, LabelCache* cache, int workers) {
  prompt.validate();
  enum class Status { Labeled, Timeout, Dropped };
  const std::size_t n = trajectories.size();
  std::vector<Status> status(n, Status::Labeled);
  std::vector<LabeledTrajectory> slots(n);
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> invocations{0};

  parallel_for(n, workers, [&](std::size_t i) {
    const Trajectory& t = trajectories[i];
    if (t.outcome.is_timeout()) {
      status[i] = Status::Timeout;
      return;
    }
    try {
      std::optional<Label> label;
      std::uint64_t key = 0;
      if (cache != nullptr) {
        key = LabelCache::key(t.outcome, prompt, relabeler, t.episode_seed);
        label = cache->find(key);
        if (label) ++hits;
      }
      if (!label) {
        ++invocations;
        label = relabeler.relabel(t.outcome, prompt, t.episode_seed);
        if (cache != nullptr) cache->insert(key, *label);
      }
      slots[i].instruction = postprocess(label->text);
      slots[i].trajectory = t;
      slots[i].label = std::move(*label);
    } catch (const EmptyLabelError&) {
      status[i] = Status::Dropped;
    }
  });

  RelabelResult result;
  result.stats.input = n;
  result.stats.cache_hits = hits;
  result.stats.invocations = invocations;
  for (std::size_t i = 0; i < n; ++i) {
    switch (status[i]) {
      case Status::Labeled:
        result.labeled.push_back(std::move(slots[i]));
        ++result.stats.labeled;
        break;
      case Status::Timeout: ++result.stats.timeouts; break;
      case Status::Dropped: ++result.stats.postprocess_drops; break;
    }
  }
  return result;
}

std::vector<LabeledTrajectory> filter_by_confidence(std::span<const LabeledTrajectory> dataset,
                                                    double keep_fraction) {
  if (dataset.empty()) throw Error("cannot filter an empty dataset");
  std::vector<double> confidence;
  std::vector<std::size_t> episodes;
  confidence.reserve(dataset.size());
  episodes.reserve(dataset.size());
  for (const auto& d : dataset) {
    confidence.push_back(d.label.confidence);
    episodes.push_back(d.trajectory.episode_index);
  }
  std::vector<LabeledTrajectory> out;
  for (std::size_t i : select_most_confident(confidence, episodes, keep_fraction)) out.push_back(dataset[i]);
  return out;
}

std::vector<TrainExample> to_train_examples(std::span<const LabeledTrajectory> dataset) {
  std::vector<TrainExample> out;
  out.reserve(dataset.size());
  for (const auto& d : dataset) {
    out.push_back(TrainExample{tokenize(d.instruction), d.trajectory.room.features(), d.trajectory.chosen_index});
  }
  return out;
}

std::vector<ScoredLabel> scored_labels(std::span<const LabeledTrajectory> dataset, TemplateKind kind,
                                       const PreferenceStructure* prefs) {
  std::vector<ScoredLabel> out;
  out.reserve(dataset.size());
  for (const auto& d : dataset) {
    const HeldObject& held = *d.trajectory.outcome.held;
    out.push_back(ScoredLabel{d.instruction, truth_token(kind, held, prefs), held.name, d.label.confidence,
                              d.trajectory.episode_index});
  }
  return out;
}

const TaskResult* EvalReport::find(std::string_view task) const {
  for (const auto& t : tasks) {
    if (t.task == task) return &t;
  }
  return nullptr;
}

double EvalReport::mean_over(std::span<const std::string> task_ids) const {
  if (task_ids.empty()) throw Error("mean over an empty task list");
  double sum = 0.0;
  for (const auto& id : task_ids) {
    const TaskResult* t = find(id);
    if (t == nullptr) throw Error("evaluation has no task '" + id + "'");
    sum += t->rate;
  }
  return sum / static_cast<double>(task_ids.size());
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

EvalReport evaluate(const PolicyParams& policy, const Catalog& catalog, const EnvConfig& env,
                    std::span<const GoalSpec> tasks, const EvalConfig& config, std::uint64_t global_seed,
                    int workers) {
  if (tasks.empty()) throw Error("evaluation needs at least one task");
  if (config.rollouts < tasks.size()) {
    throw Error("evaluation needs at least one rollout per task (" + std::to_string(tasks.size()) + " tasks, " +
                std::to_string(config.rollouts) + " rollouts)");
  }
  const std::size_t n_tasks = tasks.size();
  std::vector<std::size_t> per_task(n_tasks, config.rollouts / n_tasks);
  for (std::size_t t = 0; t < config.rollouts % n_tasks; ++t) ++per_task[t];

  std::vector<std::vector<std::string>> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    tokens.push_back(tokenize(tasks[t].instruction_text()));
    for (std::size_t j = 0; j < per_task[t]; ++j) jobs.emplace_back(t, j);
  }

  std::vector<char> success(jobs.size(), 0);
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto [t, j] = jobs[i];
    const std::uint64_t seed = derive_seed(global_seed, "eval", j);
    const RoomInstance room = generate_room(catalog, seed, env);
    const auto features = room.features();
    const std::size_t chosen = act(policy, tokens[t], features, config.mode, derive_seed(seed, "eval-act", t));
    success[i] = goal_satisfied(tasks[t], execute_lift(room, chosen, seed, env.p_timeout)) ? 1 : 0;
  });

  EvalReport report;
  std::size_t offset = 0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    TaskResult r;
    r.task = tasks[t].task_id();
    r.instruction = tasks[t].instruction_text();
    r.n = per_task[t];
    for (std::size_t j = 0; j < per_task[t]; ++j) r.successes += static_cast<std::size_t>(success[offset + j]);
    offset += per_task[t];
    r.rate = static_cast<double>(r.successes) / static_cast<double>(r.n);
    std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.successes, r.n);
    report.mean_success += r.rate;
    report.tasks.push_back(std::move(r));
  }
  report.mean_success /= static_cast<double>(n_tasks);
  return report;
}

std::vector<GoalSpec> default_tasks(const Catalog& catalog, const PreferenceStructure* prefs) {
  std::vector<GoalSpec> tasks;
  switch (catalog.experiment) {
    case ExperimentId::Names:
      for (const auto& o : catalog.objects) tasks.push_back(GoalSpec{NameGoal{o.name}});
      break;
    case ExperimentId::Attributes:
      for (const auto& o : catalog.objects) tasks.push_back(GoalSpec{NameGoal{o.name}});
      for (const auto& c : catalog.colors) tasks.push_back(GoalSpec{ColorGoal{c}});
      break;
    case ExperimentId::Categories:
      tasks.push_back(GoalSpec{CategoryGoal{Category::Food}});
      tasks.push_back(GoalSpec{CategoryGoal{Category::Toy}});
      break;
    case ExperimentId::Preferences:
      if (prefs == nullptr) throw Error("preference tasks need a preference structure");
      tasks.push_back(GoalSpec{PreferenceGoal{*prefs, PreferenceSide::Liked}});
      tasks.push_back(GoalSpec{PreferenceGoal{*prefs, PreferenceSide::Hated}});
      break;
  }
  return tasks;
}

}  // namespace herlab
