#include "herlab/experiment.hpp"

#include "herlab/error.hpp"
#include "herlab/presets.hpp"
#include "herlab/random.hpp"
#include "herlab/remote.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::vector<GoalSpec> select_tasks(const std::vector<GoalSpec>& all, const std::string& spec) {
  if (spec == "auto") return all;
  std::vector<GoalSpec> out;
  std::string rest = spec;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string id = trim(rest.substr(0, comma));
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    if (id.empty()) continue;
    bool found = false;
    for (const auto& g : all) {
      if (g.task_id() == id) {
        out.push_back(g);
        found = true;
      }
    }
    if (!found) throw ConfigError("eval.tasks", "no task '" + id + "' in this experiment");
  }
  if (out.empty()) throw ConfigError("eval.tasks", "empty task list");
  return out;
}

}  // namespace

std::vector<LabeledTrajectory> ArmResult::training_set() const {
  std::vector<LabeledTrajectory> out;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (kept[i]) out.push_back(labeled[i]);
  }
  return out;
}

ExperimentSetup make_setup(const ExperimentConfig& config) {
  ExperimentSetup s;
  switch (config.kind) {
    case ExperimentKind::Names:
    case ExperimentKind::NoiseAnalysis:
      s.catalog = names_catalog();
      s.kind = TemplateKind::NameQA;
      break;
    case ExperimentKind::Attributes:
      s.catalog = attributes_catalog();
      s.kind = config.variant == "color" ? TemplateKind::ColorQA : TemplateKind::NameQA;
      break;
    case ExperimentKind::Categories:
      s.catalog = categories_catalog();
      s.kind = TemplateKind::FoodToyQA;
      break;
    case ExperimentKind::Preferences:
      s.catalog = preferences_catalog();
      s.kind = TemplateKind::PreferenceQA;
      s.prefs = make_preferences(config.variant == "arbitrary" ? PreferenceKind::Arbitrary : PreferenceKind::Aligned);
      break;
  }
  validate(s.catalog);
  if (s.prefs) validate(*s.prefs, s.catalog);
  s.tasks = select_tasks(default_tasks(s.catalog, s.preferences()), config.eval_tasks);
  return s;
}

std::vector<ArmSpec> experiment_arms(const ExperimentConfig& config) {
  if (config.kind == ExperimentKind::NoiseAnalysis) {
    const double keep = config.analysis_filter_keep;
    return {{"zeroshot", "names-zeroshot", 1.0},
            {"zeroshot-filtered", "names-zeroshot", keep},
            {"fewshot", "names-fewshot", 1.0},
            {"fewshot-filtered", "names-fewshot", keep}};
  }
  return {{"main", resolve_relabeler(config, config.relabeler), config.keep_fraction}};
}

std::string resolve_relabeler(const ExperimentConfig& config, const std::string& name) {
  if (name != "auto") return name;
  switch (config.kind) {
    case ExperimentKind::Names:
    case ExperimentKind::NoiseAnalysis: return "names-zeroshot";
    case ExperimentKind::Attributes: return "attributes-" + config.variant;
    case ExperimentKind::Categories: return "categories-" + config.variant;
    case ExperimentKind::Preferences: return "preferences-" + config.variant;
  }
  return name;
}

std::unique_ptr<Relabeler> make_relabeler(const ExperimentConfig& config, const std::string& resolved) {
  if (resolved == "oracle") return std::make_unique<OracleRelabeler>();
  if (resolved == "remote") return std::make_unique<RemoteRelabeler>(config.endpoint);
  return std::make_unique<NoisyRelabeler>(make_preset(resolved, config.k_generalization));
}

PromptSpec make_prompt(const ExperimentConfig& config, const ExperimentSetup& setup, const std::string& resolved) {
  const bool preset = resolved != "oracle" && resolved != "remote";
  const bool fewshot = preset_is_fewshot(preset ? resolved : resolve_relabeler(config, "auto"));
  std::vector<Exemplar> exemplars;
  if (fewshot) {
    if (config.kind == ExperimentKind::Categories && config.variant.starts_with("fewshot-")) {
      exemplars = category_exemplars(config.variant.back() - '0', setup.catalog);
    } else {
      exemplars = catalog_exemplars(setup.kind, setup.catalog, setup.preferences());
    }
  }
  switch (setup.kind) {
    case TemplateKind::NameQA: return name_prompt(std::move(exemplars));
    case TemplateKind::ColorQA: return color_prompt(std::move(exemplars));
    case TemplateKind::FoodToyQA: return food_toy_prompt(std::move(exemplars));
    case TemplateKind::PreferenceQA: return preference_prompt(*setup.prefs, std::move(exemplars));
  }
  return name_prompt();
}

std::vector<Trajectory> stage_generate(const ExperimentConfig& config, const ExperimentSetup& setup, int workers) {
  return in_stage("generate", [&] {
    const EnvConfig env = config.resolved_env();
    const PolicyParams untrained = init_policy(config.token_dim, env.embedding_dim, derive_seed(config.seed, "policy"));
    return generate_batch(setup.catalog, env, untrained, config.n_trajectories, ActMode::UniformRandom, config.seed,
                          workers);
  });
}

RelabelStageResult stage_relabel(const ExperimentConfig& config, const ExperimentSetup& setup, const ArmSpec& arm,
                                 std::span<const Trajectory> trajectories, LabelCache* cache, int workers) {
  return in_stage("relabel", [&] {
    const auto relabeler = make_relabeler(config, arm.relabeler);
    const PromptSpec prompt = make_prompt(config, setup, arm.relabeler);
    RelabelStageResult out;
    out.relabeled = relabel_batch(trajectories, prompt, *relabeler, cache, workers);
    if (!out.relabeled.stats.balanced()) throw Error("dropped-trajectory accounting does not balance");
    if (out.relabeled.labeled.empty()) throw Error("no trajectory survived relabeling");
    out.kept.assign(out.relabeled.labeled.size(), 0);
    std::vector<double> confidence;
    std::vector<std::size_t> episodes;
    for (const auto& l : out.relabeled.labeled) {
      confidence.push_back(l.label.confidence);
      episodes.push_back(l.trajectory.episode_index);
    }
    for (std::size_t i : select_most_confident(confidence, episodes, arm.keep_fraction)) out.kept[i] = 1;
    return out;
  });
}

PolicyParams stage_train(const ExperimentConfig& config, std::span<const LabeledTrajectory> training_set) {
  return in_stage("train", [&] {
    if (training_set.empty()) throw Error("no labeled trajectories to train on");
    const PolicyParams init = init_policy(config.token_dim, config.env.embedding_dim, derive_seed(config.seed, "policy"));
    return bc_train(to_train_examples(training_set), config.resolved_train(), init);
  });
}

EvalReport stage_evaluate(const ExperimentConfig& config, const ExperimentSetup& setup, const PolicyParams& policy,
                          int workers) {
  return in_stage("eval", [&] {
    return evaluate(policy, setup.catalog, config.resolved_eval_env(), setup.tasks, config.eval,
                    derive_seed(config.seed, "evaluation"), workers);
  });
}

std::vector<RegressionPoint> regression_points(std::span<const TaskQuality> quality, const EvalReport& eval) {
  std::vector<RegressionPoint> points;
  for (const auto& q : quality) {
    if (const TaskResult* r = eval.find(q.task)) points.push_back({q.task, q.precision, q.accuracy, r->rate});
  }
  return points;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers) {
  validate(config);
  const ExperimentSetup setup = make_setup(config);
  ExperimentResult result;
  result.trajectories = stage_generate(config, setup, workers);

  LabelCache cache;
  for (const ArmSpec& spec : experiment_arms(config)) {
    ArmResult arm;
    arm.spec = spec;
    RelabelStageResult r = stage_relabel(config, setup, spec, result.trajectories, &cache, workers);
    arm.stats = r.relabeled.stats;
    arm.labeled = std::move(r.relabeled.labeled);
    arm.kept = std::move(r.kept);
    const auto training = arm.training_set();
    const auto scored = scored_labels(training, setup.kind, setup.preferences());
    const auto vocab = setup.vocab();
    arm.quality = quality_report(scored, vocab);
    arm.task_quality = task_quality(scored, vocab);
    arm.policy = stage_train(config, training);
    arm.eval = stage_evaluate(config, setup, arm.policy, workers);
    result.arms.push_back(std::move(arm));
  }

  if (result.arms.size() > 1) {
    std::vector<RegressionPoint> points;
    for (const auto& arm : result.arms) {
      for (auto& p : regression_points(arm.task_quality, arm.eval)) points.push_back(std::move(p));
    }
    result.regression = in_stage("analyze", [&] { return fit_task_regression(points); });
  }
  return result;
}

}  // namespace herlab
