#include "herlab/commands.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>

#include "herlab/artifacts.hpp"
#include "herlab/checkpoint.hpp"
#include "herlab/error.hpp"
#include "herlab/experiment.hpp"
#include "herlab/regression.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kTrajectoriesFile = "trajectories.jsonl";
constexpr const char* kLabelsFile = "labels.jsonl";
constexpr const char* kPolicyFile = "policy.json";
constexpr const char* kResultsFile = "results.csv";
constexpr const char* kReportFile = "report.json";
constexpr const char* kEffectiveConfigFile = "config.effective.ini";

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void require_file(const char* stage_name, const fs::path& path) {
  if (!fs::exists(path)) throw StageError(stage_name, "missing upstream artifact " + path.string());
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json counts_json(const ClassCounts& c) {
  return {{"correct", c.correct}, {"wrong", c.wrong}, {"irrelevant", c.irrelevant}};
}

json quality_json(const LabelQualityReport& q) {
  json per_object = json::array();
  for (const auto& o : q.per_object) {
    per_object.push_back({{"object", o.object},
                          {"counts", counts_json(o.counts)},
                          {"accuracy", o.counts.accuracy()},
                          {"precision", optional_number(o.counts.precision())}});
  }
  return {{"n", q.n},
          {"counts", counts_json(q.counts)},
          {"accuracy", q.accuracy},
          {"precision", optional_number(q.precision)},
          {"per_object", per_object}};
}

json task_quality_json(std::span<const TaskQuality> tq) {
  json out = json::array();
  for (const auto& t : tq) {
    out.push_back({{"task", t.task},
                   {"mentions", t.mentions},
                   {"truths", t.truths},
                   {"correct", t.correct},
                   {"precision", t.precision},
                   {"accuracy", t.accuracy}});
  }
  return out;
}

json eval_json(const EvalReport& e) {
  json tasks = json::array();
  for (const auto& t : e.tasks) {
    tasks.push_back({{"task", t.task},
                     {"instruction", t.instruction},
                     {"n", t.n},
                     {"successes", t.successes},
                     {"rate", t.rate},
                     {"ci_lo", t.ci_lo},
                     {"ci_hi", t.ci_hi}});
  }
  return {{"mean_success", e.mean_success}, {"tasks", tasks}};
}

json stats_json(const RelabelStats& s) {
  return {{"input", s.input},
          {"timeouts", s.timeouts},
          {"postprocess_drops", s.postprocess_drops},
          {"labeled", s.labeled},
          {"cache_hits", s.cache_hits},
          {"invocations", s.invocations}};
}

json term_json(const RegressionTerm& t) {
  return {{"name", t.name}, {"estimate", t.estimate}, {"std_error", t.std_error}, {"t", t.t}};
}

json regression_json(const RegressionFit& fit) {
  json intercepts = json::array();
  for (const auto& t : fit.intercepts) intercepts.push_back(term_json(t));
  return {{"precision", term_json(fit.precision)},
          {"accuracy", term_json(fit.accuracy)},
          {"intercepts", intercepts},
          {"n_points", fit.n_points},
          {"dof", fit.dof},
          {"sigma2", fit.sigma2}};
}

std::string regression_csv(const RegressionFit& fit) {
  std::string out = "term,estimate,std_error,t\n";
  auto row = [&](const RegressionTerm& t) {
    out += t.name + ',' + format_double(t.estimate) + ',' + format_double(t.std_error) + ',' + format_double(t.t) +
           '\n';
  };
  row(fit.precision);
  row(fit.accuracy);
  for (const auto& t : fit.intercepts) row(t);
  return out;
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Quality, per-task quality, decile sweep, calibration and unigram tables for one label set.
json write_analysis(const fs::path& dir, std::span<const LabelRecord> records, int bins, std::ostream& out) {
  const auto vocab = record_vocab(records);
  const auto kept = scored_labels(records, true);
  const auto all = scored_labels(records, false);
  if (kept.empty()) throw Error("no kept labels to analyze");

  const auto quality = quality_report(kept, vocab);
  std::string csv = "object,n,correct,wrong,irrelevant,accuracy,precision\n";
  for (const auto& o : quality.per_object) {
    csv += o.object + ',' + std::to_string(o.counts.n()) + ',' + std::to_string(o.counts.correct) + ',' +
           std::to_string(o.counts.wrong) + ',' + std::to_string(o.counts.irrelevant) + ',' +
           format_double(o.counts.accuracy()) + ',' + csv_optional(o.counts.precision()) + '\n';
  }
  write_text(dir / "quality.csv", csv);

  const auto tq = task_quality(kept, vocab);
  csv = "task,mentions,truths,correct,precision,accuracy\n";
  for (const auto& t : tq) {
    csv += t.task + ',' + std::to_string(t.mentions) + ',' + std::to_string(t.truths) + ',' +
           std::to_string(t.correct) + ',' + format_double(t.precision) + ',' + format_double(t.accuracy) + '\n';
  }
  write_text(dir / "task_quality.csv", csv);

  if (all.size() >= 10) {
    csv = "keep_fraction,kept,precision,accuracy\n";
    for (const auto& p : decile_sweep(all, vocab)) {
      csv += format_double(p.keep_fraction) + ',' + std::to_string(p.kept) + ',' + csv_optional(p.precision) + ',' +
             format_double(p.accuracy) + '\n';
    }
    write_text(dir / "sweep.csv", csv);
  } else {
    out << "decile sweep skipped: fewer than 10 labels\n";
  }

  csv = "lo,hi,n,correct,wrong,irrelevant\n";
  for (const auto& b : calibration_histogram(all, vocab, bins)) {
    csv += format_double(b.lo) + ',' + format_double(b.hi) + ',' + std::to_string(b.counts.n()) + ',' +
           std::to_string(b.counts.correct) + ',' + std::to_string(b.counts.wrong) + ',' +
           std::to_string(b.counts.irrelevant) + '\n';
  }
  write_text(dir / "calibration.csv", csv);

  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(first_line(r.text));
  csv = "token,count\n";
  for (const auto& [token, count] : unigram_frequencies(texts)) csv += token + ',' + std::to_string(count) + '\n';
  write_text(dir / "unigrams.csv", csv);

  json j = {{"quality", quality_json(quality)}, {"task_quality", task_quality_json(tq)}};
  write_text(dir / "quality.json", j.dump(2) + "\n");
  return j;
}

void print_eval(std::ostream& out, const std::string& arm, const EvalReport& eval) {
  for (const auto& t : eval.tasks) {
    out << arm << "  " << t.task << "  " << fixed3(t.rate) << "  [" << fixed3(t.ci_lo) << ", " << fixed3(t.ci_hi)
        << "]  n=" << t.n << "\n";
  }
  out << arm << "  mean  " << fixed3(eval.mean_success) << "\n";
}

std::vector<ArmSpec> arms_for(const ExperimentConfig& config, bool has_override, const char* flag) {
  auto arms = experiment_arms(config);
  if (has_override && arms.size() > 1) {
    throw ConfigError(flag, "not supported for experiments with several arms");
  }
  return arms;
}

fs::path labels_path(const ExperimentConfig& config, const ArmSpec& arm, const std::optional<fs::path>& override) {
  return override ? *override : arm_dir(config, arm.name) / kLabelsFile;
}

fs::path policy_path(const ExperimentConfig& config, const ArmSpec& arm, const std::optional<fs::path>& override) {
  return override ? *override : arm_dir(config, arm.name) / kPolicyFile;
}

}  // namespace

ExperimentConfig effective_config(const CommandOptions& options) {
  if (options.config.empty()) throw ConfigError("--config", "a config file is required");
  ExperimentConfig config = load_config(options.config);
  if (options.seed) config.seed = *options.seed;
  if (options.output) config.output_dir = *options.output;
  if (options.workers < 1) throw ConfigError("--workers", "must be at least 1");
  validate(config);
  return config;
}

fs::path arm_dir(const ExperimentConfig& config, const std::string& arm) {
  if (experiment_arms(config).size() > 1) return config.output_dir / arm;
  return config.output_dir;
}

int cmd_exp(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig config = effective_config(options);
  const ExperimentSetup setup = make_setup(config);
  const ExperimentResult result = run_experiment(config, options.workers);

  stage("persist", [&] {
    write_text(config.output_dir / kEffectiveConfigFile, render_config(config));
    write_trajectories(config.output_dir / kTrajectoriesFile, result.trajectories);
    json arms = json::array();
    for (const auto& arm : result.arms) {
      const fs::path dir = arm_dir(config, arm.spec.name);
      const auto records = make_label_records(arm.labeled, arm.kept, setup.catalog, setup.kind, setup.preferences());
      write_labels(dir / kLabelsFile, records);
      save_policy(dir / kPolicyFile, arm.policy);
      write_results_csv(dir / kResultsFile, arm.eval);
      write_analysis(dir, records, config.calibration_bins, out);
      const json report = {{"experiment", to_string(config.kind)},
                           {"variant", config.variant},
                           {"arm", arm.spec.name},
                           {"relabeler", arm.spec.relabeler},
                           {"keep_fraction", arm.spec.keep_fraction},
                           {"seed", config.seed},
                           {"relabel", stats_json(arm.stats)},
                           {"kept", arm.training_set().size()},
                           {"quality", quality_json(arm.quality)},
                           {"task_quality", task_quality_json(arm.task_quality)},
                           {"eval", eval_json(arm.eval)}};
      write_text(dir / kReportFile, report.dump(2) + "\n");
      arms.push_back(report);
    }
    if (result.arms.size() > 1) {
      json summary = {{"experiment", to_string(config.kind)}, {"seed", config.seed}, {"arms", arms}};
      if (result.regression) {
        write_text(config.output_dir / "regression.csv", regression_csv(*result.regression));
        write_text(config.output_dir / "regression.json", regression_json(*result.regression).dump(2) + "\n");
        summary["regression"] = regression_json(*result.regression);
      }
      write_text(config.output_dir / kReportFile, summary.dump(2) + "\n");
    }
  });

  for (const auto& arm : result.arms) print_eval(out, arm.spec.name, arm.eval);
  if (result.regression) {
    out << "regression  beta_precision " << fixed3(result.regression->precision.estimate) << " (t "
        << fixed3(result.regression->precision.t) << ")  beta_accuracy "
        << fixed3(result.regression->accuracy.estimate) << " (t " << fixed3(result.regression->accuracy.t) << ")\n";
  }
  return kExitOk;
}

int cmd_gen(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig config = effective_config(options);
  const ExperimentSetup setup = make_setup(config);
  const auto trajectories = stage_generate(config, setup, options.workers);
  stage("generate", [&] {
    write_text(config.output_dir / kEffectiveConfigFile, render_config(config));
    write_trajectories(config.output_dir / kTrajectoriesFile, trajectories);
  });
  std::size_t timeouts = 0;
  for (const auto& t : trajectories) timeouts += t.outcome.is_timeout() ? 1 : 0;
  out << "generated " << trajectories.size() << " trajectories (" << timeouts << " timeouts) -> "
      << (config.output_dir / kTrajectoriesFile).string() << "\n";
  return kExitOk;
}

int cmd_relabel(const CommandOptions& options, const RelabelOptions& relabel, std::ostream& out) {
  ExperimentConfig config = effective_config(options);
  if (relabel.relabeler) config.relabeler = *relabel.relabeler;
  if (relabel.template_kind) {
    const std::string& t = *relabel.template_kind;
    if (config.kind == ExperimentKind::Attributes && (t == "name" || t == "color")) {
      config.variant = t;
    } else if (t != to_string(make_setup(config).kind)) {
      throw ConfigError("--template", "'" + t + "' does not fit a " + std::string(to_string(config.kind)) +
                                          " experiment");
    }
  }
  validate(config);
  const ExperimentSetup setup = make_setup(config);
  const fs::path traj_path = config.output_dir / kTrajectoriesFile;
  require_file("relabel", traj_path);
  const auto trajectories =
      stage("relabel", [&] { return read_trajectories(traj_path, setup.catalog, config.resolved_env()); });

  LabelCache cache;
  for (const ArmSpec& arm : arms_for(config, relabel.labels.has_value(), "--labels")) {
    const auto r = stage_relabel(config, setup, arm, trajectories, &cache, options.workers);
    const fs::path path = labels_path(config, arm, relabel.labels);
    stage("relabel", [&] {
      write_labels(path,
                   make_label_records(r.relabeled.labeled, r.kept, setup.catalog, setup.kind, setup.preferences()));
    });
    std::size_t kept = 0;
    for (char k : r.kept) kept += k ? 1 : 0;
    out << arm.name << ": " << r.relabeled.stats.labeled << " labels (" << r.relabeled.stats.timeouts
        << " timeouts, " << r.relabeled.stats.postprocess_drops << " dropped, " << kept << " kept) -> "
        << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_train(const CommandOptions& options, const TrainOptions& train, std::ostream& out) {
  const ExperimentConfig config = effective_config(options);
  const ExperimentSetup setup = make_setup(config);
  const fs::path traj_path = config.output_dir / kTrajectoriesFile;
  require_file("train", traj_path);
  const auto trajectories =
      stage("train", [&] { return read_trajectories(traj_path, setup.catalog, config.resolved_env()); });

  const bool override = train.labels.has_value() || train.checkpoint.has_value();
  for (const ArmSpec& arm : arms_for(config, override, train.labels ? "--labels" : "--checkpoint")) {
    const fs::path path = labels_path(config, arm, train.labels);
    require_file("train", path);
    const auto training = stage("train", [&] { return attach_labels(read_labels(path), trajectories); });
    const PolicyParams policy = stage_train(config, training);
    const fs::path ckpt = policy_path(config, arm, train.checkpoint);
    stage("train", [&] { save_policy(ckpt, policy); });
    out << arm.name << ": trained on " << training.size() << " labels -> " << ckpt.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const CommandOptions& options, const EvalOptions& eval, std::ostream& out) {
  const ExperimentConfig config = effective_config(options);
  const ExperimentSetup setup = make_setup(config);
  const bool override = eval.checkpoint.has_value() || eval.results.has_value();
  for (const ArmSpec& arm : arms_for(config, override, eval.checkpoint ? "--checkpoint" : "--results")) {
    const fs::path ckpt = policy_path(config, arm, eval.checkpoint);
    require_file("eval", ckpt);
    const PolicyParams policy = stage("eval", [&] { return load_policy(ckpt); });
    const EvalReport report = stage_evaluate(config, setup, policy, options.workers);
    const fs::path path = eval.results ? *eval.results : arm_dir(config, arm.name) / kResultsFile;
    stage("eval", [&] { write_results_csv(path, report); });
    print_eval(out, arm.name, report);
  }
  return kExitOk;
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& out) {
  if (options.labels.empty()) throw ConfigError("--labels", "at least one labels file is required");
  if (!options.results.empty() && options.results.size() != options.labels.size()) {
    throw ConfigError("--results", "give one results file per labels file");
  }
  if (options.calibration_bins < 2) throw ConfigError("--bins", "needs at least 2 bins");

  return stage("analyze", [&] {
    const bool several = options.labels.size() > 1;
    std::vector<RegressionPoint> points;
    json sets = json::array();
    for (std::size_t i = 0; i < options.labels.size(); ++i) {
      const auto records = read_labels(options.labels[i]);
      const fs::path dir = several ? options.output / ("set" + std::to_string(i + 1)) : options.output;
      json j = write_analysis(dir, records, options.calibration_bins, out);
      j["labels"] = options.labels[i].string();
      if (!options.results.empty()) {
        const EvalReport eval = read_results_csv(options.results[i]);
        const auto tq = task_quality(scored_labels(records, true), record_vocab(records));
        for (auto& p : regression_points(tq, eval)) points.push_back(std::move(p));
        j["results"] = options.results[i].string();
        j["mean_success"] = eval.mean_success;
      }
      out << options.labels[i].string() << ": accuracy " << fixed3(j["quality"]["accuracy"].get<double>())
          << ", precision "
          << (j["quality"]["precision"].is_null() ? std::string("n/a")
                                                  : fixed3(j["quality"]["precision"].get<double>()))
          << " -> " << dir.string() << "\n";
      sets.push_back(std::move(j));
    }

    json summary = {{"sets", sets}};
    if (!several) {
      out << "regression skipped: needs at least two label sets\n";
    } else if (options.results.empty()) {
      out << "regression skipped: no results files given\n";
    } else {
      const RegressionFit fit = fit_task_regression(points);
      write_text(options.output / "regression.csv", regression_csv(fit));
      write_text(options.output / "regression.json", regression_json(fit).dump(2) + "\n");
      summary["regression"] = regression_json(fit);
      out << "regression over " << fit.n_points << " points: beta_precision " << fixed3(fit.precision.estimate)
          << " (t " << fixed3(fit.precision.t) << "), beta_accuracy " << fixed3(fit.accuracy.estimate) << " (t "
          << fixed3(fit.accuracy.t) << ")\n";
    }
    write_text(options.output / kReportFile, summary.dump(2) + "\n");
    return kExitOk;
  });
}

int run_command(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitStage;
  }
}

}  // namespace herlab
