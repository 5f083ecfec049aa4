#include "herlab/config.hpp"

#include <boost/program_options.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "herlab/error.hpp"
#include "herlab/presets.hpp"
#include "herlab/random.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

namespace po = boost::program_options;

// Every accepted key, in the order render_config writes them.
constexpr std::string_view kKeys[] = {
    "experiment.kind",       "experiment.variant",   "experiment.seed",       "experiment.output_dir",
    "env.objects",           "env.min_objects",      "env.max_objects",       "env.colors",
    "env.recolor_seed",      "env.embedding_dim",    "env.render_noise",      "env.p_timeout",
    "generate.n_trajectories",
    "relabel.relabeler",     "relabel.keep_fraction", "relabel.k_generalization", "relabel.endpoint",
    "relabel.max_tokens",    "relabel.timeout_ms",   "relabel.retries",       "relabel.max_in_flight",
    "train.optimizer",       "train.learning_rate",  "train.epochs",          "train.batch_size",
    "train.weight_decay",    "train.token_dim",      "train.token_init_scale", "train.seed",
    "eval.rollouts",         "eval.mode",            "eval.p_timeout",        "eval.tasks",
    "analysis.filter_keep",  "analysis.calibration_bins",
};

template <typename T>
T parse_integer(const std::string& field, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& field, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
  return value;
}

ExperimentKind parse_kind(const std::string& text) {
  for (auto k : {ExperimentKind::Names, ExperimentKind::Attributes, ExperimentKind::Categories,
                 ExperimentKind::Preferences, ExperimentKind::NoiseAnalysis}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("experiment.kind",
                    "unknown experiment '" + text + "' (names, attributes, categories, preferences, noise-analysis)");
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Names: return "names";
    case ExperimentKind::Attributes: return "attributes";
    case ExperimentKind::Categories: return "categories";
    case ExperimentKind::Preferences: return "preferences";
    case ExperimentKind::NoiseAnalysis: return "noise-analysis";
  }
  return "names";
}

EnvConfig ExperimentConfig::resolved_env() const {
  EnvConfig e = env;
  e.world_seed = seed;
  if (auto_colors) {
    e.color_policy = kind == ExperimentKind::Attributes ? ColorPolicy::PermutePerEpisode : ColorPolicy::Fixed;
  }
  return e;
}

EnvConfig ExperimentConfig::resolved_eval_env() const {
  EnvConfig e = resolved_env();
  e.p_timeout = eval_p_timeout;
  return e;
}

TrainConfig ExperimentConfig::resolved_train() const {
  TrainConfig t = train;
  t.seed = train_seed.value_or(derive_seed(seed, "train"));
  return t;
}

ExperimentConfig parse_config(const std::string& text) {
  po::options_description desc;
  for (auto key : kKeys) desc.add_options()(std::string(key).c_str(), po::value<std::string>());

  po::variables_map vm;
  std::istringstream in(text);
  try {
    po::store(po::parse_config_file(in, desc, false), vm);
  } catch (const po::unknown_option& e) {
    throw ConfigError(e.get_option_name(), "unknown configuration key");
  } catch (const po::multiple_occurrences& e) {
    throw ConfigError(e.get_option_name(), "key given more than once");
  } catch (const po::error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }

  const auto get = [&](std::string_view key) -> std::optional<std::string> {
    const std::string k(key);
    if (!vm.count(k)) return std::nullopt;
    return trim(vm[k].as<std::string>());
  };

  ExperimentConfig c;
  if (auto v = get("experiment.kind")) c.kind = parse_kind(*v);
  if (auto v = get("experiment.variant")) c.variant = *v;
  if (auto v = get("experiment.seed")) c.seed = parse_integer<std::uint64_t>("experiment.seed", *v);
  if (auto v = get("experiment.output_dir")) c.output_dir = *v;

  if (auto v = get("env.objects")) {
    if (*v == "all") {
      c.env.count_policy = CountPolicy::AllCatalog;
    } else if (*v == "sampled") {
      c.env.count_policy = CountPolicy::Sampled;
    } else {
      throw ConfigError("env.objects", "expected 'all' or 'sampled', got '" + *v + "'");
    }
  }
  if (auto v = get("env.min_objects")) c.env.min_objects = parse_integer<int>("env.min_objects", *v);
  if (auto v = get("env.max_objects")) c.env.max_objects = parse_integer<int>("env.max_objects", *v);
  if (auto v = get("env.colors")) {
    c.auto_colors = *v == "auto";
    if (*v == "fixed") {
      c.env.color_policy = ColorPolicy::Fixed;
    } else if (*v == "permute") {
      c.env.color_policy = ColorPolicy::PermutePerEpisode;
    } else if (*v == "recolor") {
      c.env.color_policy = ColorPolicy::Recolored;
    } else if (*v != "auto") {
      throw ConfigError("env.colors", "expected auto, fixed, permute or recolor, got '" + *v + "'");
    }
  }
  if (auto v = get("env.recolor_seed")) c.env.recolor_seed = parse_integer<std::uint64_t>("env.recolor_seed", *v);
  if (auto v = get("env.embedding_dim")) c.env.embedding_dim = parse_integer<int>("env.embedding_dim", *v);
  if (auto v = get("env.render_noise")) c.env.render_noise = parse_double("env.render_noise", *v);
  if (auto v = get("env.p_timeout")) c.env.p_timeout = parse_double("env.p_timeout", *v);

  if (auto v = get("generate.n_trajectories")) {
    c.n_trajectories = parse_integer<std::size_t>("generate.n_trajectories", *v);
  }

  if (auto v = get("relabel.relabeler")) c.relabeler = *v;
  if (auto v = get("relabel.keep_fraction")) c.keep_fraction = parse_double("relabel.keep_fraction", *v);
  if (auto v = get("relabel.k_generalization")) c.k_generalization = parse_double("relabel.k_generalization", *v);
  if (auto v = get("relabel.endpoint")) c.endpoint.url = *v;
  if (auto v = get("relabel.max_tokens")) c.endpoint.max_tokens = parse_integer<int>("relabel.max_tokens", *v);
  if (auto v = get("relabel.timeout_ms")) c.endpoint.timeout_ms = parse_integer<int>("relabel.timeout_ms", *v);
  if (auto v = get("relabel.retries")) c.endpoint.retries = parse_integer<int>("relabel.retries", *v);
  if (auto v = get("relabel.max_in_flight")) c.endpoint.max_in_flight = parse_integer<int>("relabel.max_in_flight", *v);

  if (auto v = get("train.optimizer")) {
    try {
      c.train.optimizer = parse_optimizer(*v);
    } catch (const Error& e) {
      throw ConfigError("train.optimizer", e.what());
    }
  }
  if (auto v = get("train.learning_rate")) c.train.learning_rate = parse_double("train.learning_rate", *v);
  if (auto v = get("train.epochs")) c.train.epochs = parse_integer<int>("train.epochs", *v);
  if (auto v = get("train.batch_size")) c.train.batch_size = parse_integer<int>("train.batch_size", *v);
  if (auto v = get("train.weight_decay")) c.train.weight_decay = parse_double("train.weight_decay", *v);
  if (auto v = get("train.token_dim")) c.token_dim = parse_integer<int>("train.token_dim", *v);
  if (auto v = get("train.token_init_scale")) c.train.token_init_scale = parse_double("train.token_init_scale", *v);
  if (auto v = get("train.seed")) c.train_seed = parse_integer<std::uint64_t>("train.seed", *v);

  if (auto v = get("eval.rollouts")) c.eval.rollouts = parse_integer<std::size_t>("eval.rollouts", *v);
  if (auto v = get("eval.mode")) {
    try {
      c.eval.mode = parse_act_mode(*v);
    } catch (const Error& e) {
      throw ConfigError("eval.mode", e.what());
    }
  }
  if (auto v = get("eval.p_timeout")) c.eval_p_timeout = parse_double("eval.p_timeout", *v);
  if (auto v = get("eval.tasks")) c.eval_tasks = *v;

  if (auto v = get("analysis.filter_keep")) c.analysis_filter_keep = parse_double("analysis.filter_keep", *v);
  if (auto v = get("analysis.calibration_bins")) {
    c.calibration_bins = parse_integer<int>("analysis.calibration_bins", *v);
  }

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate(const ExperimentConfig& c) {
  const std::string& v = c.variant;
  switch (c.kind) {
    case ExperimentKind::Names:
    case ExperimentKind::NoiseAnalysis:
      require(v.empty(), "experiment.variant", "this experiment takes no variant");
      break;
    case ExperimentKind::Attributes:
      require(v == "name" || v == "color", "experiment.variant", "attributes needs variant name or color");
      break;
    case ExperimentKind::Categories: {
      const bool fewshot = v.size() == 9 && v.starts_with("fewshot-") && v[8] >= '1' && v[8] <= '5';
      require(v == "zeroshot" || fewshot, "experiment.variant",
              "categories needs variant zeroshot or fewshot-1 .. fewshot-5");
      break;
    }
    case ExperimentKind::Preferences:
      require(v == "aligned" || v == "arbitrary", "experiment.variant",
              "preferences needs variant aligned or arbitrary");
      break;
  }
  require(!c.output_dir.empty(), "experiment.output_dir", "must not be empty");

  require(c.env.min_objects >= 1 && c.env.min_objects <= c.env.max_objects, "env.min_objects",
          "must lie in [1, max_objects]");
  require(c.env.max_objects <= 10, "env.max_objects", "rooms hold at most 10 objects");
  require(c.env.embedding_dim > 0, "env.embedding_dim", "must be positive");
  require(c.env.render_noise >= 0.0, "env.render_noise", "must be non-negative");
  require(c.env.p_timeout >= 0.0 && c.env.p_timeout <= 1.0, "env.p_timeout", "must lie in [0, 1]");

  require(c.n_trajectories > 0, "generate.n_trajectories", "must be positive");

  const std::string& r = c.relabeler;
  if (r != "oracle" && r != "auto" && r != "remote") {
    try {
      make_preset(r, c.k_generalization);
    } catch (const Error& e) {
      throw ConfigError("relabel.relabeler", e.what());
    }
  }
  if (c.kind == ExperimentKind::NoiseAnalysis) {
    require(r == "auto", "relabel.relabeler", "noise-analysis always runs the names zeroshot and fewshot presets");
  }
  if (r == "remote") require(!c.endpoint.url.empty(), "relabel.endpoint", "remote relabeling needs an endpoint");
  require(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0, "relabel.keep_fraction", "must lie in (0, 1]");
  require(c.k_generalization >= 0.0 && c.k_generalization <= 1.0, "relabel.k_generalization", "must lie in [0, 1]");
  require(c.endpoint.max_in_flight >= 1, "relabel.max_in_flight", "must be at least 1");
  require(c.endpoint.retries >= 0, "relabel.retries", "must be non-negative");
  require(c.endpoint.timeout_ms > 0, "relabel.timeout_ms", "must be positive");
  require(c.endpoint.max_tokens > 0, "relabel.max_tokens", "must be positive");

  require(c.train.learning_rate > 0.0, "train.learning_rate", "must be positive");
  require(c.train.epochs >= 0, "train.epochs", "must be non-negative");
  require(c.train.batch_size > 0, "train.batch_size", "must be positive");
  require(c.train.weight_decay >= 0.0, "train.weight_decay", "must be non-negative");
  require(c.token_dim > 0, "train.token_dim", "must be positive");
  require(c.train.token_init_scale > 0.0, "train.token_init_scale", "must be positive");

  require(c.eval.rollouts > 0, "eval.rollouts", "must be positive");
  require(c.eval_p_timeout >= 0.0 && c.eval_p_timeout <= 1.0, "eval.p_timeout", "must lie in [0, 1]");
  require(!c.eval_tasks.empty(), "eval.tasks", "must be 'auto' or a list of task ids");

  require(c.analysis_filter_keep > 0.0 && c.analysis_filter_keep <= 1.0, "analysis.filter_keep",
          "must lie in (0, 1]");
  require(c.calibration_bins >= 2, "analysis.calibration_bins", "must be at least 2");
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto colors = [&]() -> std::string {
    if (c.auto_colors) return "auto";
    return std::string(to_string(c.env.color_policy));
  };
  out << "[experiment]\n"
      << "kind = " << to_string(c.kind) << "\n"
      << "variant = " << c.variant << "\n"
      << "seed = " << c.seed << "\n"
      << "output_dir = " << c.output_dir.string() << "\n\n"
      << "[env]\n"
      << "objects = " << to_string(c.env.count_policy) << "\n"
      << "min_objects = " << c.env.min_objects << "\n"
      << "max_objects = " << c.env.max_objects << "\n"
      << "colors = " << colors() << "\n"
      << "recolor_seed = " << c.env.recolor_seed << "\n"
      << "embedding_dim = " << c.env.embedding_dim << "\n"
      << "render_noise = " << format_double(c.env.render_noise) << "\n"
      << "p_timeout = " << format_double(c.env.p_timeout) << "\n\n"
      << "[generate]\n"
      << "n_trajectories = " << c.n_trajectories << "\n\n"
      << "[relabel]\n"
      << "relabeler = " << c.relabeler << "\n"
      << "keep_fraction = " << format_double(c.keep_fraction) << "\n"
      << "k_generalization = " << format_double(c.k_generalization) << "\n"
      << "endpoint = " << c.endpoint.url << "\n"
      << "max_tokens = " << c.endpoint.max_tokens << "\n"
      << "timeout_ms = " << c.endpoint.timeout_ms << "\n"
      << "retries = " << c.endpoint.retries << "\n"
      << "max_in_flight = " << c.endpoint.max_in_flight << "\n\n"
      << "[train]\n"
      << "optimizer = " << to_string(c.train.optimizer) << "\n"
      << "learning_rate = " << format_double(c.train.learning_rate) << "\n"
      << "epochs = " << c.train.epochs << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "weight_decay = " << format_double(c.train.weight_decay) << "\n"
      << "token_dim = " << c.token_dim << "\n"
      << "token_init_scale = " << format_double(c.train.token_init_scale) << "\n"
      << "seed = " << c.resolved_train().seed << "\n\n"
      << "[eval]\n"
      << "rollouts = " << c.eval.rollouts << "\n"
      << "mode = " << to_string(c.eval.mode) << "\n"
      << "p_timeout = " << format_double(c.eval_p_timeout) << "\n"
      << "tasks = " << c.eval_tasks << "\n\n"
      << "[analysis]\n"
      << "filter_keep = " << format_double(c.analysis_filter_keep) << "\n"
      << "calibration_bins = " << c.calibration_bins << "\n";
  return out.str();
}

}  // namespace herlab
