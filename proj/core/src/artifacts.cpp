#include "herlab/artifacts.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "herlab/error.hpp"
#include "herlab/random.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string digits(buf, res.ptr);
  return std::string(16 - digits.size(), '0') + digits;
}

std::uint64_t parse_hex64(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error("bad trajectory hash '" + text + "'");
  }
  return v;
}

LabelClass parse_label_class(std::string_view text) {
  for (auto c : {LabelClass::Correct, LabelClass::Wrong, LabelClass::Irrelevant}) {
    if (to_string(c) == text) return c;
  }
  throw Error("unknown label class '" + std::string(text) + "'");
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("v").get<int>() != kArtifactVersion) {
        throw Error("unsupported record version " + j.at("v").dump());
      }
      fn(j);
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error("results: bad " + what + " '" + text + "'");
  }
  return v;
}

constexpr std::string_view kResultsHeader = "task,instruction,n,successes,rate,ci_lo,ci_hi";

}  // namespace

std::uint64_t trajectory_hash(const Trajectory& t) {
  std::uint64_t h = splitmix64(t.episode_seed ^ 0x9E3779B97F4A7C15ULL);
  h = splitmix64(h ^ t.episode_index);
  for (const auto& o : t.room.objects) h = splitmix64(h ^ fnv1a(o.spec.name + "\x1f" + o.color));
  h = splitmix64(h ^ t.chosen_index);
  const std::string outcome = t.outcome.is_timeout() ? std::string("<timeout>")
                                                     : t.outcome.held->name + "\x1f" + t.outcome.held->color;
  return splitmix64(h ^ fnv1a(outcome));
}

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories) {
  std::string out;
  for (const auto& t : trajectories) {
    json objects = json::array();
    for (const auto& o : t.room.objects) objects.push_back({{"name", o.spec.name}, {"color", o.color}});
    json outcome = {{"lifted", !t.outcome.is_timeout()}};
    if (t.outcome.held) {
      outcome["name"] = t.outcome.held->name;
      outcome["color"] = t.outcome.held->color;
    }
    const json j = {{"v", kArtifactVersion},    {"episode", t.episode_index}, {"seed", t.episode_seed},
                    {"instruction", t.instruction}, {"objects", objects},     {"chosen", t.chosen_index},
                    {"outcome", outcome}};
    out += j.dump();
    out += '\n';
  }
  write_text(path, out);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path, const Catalog& catalog,
                                          const EnvConfig& env) {
  std::vector<Trajectory> out;
  for_each_record(path, [&](const json& j) {
    const auto episode = j.at("episode").get<std::size_t>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    const auto chosen = j.at("chosen").get<std::size_t>();
    const auto& objects = j.at("objects");
    if (chosen >= objects.size()) throw Error("chosen index out of range");
    Trajectory t = replay_trajectory(catalog, env, episode, seed, chosen);
    bool same = t.instruction == j.at("instruction").get<std::string>() && t.room.objects.size() == objects.size();
    for (std::size_t i = 0; same && i < objects.size(); ++i) {
      same = t.room.objects[i].spec.name == objects[i].at("name").get<std::string>() &&
             t.room.objects[i].color == objects[i].at("color").get<std::string>();
    }
    const auto& outcome = j.at("outcome");
    if (same && outcome.at("lifted").get<bool>()) {
      same = t.outcome.held && t.outcome.held->name == outcome.at("name").get<std::string>() &&
             t.outcome.held->color == outcome.at("color").get<std::string>();
    } else if (same) {
      same = t.outcome.is_timeout();
    }
    if (!same) {
      throw Error("episode " + std::to_string(episode) + " does not replay under this config");
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<LabelRecord> make_label_records(std::span<const LabeledTrajectory> labeled, std::span<const char> kept,
                                            const Catalog& catalog, TemplateKind kind,
                                            const PreferenceStructure* prefs) {
  if (kept.size() != labeled.size()) throw Error("kept mask does not match the labeled set");
  const auto vocab = task_vocab(kind, catalog);
  std::vector<LabelRecord> out;
  out.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& l = labeled[i];
    const HeldObject& held = *l.trajectory.outcome.held;
    LabelRecord r;
    r.episode = l.trajectory.episode_index;
    r.seed = l.trajectory.episode_seed;
    r.chosen = l.trajectory.chosen_index;
    r.traj_hash = trajectory_hash(l.trajectory);
    r.experiment = std::string(to_string(catalog.experiment));
    r.template_kind = std::string(to_string(kind));
    r.object = held.name;
    r.color = held.color;
    r.truth = truth_token(kind, held, prefs);
    r.text = l.label.text;
    r.instruction = l.instruction;
    r.confidence = l.label.confidence;
    r.fallback = l.label.confidence_fallback;
    r.kept = kept[i] != 0;
    r.label_class = classify_label(r.instruction, vocab, r.truth);
    out.push_back(std::move(r));
  }
  return out;
}

void write_labels(const std::filesystem::path& path, std::span<const LabelRecord> records) {
  std::string out;
  for (const auto& r : records) {
    const json j = {{"v", kArtifactVersion},
                    {"episode", r.episode},
                    {"seed", r.seed},
                    {"chosen", r.chosen},
                    {"traj_hash", hex64(r.traj_hash)},
                    {"experiment", r.experiment},
                    {"template", r.template_kind},
                    {"object", r.object},
                    {"color", r.color},
                    {"truth", r.truth},
                    {"text", r.text},
                    {"instruction", r.instruction},
                    {"confidence", r.confidence},
                    {"fallback", r.fallback},
                    {"kept", r.kept},
                    {"class", to_string(r.label_class)}};
    out += j.dump();
    out += '\n';
  }
  write_text(path, out);
}

std::vector<LabelRecord> read_labels(const std::filesystem::path& path) {
  std::vector<LabelRecord> out;
  for_each_record(path, [&](const json& j) {
    LabelRecord r;
    r.episode = j.at("episode").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.chosen = j.at("chosen").get<std::size_t>();
    r.traj_hash = parse_hex64(j.at("traj_hash").get<std::string>());
    r.experiment = j.at("experiment").get<std::string>();
    r.template_kind = j.at("template").get<std::string>();
    r.object = j.at("object").get<std::string>();
    r.color = j.at("color").get<std::string>();
    r.truth = j.at("truth").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.instruction = j.at("instruction").get<std::string>();
    r.confidence = j.at("confidence").get<double>();
    r.fallback = j.at("fallback").get<bool>();
    r.kept = j.at("kept").get<bool>();
    r.label_class = parse_label_class(j.at("class").get<std::string>());
    out.push_back(std::move(r));
  });
  if (out.empty()) throw Error("no label records in " + path.string());
  return out;
}

std::vector<LabeledTrajectory> attach_labels(std::span<const LabelRecord> records,
                                             std::span<const Trajectory> trajectories) {
  std::unordered_map<std::size_t, const Trajectory*> by_episode;
  for (const auto& t : trajectories) by_episode.emplace(t.episode_index, &t);
  std::vector<LabeledTrajectory> out;
  for (const auto& r : records) {
    if (!r.kept) continue;
    const auto it = by_episode.find(r.episode);
    if (it == by_episode.end()) {
      throw Error("label for episode " + std::to_string(r.episode) + " has no trajectory");
    }
    if (trajectory_hash(*it->second) != r.traj_hash) {
      throw Error("label for episode " + std::to_string(r.episode) + " was made from a different trajectory");
    }
    out.push_back(LabeledTrajectory{*it->second, Label{r.text, r.confidence, r.fallback}, r.instruction});
  }
  return out;
}

std::vector<ScoredLabel> scored_labels(std::span<const LabelRecord> records, bool kept_only) {
  std::vector<ScoredLabel> out;
  for (const auto& r : records) {
    if (kept_only && !r.kept) continue;
    out.push_back(ScoredLabel{r.instruction, r.truth, r.object, r.confidence, r.episode});
  }
  return out;
}

std::vector<std::string> record_vocab(std::span<const LabelRecord> records) {
  if (records.empty()) throw Error("no label records");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.experiment != first.experiment || r.template_kind != first.template_kind) {
      throw Error("label records mix experiments or templates");
    }
  }
  return task_vocab(parse_template_kind(first.template_kind), make_catalog(parse_experiment_id(first.experiment)));
}

void write_results_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& t : report.tasks) {
    out += csv_field(t.task) + ',' + csv_field(t.instruction) + ',' + std::to_string(t.n) + ',' +
           std::to_string(t.successes) + ',' + format_double(t.rate) + ',' + format_double(t.ci_lo) + ',' +
           format_double(t.ci_hi) + '\n';
  }
  write_text(path, out);
}

EvalReport read_results_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw Error(path.string() + ": expected header '" + std::string(kResultsHeader) + "'");
  }
  EvalReport report;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw Error(path.string() + ": expected 7 fields in '" + line + "'");
    TaskResult r;
    r.task = f[0];
    r.instruction = f[1];
    r.n = parse_number<std::size_t>(f[2], "n");
    r.successes = parse_number<std::size_t>(f[3], "successes");
    r.rate = parse_number<double>(f[4], "rate");
    r.ci_lo = parse_number<double>(f[5], "ci_lo");
    r.ci_hi = parse_number<double>(f[6], "ci_hi");
    report.mean_success += r.rate;
    report.tasks.push_back(std::move(r));
  }
  if (report.tasks.empty()) throw Error(path.string() + ": no task rows");
  report.mean_success /= static_cast<double>(report.tasks.size());
  return report;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace herlab
