#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "herlab/artifacts.hpp"
#include "herlab/commands.hpp"
#include "herlab/error.hpp"

using namespace herlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("herlab-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const auto path = dir / "config.ini";
  write_text(path, body);
  return path;
}

std::string small_names(const fs::path& out, const std::string& relabeler = "oracle") {
  return "[experiment]\nkind = names\noutput_dir = " + out.string() +
         "\n\n[generate]\nn_trajectories = 1500\n\n[relabel]\nrelabeler = " + relabeler +
         "\n\n[eval]\nrollouts = 1000\n";
}

CommandOptions options_for(const fs::path& config) {
  CommandOptions o;
  o.config = config;
  return o;
}

int run(const std::function<int()>& command, std::string* err = nullptr) {
  std::ostringstream e;
  const int code = run_command(command, e);
  if (err) *err = e.str();
  return code;
}

int shell_status(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configs render and parse back to the same config") {
  auto c = parse_config("[experiment]\nkind = attributes\nvariant = color\nseed = 5\n[train]\nlearning_rate = 0.0125\n");
  CHECK(c.kind == ExperimentKind::Attributes);
  CHECK(c.variant == "color");
  CHECK(c.train.learning_rate == 0.0125);
  const auto text = render_config(c);
  CHECK(render_config(parse_config(text)) == text);

  const auto noise = parse_config("[experiment]\nkind = noise-analysis\n");
  CHECK(render_config(parse_config(render_config(noise))) == render_config(noise));
}

TEST_CASE("malformed configs name the offending field") {
  try {
    parse_config("[experiment]\nkind = names\nbogus = 1\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "experiment.bogus");
  }
  try {
    parse_config("[generate]\nn_trajectories = lots\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "generate.n_trajectories");
  }
  CHECK_THROWS_AS(parse_config("[relabel]\nkeep_fraction = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nkind = attributes\nvariant = size\n"), ConfigError);

  const auto dir = fresh_dir("malformed");
  const auto path = write_config(dir, "[env]\np_timeout = often\n");
  std::string err;
  std::ostringstream out;
  CHECK(run([&] { return cmd_exp(options_for(path), out); }, &err) == kExitConfig);
  CHECK(err.find("env.p_timeout") != std::string::npos);
  CHECK(run([&] { return cmd_exp(options_for(dir / "missing.ini"), out); }) == kExitConfig);
}

#ifdef HERLAB_CLI_PATH
TEST_CASE("the command-line tool maps failures to exit codes") {
  const auto dir = fresh_dir("binary");
  const auto bad = write_config(dir, "[experiment]\nkind = names\nbogus = 1\n");
  const std::string cli = HERLAB_CLI_PATH;
  const auto log = (dir / "err.txt").string();
  CHECK(shell_status(cli + " exp --config " + bad.string() + " 2>" + log) == 2);
  CHECK(read_text(log).find("experiment.bogus") != std::string::npos);
  CHECK(shell_status(cli + " exp --config " + bad.string() + " --workers 0 2>/dev/null") == 2);
  CHECK(shell_status(cli + " frobnicate 2>/dev/null") == 2);

  const auto ok = write_config(dir, small_names(dir / "run"));
  CHECK(shell_status(cli + " train --config " + ok.string() + " >/dev/null 2>&1") == 3);
}
#endif

TEST_CASE("oracle names run reaches the ceiling") {
  const auto dir = fresh_dir("oracle");
  const auto path = write_config(dir, "[experiment]\nkind = names\noutput_dir = " + (dir / "run").string() +
                                          "\n[relabel]\nrelabeler = oracle\n");
  std::ostringstream out;
  REQUIRE(run([&] { return cmd_exp(options_for(path), out); }) == kExitOk);
  const auto report = read_results_csv(dir / "run" / "results.csv");
  CHECK(report.tasks.size() == 10);
  CHECK(report.mean_success >= 0.95);
  for (const char* f : {"trajectories.jsonl", "labels.jsonl", "policy.json", "config.effective.ini", "quality.csv",
                        "sweep.csv", "calibration.csv", "unigrams.csv", "task_quality.csv", "report.json"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
}

TEST_CASE("stage-wise runs reproduce the end-to-end artifacts") {
  const auto dir = fresh_dir("stages");
  const auto whole = write_config(dir, small_names(dir / "whole", "names-zeroshot"));
  std::ostringstream out;
  REQUIRE(run([&] { return cmd_exp(options_for(whole), out); }) == kExitOk);

  const auto staged = write_config(dir, small_names(dir / "staged", "names-zeroshot"));
  const auto o = options_for(staged);
  REQUIRE(run([&] { return cmd_gen(o, out); }) == kExitOk);
  REQUIRE(run([&] { return cmd_relabel(o, {}, out); }) == kExitOk);
  REQUIRE(run([&] { return cmd_train(o, {}, out); }) == kExitOk);
  REQUIRE(run([&] { return cmd_eval(o, {}, out); }) == kExitOk);

  for (const char* f : {"trajectories.jsonl", "labels.jsonl", "policy.json", "results.csv"}) {
    CAPTURE(f);
    CHECK(read_text(dir / "whole" / f) == read_text(dir / "staged" / f));
  }

  // The effective config written by a run reproduces it.
  auto replay = options_for(dir / "whole" / "config.effective.ini");
  replay.output = dir / "replay";
  REQUIRE(run([&] { return cmd_exp(replay, out); }) == kExitOk);
  CHECK(read_text(dir / "whole" / "results.csv") == read_text(dir / "replay" / "results.csv"));
  CHECK(read_text(dir / "whole" / "labels.jsonl") == read_text(dir / "replay" / "labels.jsonl"));

  replay.output = dir / "threaded";
  replay.workers = 3;
  REQUIRE(run([&] { return cmd_exp(replay, out); }) == kExitOk);
  CHECK(read_text(dir / "whole" / "results.csv") == read_text(dir / "threaded" / "results.csv"));
}

TEST_CASE("one trajectory set relabeled with two templates") {
  const auto dir = fresh_dir("attributes");
  const auto path = write_config(dir, "[experiment]\nkind = attributes\nvariant = name\noutput_dir = " +
                                          (dir / "run").string() + "\n[generate]\nn_trajectories = 800\n");
  const auto o = options_for(path);
  std::ostringstream out;
  REQUIRE(run([&] { return cmd_gen(o, out); }) == kExitOk);
  RelabelOptions by_name;
  by_name.template_kind = "name";
  by_name.labels = dir / "name.jsonl";
  RelabelOptions by_color;
  by_color.template_kind = "color";
  by_color.labels = dir / "color.jsonl";
  REQUIRE(run([&] { return cmd_relabel(o, by_name, out); }) == kExitOk);
  REQUIRE(run([&] { return cmd_relabel(o, by_color, out); }) == kExitOk);

  const auto names = read_labels(dir / "name.jsonl");
  const auto colors = read_labels(dir / "color.jsonl");
  REQUIRE(names.size() == colors.size());
  CHECK(!names.empty());
  std::size_t differ = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(names[i].traj_hash == colors[i].traj_hash);
    CHECK(names[i].template_kind == "name");
    CHECK(colors[i].template_kind == "color");
    differ += names[i].text != colors[i].text;
  }
  CHECK(differ > names.size() / 2);

  RelabelOptions wrong;
  wrong.template_kind = "preference";
  CHECK(run([&] { return cmd_relabel(o, wrong, out); }) == kExitConfig);
}

TEST_CASE("stage inputs must exist and hold data") {
  const auto dir = fresh_dir("inputs");
  const auto path = write_config(dir, small_names(dir / "run"));
  const auto o = options_for(path);
  std::ostringstream out;
  std::string err;
  CHECK(run([&] { return cmd_relabel(o, {}, out); }, &err) == kExitStage);
  CHECK(err.find("trajectories.jsonl") != std::string::npos);

  REQUIRE(run([&] { return cmd_gen(o, out); }) == kExitOk);
  write_text(dir / "empty.jsonl", "");
  TrainOptions train;
  train.labels = dir / "empty.jsonl";
  CHECK(run([&] { return cmd_train(o, train, out); }) == kExitStage);
  CHECK_FALSE(fs::exists(dir / "run" / "policy.json"));

  // A tampered trajectory no longer replays from its seed.
  auto text = read_text(dir / "run" / "trajectories.jsonl");
  const auto pos = text.find("\"chosen\":");
  REQUIRE(pos != std::string::npos);
  const auto digit = pos + 9;
  text[digit] = text[digit] == '0' ? '1' : '0';
  write_text(dir / "run" / "trajectories.jsonl", text);
  CHECK(run([&] { return cmd_relabel(o, {}, out); }) == kExitStage);
}

TEST_CASE("eval writes results only") {
  const auto dir = fresh_dir("eval");
  const auto path = write_config(dir, small_names(dir / "run"));
  const auto o = options_for(path);
  std::ostringstream out;
  REQUIRE(run([&] { return cmd_exp(o, out); }) == kExitOk);

  const auto eval_dir = dir / "evaluated";
  fs::create_directories(eval_dir);
  EvalOptions eval;
  eval.checkpoint = dir / "run" / "policy.json";
  eval.results = eval_dir / "results.csv";
  const auto policy_before = read_text(dir / "run" / "policy.json");
  REQUIRE(run([&] { return cmd_eval(o, eval, out); }) == kExitOk);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(eval_dir)) ++files;
  CHECK(files == 1);
  CHECK(read_text(dir / "run" / "policy.json") == policy_before);
  CHECK(read_text(eval_dir / "results.csv") == read_text(dir / "run" / "results.csv"));

  EvalOptions missing;
  missing.checkpoint = dir / "nope.json";
  CHECK(run([&] { return cmd_eval(o, missing, out); }) == kExitStage);
}

TEST_CASE("analyze") {
  const auto dir = fresh_dir("analyze");
  const auto path = write_config(dir, small_names(dir / "run", "names-zeroshot"));
  std::ostringstream out;
  REQUIRE(run([&] { return cmd_exp(options_for(path), out); }) == kExitOk);

  AnalyzeOptions single;
  single.labels = {dir / "run" / "labels.jsonl"};
  single.output = dir / "single";
  std::ostringstream report;
  REQUIRE(run([&] { return cmd_analyze(single, report); }) == kExitOk);
  CHECK(report.str().find("regression skipped") != std::string::npos);
  CHECK(fs::exists(dir / "single" / "quality.csv"));
  CHECK(fs::exists(dir / "single" / "unigrams.csv"));
  CHECK_FALSE(fs::exists(dir / "single" / "regression.csv"));

  write_text(dir / "empty.jsonl", "");
  AnalyzeOptions empty;
  empty.labels = {dir / "empty.jsonl"};
  empty.output = dir / "empty";
  CHECK(run([&] { return cmd_analyze(empty, out); }) == kExitStage);

  AnalyzeOptions mismatched = single;
  mismatched.results = {dir / "run" / "results.csv", dir / "run" / "results.csv"};
  CHECK(run([&] { return cmd_analyze(mismatched, out); }) == kExitConfig);
}

TEST_CASE("the category curve plateaus between two and five exemplar pairs") {
  const auto dir = fresh_dir("categories");
  auto mean_for = [&](const std::string& variant) {
    const auto out_dir = dir / variant;
    const auto path = write_config(dir, "[experiment]\nkind = categories\nvariant = " + variant +
                                            "\noutput_dir = " + out_dir.string() + "\n");
    std::ostringstream out;
    REQUIRE(run([&] { return cmd_exp(options_for(path), out); }) == kExitOk);
    return read_results_csv(out_dir / "results.csv").mean_success;
  };
  const double two = mean_for("fewshot-2");
  const double five = mean_for("fewshot-5");
  CAPTURE(two);
  CAPTURE(five);
  CHECK(std::abs(five - two) <= 0.04);
}
