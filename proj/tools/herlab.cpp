#include <CLI11.hpp>

#include <iostream>

#include "herlab/commands.hpp"

int main(int argc, char** argv) {
  using namespace herlab;

  CLI::App app{"herlab: hindsight relabeling experiments in a symbolic Lift playroom"};
  app.require_subcommand(1);

  CommandOptions common;
  std::string output;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config, "Experiment config file")->required();
    cmd->add_option("--workers", common.workers, "Parallel workers for generation, relabeling and evaluation")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--output", output, "Output directory (overrides experiment.output_dir)");
    cmd->add_option("--seed", seed, "Global seed (overrides experiment.seed)");
  };

  auto* exp = app.add_subcommand("exp", "Run generate, relabel, train and evaluate end to end");
  add_common(exp);
  auto* gen = app.add_subcommand("gen", "Generate trajectories with the generic instruction");
  add_common(gen);

  RelabelOptions relabel;
  std::string relabel_template, relabel_relabeler, relabel_labels;
  auto* rel = app.add_subcommand("relabel", "Relabel stored trajectories");
  add_common(rel);
  rel->add_option("--template", relabel_template, "Prompt template: name, color, foodtoy or preference");
  rel->add_option("--relabeler", relabel_relabeler, "oracle, remote, auto or a preset name");
  rel->add_option("--labels", relabel_labels, "Labels file to write");

  TrainOptions train;
  std::string train_labels, train_checkpoint;
  auto* trn = app.add_subcommand("train", "Train a policy on stored labels");
  add_common(trn);
  trn->add_option("--labels", train_labels, "Labels file to train on");
  trn->add_option("--checkpoint", train_checkpoint, "Policy checkpoint to write");

  EvalOptions eval;
  std::string eval_checkpoint, eval_results;
  auto* evl = app.add_subcommand("eval", "Evaluate a stored policy on the experiment's tasks");
  add_common(evl);
  evl->add_option("--checkpoint", eval_checkpoint, "Policy checkpoint to evaluate");
  evl->add_option("--results", eval_results, "Results CSV to write");

  AnalyzeOptions analyze;
  auto* ana = app.add_subcommand("analyze", "Label quality reports and the precision/accuracy regression");
  ana->add_option("--labels", analyze.labels, "Labels file (repeatable)")->required();
  ana->add_option("--results", analyze.results, "Results CSV paired with each labels file (repeatable)");
  ana->add_option("--output", analyze.output, "Directory for the reports");
  ana->add_option("--bins", analyze.calibration_bins, "Calibration histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (!output.empty()) common.output = output;
  for (auto* cmd : {exp, gen, rel, trn, evl}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) common.seed = seed;
  }
  if (!relabel_template.empty()) relabel.template_kind = relabel_template;
  if (!relabel_relabeler.empty()) relabel.relabeler = relabel_relabeler;
  if (!relabel_labels.empty()) relabel.labels = relabel_labels;
  if (!train_labels.empty()) train.labels = train_labels;
  if (!train_checkpoint.empty()) train.checkpoint = train_checkpoint;
  if (!eval_checkpoint.empty()) eval.checkpoint = eval_checkpoint;
  if (!eval_results.empty()) eval.results = eval_results;

  return run_command(
      [&] {
        if (exp->parsed()) return cmd_exp(common, std::cout);
        if (gen->parsed()) return cmd_gen(common, std::cout);
        if (rel->parsed()) return cmd_relabel(common, relabel, std::cout);
        if (trn->parsed()) return cmd_train(common, train, std::cout);
        if (evl->parsed()) return cmd_eval(common, eval, std::cout);
        return cmd_analyze(analyze, std::cout);
      },
      std::cerr);
}
