// twinfuse: command-line front end for the triplicated-sensor simulator.

#include <iostream>

#include <CLI11.hpp>

#include "twinfuse/cli/commands.hpp"

int main(int argc, char** argv) {
  namespace tc = twinfuse::cli;

  CLI::App app{"Fault-tolerant triplicated sensing with forecasting digital twins"};
  app.require_subcommand(1);

  tc::RunOptions run_opts;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run scenario configs and write trace/metrics/transitions");
  run->add_option("--config", run_opts.configs, "Scenario config (JSON); repeatable")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_opts.out_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");

  app.add_subcommand("fusion-demo", "Replay the two-cycle fusion worked example");

  std::filesystem::path eval_config, eval_out;
  auto* eval = app.add_subcommand("twin-eval", "Fit a twin and score its forecast horizon");
  eval->add_option("--config", eval_config, "Config with a twin_eval section")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tc::kUsage;
  }

  if (*run) {
    if (*seed_opt) run_opts.seed = seed;
    return tc::cmd_run(run_opts, std::cout, std::cerr);
  }
  if (app.got_subcommand("fusion-demo")) return tc::cmd_fusion_demo(std::cout);
  return tc::cmd_twin_eval(eval_config, eval_out, std::cout, std::cerr);
}
