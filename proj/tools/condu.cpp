#include "condu/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int
main(int argc, char** argv)
{
  CLI::App app{ "Conditional U-statistics: estimation, sweeps and rate experiments" };
  app.require_subcommand(1);

  condu::CliConfig cfg;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string data;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", cfg.config_path, "experiment config (JSON)")->required();
    auto* out = sub->add_option("--out", cfg.out_dir, "output directory");
    if (needs_out)
      out->required();
    sub->add_option("--seed", seed, "master seed; overrides CONDU_SEED and the config");
    sub->add_option("--threads", threads, "worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "draw a sample from the configured DGP");
  add_common(simulate, true);
  auto* estimate = app.add_subcommand("estimate", "estimate on a grid of (h, t) for every member");
  add_common(estimate, true);
  estimate->add_option("--data", data, "CSV sample with header x,y");
  auto* sweep = app.add_subcommand("sweep", "deviation sweep at the first sample size");
  add_common(sweep, true);
  auto* rates = app.add_subcommand("rates", "rate experiment across n_list");
  add_common(rates, true);
  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--filter", cfg.filter, "only checks whose name contains this string");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : condu::exit_code::validation;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  if (auto* sub = app.get_subcommands().front(); sub->count("--seed"))
    cfg.seed = seed;
  if (auto* sub = app.get_subcommands().front(); sub->count("--threads"))
    cfg.threads = threads;
  if (!data.empty())
    cfg.data_path = data;
  return condu::run(cfg, std::cout, std::cerr);
}
