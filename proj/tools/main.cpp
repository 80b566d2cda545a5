#include <iostream>

#include "CLI11.hpp"
#include "msziarmn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Markov-switching zero-inflated autoregressive multinomial models for co-circulating diseases"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MSZIARMN_VERSION);

  msz::CommandOptions opts;
  std::string variant, output_dir, draws_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  auto common = [&](CLI::App* sub, bool reads_draws) {
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required();
    sub->add_option("--variant", variant, "MS_ZIARMN, ZIARMN, ZENG or ARMN (overrides 'variant')");
    sub->add_option("--seed", seed, "random seed (overrides 'mcmc.seed')");
    sub->add_option("--threads", threads, "worker threads for chains; 0 = one per chain (overrides 'mcmc.threads')");
    sub->add_option("--output-dir", output_dir, "output directory (overrides 'output.dir')");
    sub->add_flag("--strict", opts.strict, "exit with status 4 when any R-hat exceeds the threshold");
    if (reads_draws) sub->add_option("--draws", draws_dir, "directory of a previous fit (default: output.dir)");
  };
  common(app.add_subcommand("simulate", "simulate a panel with known parameters"), false);
  common(app.add_subcommand("fit", "run the sampler and write draws, diagnostics, summaries and WAIC"), false);
  common(app.add_subcommand("waic", "recompute WAIC from a previous fit"), true);
  common(app.add_subcommand("summarize", "posterior summaries from a previous fit"), true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : msz::kValidation;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--variant")) opts.variant = variant;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--threads")) opts.threads = threads;
  if (sub->count("--output-dir")) opts.output_dir = output_dir;
  if (sub->get_option_no_throw("--draws") && sub->count("--draws")) opts.draws_dir = draws_dir;
  return msz::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
