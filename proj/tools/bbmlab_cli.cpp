#include <cstdint>
#include <iostream>

#include "CLI11.hpp"

#include "bbmlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gBBM virial and decay laboratory"};
  app.set_version_flag("--version", std::string(bbm::kVersion));
  app.require_subcommand(1);

  bbm::CliOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "config file or run manifest")->required();
    sub->add_option("--out", opts.out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed, "override the seed in the config");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
  };
  auto* simulate = app.add_subcommand("simulate", "run one decay experiment");
  auto* identities = app.add_subcommand("verify-identities", "check the virial identities on random states");
  auto* lemmas = app.add_subcommand("lemma-tests", "run the randomised lemma suites");
  auto* sweep = app.add_subcommand("sweep", "run every experiment in the config");
  for (auto* sub : {simulate, identities, lemmas, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bbm::kExitConfig;
  }
  for (auto* sub : {simulate, identities, lemmas, sweep}) {
    if (sub->count("--seed")) opts.seed = seed;
  }

  if (simulate->parsed()) return bbm::cmd_simulate(opts);
  if (identities->parsed()) return bbm::cmd_verify_identities(opts);
  if (lemmas->parsed()) return bbm::cmd_lemma_tests(opts);
  return bbm::cmd_sweep(opts);
}
