#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "uwadmm/harness.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int seed = -1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "flat key=value config file");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "random seed (overrides config)");
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

uwadmm::harness::RunConfig load_config(const CommonOpts& opts) {
  using uwadmm::harness::RunConfig;
  RunConfig cfg = opts.config_path.empty()
                      ? RunConfig()
                      : RunConfig::from_file(opts.config_path);
  if (!opts.out_dir.empty()) cfg.set("out", opts.out_dir);
  if (opts.seed >= 0) cfg.set("seed", std::to_string(opts.seed));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "uwadmm: uncertainty-weighted consensus ADMM for distributed "
      "regularized least squares"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* gen = app.add_subcommand("gen", "generate a problem directory");
  auto* weights =
      app.add_subcommand("weights", "compute per-subproblem weights");
  auto* solve = app.add_subcommand("solve", "run a solver on a problem");
  auto* oracle =
      app.add_subcommand("oracle", "dense reference MAP and posterior");
  auto* batch = app.add_subcommand("batch", "weighted-vs-unweighted table");
  for (auto* cmd : {gen, weights, solve, oracle, batch}) {
    add_common(cmd, opts);
  }
  std::string manifest;
  batch->add_option("--manifest", manifest, "matrix manifest file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ostringstream devnull;
  std::ostream& log = opts.quiet ? static_cast<std::ostream&>(devnull)
                                 : std::cout;
  try {
    uwadmm::harness::RunConfig cfg = load_config(opts);
    if (!manifest.empty()) cfg.set("manifest", manifest);
    if (gen->parsed()) return uwadmm::harness::cmd_gen(cfg, log);
    if (weights->parsed()) return uwadmm::harness::cmd_weights(cfg, log);
    if (solve->parsed()) return uwadmm::harness::cmd_solve(cfg, log);
    if (oracle->parsed()) return uwadmm::harness::cmd_oracle(cfg, log);
    if (batch->parsed()) return uwadmm::harness::cmd_batch(cfg, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
