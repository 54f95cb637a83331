// rplo command-line runner: seeded, replayable optimization experiments
// written as CSV. Exit codes: 0 success, 2 config error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "rplo/harness.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seed;  // string so "unset" is distinguishable
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file");
  cmd->add_option("--seed", flags.seed, "override the master seed");
  cmd->add_option("--out", flags.out, "override the output CSV path");
  cmd->add_flag("--quiet", flags.quiet, "suppress the run summary");
}

int execute(const std::string& kind, const CommonFlags& flags) {
  rplo::harness::ExperimentConfig cfg;
  if (!flags.config.empty()) cfg = rplo::harness::load_config(flags.config);
  if (cfg.kind.empty()) cfg.kind = kind;
  if (cfg.kind != kind)
    throw rplo::ConfigError("config kind '" + cfg.kind +
                            "' does not match subcommand '" + kind + "'");
  if (!flags.seed.empty()) cfg.seed = std::stoull(flags.seed);
  if (!flags.out.empty()) cfg.out = flags.out;
  cfg.quiet = flags.quiet;

  const rplo::harness::RunResult result = rplo::harness::run(cfg);
  rplo::harness::write_csv(cfg.out, cfg, result);
  if (!cfg.quiet) {
    std::cerr << kind << ": wrote " << result.records.size() << " records to "
              << cfg.out << " (seed " << cfg.seed << ")";
    if (!result.measured.empty()) std::cerr << " [" << result.measured << "]";
    std::cerr << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rplo: preconditioned low-rank optimization experiments"};
  app.require_subcommand(1);

  const char* kinds[] = {"decomp",      "multiterm", "cond-sweep", "width-sweep",
                         "toy",         "arrangements", "compare"};
  CommonFlags flags[std::size(kinds)];
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    CLI::App* cmd = app.add_subcommand(kinds[i]);
    add_common(cmd, flags[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    if (!app.get_subcommand(kinds[i])->parsed()) continue;
    try {
      return execute(kinds[i], flags[i]);
    } catch (const rplo::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const rplo::IoError& e) {
      std::cerr << "io error: " << e.what() << "\n";
      return 3;
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }
  return 0;
}
