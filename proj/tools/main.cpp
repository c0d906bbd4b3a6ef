#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pdhjb/errors.hpp"
#include "pdhjb/harness/runner.hpp"

extern char** environ;

using namespace pdhjb;
using namespace pdhjb::harness;

namespace {

struct Flags {
  std::string config;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (YAML or JSON)");
  cmd->add_option("--scenario", f.scenario, "scenario id; defaults are used for fields the config omits");
  cmd->add_option("--seed", f.seed, "master seed (overrides config and environment)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker cap, 0 = all cores")->check(CLI::Range(0, 1024));
}

ExperimentConfig resolve(CLI::App* cmd, const Flags& f) {
  if (f.config.empty() && f.scenario.empty()) throw ConfigError("need --config or --scenario");
  Overrides o;
  if (cmd->count("--seed")) o.seed = f.seed;
  if (cmd->count("--out")) o.output_dir = f.out;
  if (cmd->count("--threads")) o.threads = f.threads;
  return resolve_config(f.config, environ, o, f.scenario);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdhjb: path-dependent stochastic control experiments"};
  app.require_subcommand(1);
  Flags f;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write summary.json, CSV tables and plot data");
  add_common(run_cmd, f);
  auto* list_cmd = app.add_subcommand("list-scenarios", "list scenario ids");
  auto* validate_cmd = app.add_subcommand("validate-config", "check a config and print its canonical form");
  add_common(validate_cmd, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (list_cmd->parsed()) {
      for (ScenarioId id : all_scenarios()) std::printf("%-22s %s\n", to_string(id).c_str(), describe(id).c_str());
      return kExitOk;
    }
    if (validate_cmd->parsed()) {
      const ExperimentConfig c = resolve(validate_cmd, f);
      std::printf("%s\n", config_to_json(c).dump(2).c_str());
      std::fprintf(stderr, "config ok, hash %s\n", config_hash(c).c_str());
      return kExitOk;
    }
    const ExperimentConfig c = resolve(run_cmd, f);
    const auto t0 = std::chrono::steady_clock::now();
    const RunOutcome out = run(c);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& ct : out.bundle.contracts) {
      std::fprintf(stderr, "%-34s %s  slack %-12.4g %s%s\n", ct.name.c_str(), ct.passed ? "ok  " : "FAIL",
                   ct.slack, ct.detail.c_str(), ct.required ? "" : " (reported)");
    }
    for (const auto& file : out.files) std::fprintf(stderr, "wrote %s\n", file.c_str());
    std::fprintf(stderr, "%s: %s in %.1f s (config %s)\n", to_string(c.scenario).c_str(),
                 out.exit_code == kExitOk ? "all contracts pass" : "contract failure", secs, config_hash(c).c_str());
    return out.exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  } catch (const BudgetExceeded& e) {
    std::fprintf(stderr, "budget exceeded: %s\n", e.what());
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
