#include "pdhjb/harness/runner.hpp"

#include "pdhjb/harness/scenarios.hpp"
#include "pdhjb/parallel.hpp"

namespace pdhjb::harness {

ExperimentConfig resolve_config(const std::string& path, char** envp, const Overrides& overrides,
                                const std::string& scenario) {
  LineMap lines;
  json j = path.empty() ? json::object() : load_config_file(path, &lines);
  if (!scenario.empty()) j["scenario"] = scenario;
  apply_env_overrides(j, envp);
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.output_dir) j["output_dir"] = *overrides.output_dir;
  if (overrides.threads) j["threads"] = *overrides.threads;
  return config_from_json(j, &lines);
}

RunOutcome run(const ExperimentConfig& config, bool write) {
  set_worker_count(config.threads);
  RunOutcome out;
  out.bundle = run_scenario(config);
  if (write) out.files = write_bundle(out.bundle, config);
  out.exit_code = out.bundle.passed() ? kExitOk : kExitContractFailed;
  return out;
}

}  // namespace pdhjb::harness
