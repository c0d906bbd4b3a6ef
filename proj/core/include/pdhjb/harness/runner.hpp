#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdhjb/harness/config.hpp"
#include "pdhjb/harness/output.hpp"

namespace pdhjb::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitContractFailed = 1,
  kExitUsage = 2,
  kExitBudget = 3,
  kExitRuntime = 4
};

// Command-line values that take precedence over the file and the environment.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

// File (or defaults of `scenario` when the path is empty) < PDHJB_ environment < overrides.
ExperimentConfig resolve_config(const std::string& path, char** envp, const Overrides& overrides,
                                const std::string& scenario = {});

struct RunOutcome {
  ResultBundle bundle;
  std::vector<std::string> files;
  int exit_code = kExitOk;
};

// Sets the worker cap, runs the scenario and (if `write`) stores the bundle.
RunOutcome run(const ExperimentConfig& config, bool write = true);

}  // namespace pdhjb::harness
