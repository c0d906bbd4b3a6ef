#pragma once

#include <cstdint>

#include "pdhjb/harness/config.hpp"
#include "pdhjb/harness/output.hpp"

namespace pdhjb::harness {

// Runs the scenario's pipeline. Throws ConfigError, InputError or BudgetExceeded.
ResultBundle run_scenario(const ExperimentConfig& config);

ResultBundle run_parabolic(const ExperimentConfig& config);
ResultBundle run_hyperbolic(const ExperimentConfig& config);
ResultBundle run_quadratic_growth(const ExperimentConfig& config);
ResultBundle run_markovian_benchmark(const ExperimentConfig& config);
ResultBundle run_gauge_suite(const ExperimentConfig& config);

// Pieces of the gauge suite, each a property sweep over random inputs.
struct SweepParams {
  std::uint64_t seed = 1;
  std::size_t count = 10000;
  int max_dim = 8;
  std::size_t steps = 16;
  double scale = 5.0;
};

Contract sweep_sandwich(const SweepParams& p);         // lower/upper bounds of Upsilon^{m,M}
Contract sweep_eps_bounds(const SweepParams& p);       // Upsilon^eps bounds and derivative caps
Contract sweep_derivative_oracle(const SweepParams& p, const std::vector<double>& epsilons);
Contract sweep_subadditivity(const SweepParams& p);
Contract sweep_g_convexity(int grid_size);

struct BpSweepParams {
  std::uint64_t seed = 1;
  std::size_t families = 50;
  std::size_t size = 200;
  double epsilon = 1.0;
};
// Certificates of every output, and the rerun from the output point reproducing it.
std::pair<Contract, Contract> sweep_borwein_preiss(const BpSweepParams& p);

// Path budget guard: samples * steps against config.max_path_steps.
void check_path_budget(const ExperimentConfig& config, std::size_t samples, std::size_t steps,
                       const std::string& what);

}  // namespace pdhjb::harness
