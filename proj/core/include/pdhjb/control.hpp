#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdhjb/bsde.hpp"

namespace pdhjb {

struct CostEstimate {
  std::string label;
  double value = 0.0;
  double std_error = 0.0;
};

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::string argmax;
  std::size_t argmax_index = 0;
  std::vector<CostEstimate> per_control;
};

// J(gamma_t, u) = Y(t): simulate, solve the BSDE, report Y(t) and the cross-sample stderr.
// `basis` defaults to the path-feature basis.
CostEstimate cost_J(const SpectralOperator& op, const ControlProblem& problem,
                    const DiscretePath& initial, const ControlProcess& control,
                    const NoiseSpec& noise, std::size_t samples, const Basis* basis = nullptr);

// Max of cost_J over the family with common random numbers; ties go to the lowest index.
ValueEstimate value_enumerate(const SpectralOperator& op, const ControlProblem& problem,
                              const DiscretePath& initial, const std::vector<ControlProcess>& family,
                              const NoiseSpec& noise, std::size_t samples,
                              const Basis* basis = nullptr);

// BSDE value at t on [t, t + delta] with terminal datum zeta(X_{t+delta}).
CostEstimate backward_semigroup(const SpectralOperator& op, const ControlProblem& problem,
                                const DiscretePath& initial, const ControlProcess& control,
                                double delta, const std::function<double(const PathView&)>& zeta,
                                const NoiseSpec& noise, std::size_t samples,
                                const Basis* basis = nullptr);

struct DppOptions {
  double delta = 0.0;
  std::size_t samples_outer = 512;
  std::size_t samples_inner = 256;
  std::size_t samples_lhs = 0;  // 0: samples_outer, so that delta = T - t reproduces the left side
  double max_inner_paths = 2e6;  // cap on |family| * outer * inner
  std::uint64_t inner_tag = 0x4450500000000001ULL;
};

struct DppReport {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
  double rhs_std_error = 0.0;
  double residual = 0.0;
  double ci = 0.0;           // sqrt(lhs_se^2 + rhs_se^2)
  double nested_bias = 0.0;  // mean over outer paths of max_u J - J_{u*}; >= 0
  std::string lhs_argmax;
  std::string rhs_argmax;
  std::vector<CostEstimate> rhs_per_control;
  bool passed = false;       // residual <= 3 ci
};

// V(gamma_t) against sup_u G_{t,t+delta}[V(X_{t+delta})] with nested Monte Carlo. The inner
// value restarts the same family from each outer path (controls are indexed by absolute time,
// so the inner problem sees the family restricted to [t + delta, T]).
DppReport dpp_residual(const SpectralOperator& op, const ControlProblem& problem,
                       const DiscretePath& initial, const std::vector<ControlProcess>& family,
                       const DppOptions& options, const NoiseSpec& noise,
                       const Basis* basis = nullptr);

struct RegularityReport {
  std::vector<double> space_ratios;
  double space_constant = 0.0;
  double space_constant_doubled = 0.0;
  bool space_stable = false;
  std::vector<double> time_gaps;
  std::vector<double> time_diffs;
  double time_slope = 0.0;
  bool time_slope_in_range = false;  // slope in [0.3, 0.7]
};

// Empirical Lipschitz constant of V in the path (max ratio over the pairs, recomputed with
// doubled samples) and the log-log slope of |V(gamma_t) - V(gamma^A_{t,t+delta})| in delta.
RegularityReport regularity_checks(const SpectralOperator& op, const ControlProblem& problem,
                                   const std::vector<ControlProcess>& family,
                                   const std::vector<std::pair<DiscretePath, DiscretePath>>& path_pairs,
                                   const DiscretePath& base, const std::vector<double>& time_gaps,
                                   const NoiseSpec& noise, std::size_t samples,
                                   const Basis* basis = nullptr);

}  // namespace pdhjb
