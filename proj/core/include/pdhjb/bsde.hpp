#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdhjb/fsee.hpp"
#include "pdhjb/regression.hpp"

namespace pdhjb {

struct BsdeSpec {
  std::function<double(const PathView&, double, const NoiseVector&, const ControlPoint&)> driver;
  std::function<double(const PathView&)> terminal;
  // Per-sample terminal data; overrides `terminal` when present (nested DPP right side).
  std::optional<Eigen::VectorXd> terminal_values;
  double lipschitz = 1.0;
  bool driver_yz_free = false;

  static BsdeSpec from_problem(const ControlProblem& problem);
  void validate() const;
};

struct BsdeSolution {
  std::vector<double> times;        // grid times from the initial horizon to T
  Eigen::MatrixXd Y;                // samples x (steps + 1)
  std::vector<Eigen::MatrixXd> Z;   // per step: samples x noise_dim
  Eigen::VectorXd pathwise;         // phi + sum q dt - sum Z dW per sample
  double value = 0.0;               // Y at the initial time
  double std_error = 0.0;           // cross-sample spread of `pathwise` / sqrt(M)
  double terminal_residual = 0.0;   // max |Y_T - phi(X_T)|
  bool ridge_used = false;
  std::vector<std::string> warnings;

  Eigen::VectorXd mean_Y() const;
};

BsdeSolution solve_regression(const SdeEnsemble& ensemble, const BsdeSpec& spec, const Basis& basis);
BsdeSolution solve_regression(const SdeEnsemble& ensemble, const BsdeSpec& spec);

struct PicardResult {
  BsdeSolution solution;
  std::vector<double> gaps;  // sup |Y^(j) - Y^(j-1)| per iteration
  int iterations = 0;        // first j whose successor reproduced it within tol
  bool converged = false;
};

struct ValueAtStart {
  double value = 0.0;
  double std_error = 0.0;
  Eigen::VectorXd pathwise;
};

// Y at the initial time only. For y,z-free drivers this is the sample mean of
// phi + sum q dt (the regression scheme returns the same quantity); otherwise it runs
// solve_regression.
ValueAtStart solve_value(const SdeEnsemble& ensemble, const BsdeSpec& spec, const Basis& basis);

PicardResult solve_picard(const SdeEnsemble& ensemble, const BsdeSpec& spec, const Basis& basis,
                          int max_iterations, double tol = 1e-10);

// Every `stride`-th grid point after the initial horizon; increments are summed.
SdeEnsemble coarsen(const SdeEnsemble& ensemble, std::size_t stride);

struct DiscretizationEstimate {
  double fine = 0.0;
  double coarse = 0.0;
  double estimate = 0.0;  // |fine - coarse| (first-order scheme)
};

DiscretizationEstimate discretization_estimate(const SdeEnsemble& ensemble, const BsdeSpec& spec,
                                               const Basis& basis);

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> mean_gap;   // mean of Y1 - Y2 per grid time
  std::vector<double> tolerance;  // 3 * stderr per grid time
  double min_slack = 0.0;         // min over times of mean_gap + tolerance
  bool passed = false;
};

ComparisonReport comparison_check(const SdeEnsemble& ensemble, const BsdeSpec& spec1,
                                  const BsdeSpec& spec2, const Basis& basis);

}  // namespace pdhjb
