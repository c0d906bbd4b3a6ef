#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdhjb/gauge.hpp"
#include "pdhjb/problem.hpp"

namespace pdhjb {

struct EnsembleMeta {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  double dt = 0.0;
  std::string scheme;
  std::string config_hash;
};

// M simulated paths sharing one grid on [0, T]; grid index `start` is the initial horizon.
// Running sup-norm and running integral are stored per grid point for path features.
struct SdeEnsemble {
  std::vector<double> grid;
  std::size_t start = 0;
  std::vector<Eigen::MatrixXd> values;      // dim x points per sample
  std::vector<Eigen::MatrixXd> increments;  // noise_dim x steps per sample
  std::vector<Eigen::VectorXd> running_sup;
  std::vector<Eigen::MatrixXd> running_integral;
  ControlProcess control;
  EnsembleMeta meta;

  std::size_t samples() const { return values.size(); }
  std::size_t points() const { return grid.size(); }
  std::size_t steps() const { return grid.size() - 1 - start; }
  int dim() const { return static_cast<int>(values.front().rows()); }
  int noise_dim() const { return static_cast<int>(increments.front().rows()); }
  // Prefix of sample i through grid index k (inclusive). `integral` must outlive the view.
  PathView view(std::size_t i, std::size_t k, HVector& integral) const;
  DiscretePath path(std::size_t i) const;
};

SdeEnsemble simulate_mild(const SpectralOperator& op, const ControlProblem& problem,
                          const DiscretePath& initial, const ControlProcess& control,
                          const NoiseSpec& noise, std::size_t samples);

SdeEnsemble simulate_yosida(const SpectralOperator& op, double mu, const ControlProblem& problem,
                            const DiscretePath& initial, const ControlProcess& control,
                            const NoiseSpec& noise, std::size_t samples);

enum class ItoGauge { upsilon, upsilon_eps, terminal_power };

struct ItoCheckParams {
  ItoGauge kind = ItoGauge::upsilon;
  GaugeParams gauge{3, 3.0};
  EpsGaugeParams eps{1.0};
};

struct ItoCheckReport {
  std::vector<double> lhs;
  std::vector<double> rhs;
  double mean_gap = 0.0;
  double stderr_gap = 0.0;
  double max_gap = 0.0;
  double min_gap = 0.0;
  bool passed = false;
};

// LHS: gauge of X_T - eta^A_{t,T}; RHS: gauge at t plus the pathwise drift, trace and
// stochastic integrals built from the closed-form vertical derivatives along the ensemble.
ItoCheckReport ito_inequality_check(const SpectralOperator& op, const ControlProblem& problem,
                                    const DiscretePath& initial, const DiscretePath& anchor,
                                    const ItoCheckParams& params, const SdeEnsemble& ensemble);

struct YosidaGap {
  double mu = 0.0;
  double mean_sq_sup_gap = 0.0;
  double std_error = 0.0;
};

// E ||X - X^mu||_0^2 with shared noise for each mu.
std::vector<YosidaGap> yosida_convergence(const SpectralOperator& op, const ControlProblem& problem,
                                          const DiscretePath& initial, const ControlProcess& control,
                                          const NoiseSpec& noise, std::size_t samples,
                                          const std::vector<double>& mus);

struct AssumptionSpotCheck {
  double max_growth_ratio = 0.0;     // max |F|^2 v |G|^2 / (L^2 (1 + ||gamma||^2))
  double max_lipschitz_ratio = 0.0;  // max |F(g)-F(e)| v |G(g)-G(e)| / (L ||g - e||)
  bool passed = false;
};

AssumptionSpotCheck spot_check_assumptions(const ControlProblem& problem,
                                           const std::vector<DiscretePath>& paths);

}  // namespace pdhjb
