#pragma once

#include <string>
#include <vector>

#include "pdhjb/markovian.hpp"
#include "pdhjb/problem.hpp"

namespace pdhjb::harness {

// Path functional mu(gamma) entering the coefficients.
enum class MeasurePreset {
  dirac,              // gamma(t)
  dirac_plus_uniform  // gamma(t) / 2 + (1 / 2T) int_0^t gamma(s) ds
};

MeasurePreset parse_measure(const std::string& name);
std::string to_string(MeasurePreset m);

// Coefficients of the indicator of (0, 1) against e_k = sqrt(2) sin(k pi xi).
HVector indicator_coefficients(int n);

// Stochastic heat equation on (0, 1) with Dirichlet conditions, truncated to `modes` sine modes:
//   dy = (scale y_xx - theta mu(y) + u 1) ds + h(mu(y)) dW^Q,  h(x) = sigma (1 + sin(x) / 2),
//   payoff int_t^T (<1, mu(y)> - rho u^2 / 2) ds + <1, mu(y_T)>.
// The noise has rank `noise_rank` with Q = diag(1 / j^2); h acts by multiplication, projected
// onto the retained modes by midpoint quadrature on 4 * modes nodes.
struct ParabolicParams {
  int modes = 4;
  int noise_rank = 2;
  double scale = 0.1;
  double theta = 1.0;
  double sigma = 0.5;
  double rho = 1.0;
  double final_time = 1.0;
  MeasurePreset measure = MeasurePreset::dirac;
  std::vector<double> controls{-1.0, 0.0, 1.0};
};

SpectralOperator parabolic_operator(const ParabolicParams& p);
ControlProblem parabolic_problem(const ParabolicParams& p);

// Damped wave equation as a first-order system in energy coordinates (a_k, b_k) per mode;
// forcing and noise act on the velocity coordinates:
//   F = (0, -theta mu(a) + u 1),  G = (0, h(mu(a)) dW^Q).
struct HyperbolicParams {
  int modes = 3;
  int noise_rank = 2;
  double scale = 0.1;
  double theta = 0.5;
  double sigma = 0.5;
  double rho = 1.0;
  double final_time = 1.0;
  MeasurePreset measure = MeasurePreset::dirac;
  std::vector<double> controls{-1.0, 0.0, 1.0};
};

SpectralOperator hyperbolic_operator(const HyperbolicParams& p);
ControlProblem hyperbolic_problem(const HyperbolicParams& p);

// Unbounded controls with a quadratic penalty:
//   dy = (scale y_xx + u 1) ds + sigma dW^Q,
//   q = -nu1 u^2 / 2 + bound sin(<1, y(s)>),  phi = bound cos(<1, y(T)>).
// Hence q <= -nu1 |u|^2 / 2 + L and phi <= L with L = bound.
struct QuadraticParams {
  int modes = 4;
  int noise_rank = 2;
  double scale = 0.1;
  double sigma = 0.5;
  double nu1 = 1.0;
  double bound = 1.0;
  double final_time = 1.0;
  std::vector<double> controls{-16, -8, -4, -2, -1, -0.5, 0, 0.5, 1, 2, 4, 8, 16};
};

SpectralOperator quadratic_operator(const QuadraticParams& p);
ControlProblem quadratic_problem(const QuadraticParams& p);

// Energy-ball radius for E int_t^T |u|^2 beyond which a control is dominated by u = 0:
// (2 / nu1) ((T + 1) L + C (1 + ||gamma||_0^2) + 1) with C = L (1 + T) from J(gamma, 0) >= -L (1 + T).
double energy_ball_radius(const QuadraticParams& p, double sup_norm);

// One retained mode, A = 0, dX = u ds + dW, q = -u^2 / 2, phi(x) = x + amplitude sin(x), with
// constant controls on a grid. When every admissible slope of the value lies strictly between two
// grid controls' switching thresholds, u = 1 is optimal and the value is explicit.
struct BenchmarkParams {
  double amplitude = 0.2;
  double final_time = 1.0;
  std::vector<double> controls{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
};

MarkovianSpec benchmark_spec(const BenchmarkParams& p);
ControlProblem benchmark_problem(const BenchmarkParams& p);
double benchmark_terminal(const BenchmarkParams& p, double x);

// Explicit value for the u = 1 regime and its derivatives in (t, x).
struct BenchmarkJet {
  double value = 0.0;
  double dt = 0.0;
  double dx = 0.0;
  double dxx = 0.0;
};
BenchmarkJet benchmark_value(const BenchmarkParams& p, double t, double x);
// True when u = 1 is optimal among the grid controls for every slope 1 +- amplitude.
bool benchmark_regime_holds(const BenchmarkParams& p);

std::vector<ControlProcess> constant_family(const std::vector<double>& values);

}  // namespace pdhjb::harness
