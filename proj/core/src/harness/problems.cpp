#include "pdhjb/harness/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include "pdhjb/errors.hpp"

namespace pdhjb::harness {

MeasurePreset parse_measure(const std::string& name) {
  if (name == "dirac") return MeasurePreset::dirac;
  if (name == "dirac_plus_uniform") return MeasurePreset::dirac_plus_uniform;
  throw InputError("unknown measure preset '" + name + "' (expected dirac or dirac_plus_uniform)");
}

std::string to_string(MeasurePreset m) {
  return m == MeasurePreset::dirac ? "dirac" : "dirac_plus_uniform";
}

HVector indicator_coefficients(int n) {
  HVector chi(n);
  for (int k = 1; k <= n; ++k) {
    chi[k - 1] = k % 2 == 1 ? 2.0 * std::numbers::sqrt2 / (k * std::numbers::pi) : 0.0;
  }
  return chi;
}

namespace {

// mu(gamma) restricted to `dim` leading coordinates starting at `offset` with stride `stride`.
HVector apply_measure(MeasurePreset m, const PathView& g, double T, int n, int offset, int stride) {
  HVector out(n);
  const auto x = g.terminal();
  for (int k = 0; k < n; ++k) out[k] = x[offset + stride * k];
  if (m == MeasurePreset::dirac_plus_uniform) {
    const HVector integral = g.running_integral();
    for (int k = 0; k < n; ++k) out[k] = 0.5 * out[k] + integral[offset + stride * k] / (2.0 * T);
  }
  return out;
}

// Multiplication by h(field) projected on the modes: G_kj = sum_m w e_k h e_j sqrt(q_j).
struct NoiseProjection {
  Eigen::MatrixXd basis;    // nodes x modes, e_k(xi_m)
  Eigen::MatrixXd weighted; // nodes x rank, w e_j(xi_m) sqrt(q_j)
  double sigma = 0.0;

  NoiseProjection(int modes, int rank, double sigma_) : sigma(sigma_) {
    const int nodes = 4 * modes;
    basis.resize(nodes, modes);
    weighted.resize(nodes, rank);
    const double w = 1.0 / nodes;
    for (int m = 0; m < nodes; ++m) {
      const double xi = (m + 0.5) / nodes;
      for (int k = 1; k <= modes; ++k) basis(m, k - 1) = std::numbers::sqrt2 * std::sin(k * std::numbers::pi * xi);
      for (int j = 1; j <= rank; ++j)
        weighted(m, j - 1) = w * std::numbers::sqrt2 * std::sin(j * std::numbers::pi * xi) / j;
    }
  }

  HMatrix operator()(const HVector& mu) const {
    const Eigen::VectorXd field = basis * mu;
    Eigen::VectorXd h(field.size());
    for (Eigen::Index m = 0; m < field.size(); ++m) h[m] = sigma * (1.0 + 0.5 * std::sin(field[m]));
    return basis.transpose() * (h.asDiagonal() * weighted);
  }
};

void check_common(int modes, int rank, double final_time) {
  if (modes < 1 || modes > 64) throw InputError("truncation must be in 1..64");
  if (rank < 1 || rank > modes) throw InputError("noise rank must be in 1..truncation");
  if (!(final_time > 0.0)) throw InputError("final_time must be positive");
}

std::vector<ControlPoint> control_points(const std::vector<double>& values) {
  if (values.empty()) throw InputError("control family is empty");
  std::vector<ControlPoint> out;
  for (double u : values) out.push_back(ControlPoint::Constant(1, u));
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

SpectralOperator parabolic_operator(const ParabolicParams& p) {
  return SpectralOperator::dirichlet_laplacian(p.modes, p.scale);
}

ControlProblem parabolic_problem(const ParabolicParams& p) {
  check_common(p.modes, p.noise_rank, p.final_time);
  const int n = p.modes;
  const HVector chi = indicator_coefficients(n);
  auto noise = std::make_shared<NoiseProjection>(n, p.noise_rank, p.sigma);
  const MeasurePreset m = p.measure;
  const double T = p.final_time;
  const double theta = p.theta;
  const double rho = p.rho;

  ControlProblem cp;
  cp.state_dim = n;
  cp.noise_dim = p.noise_rank;
  cp.final_time = T;
  cp.drift = [=](const PathView& g, const ControlPoint& u) -> HVector {
    return -theta * apply_measure(m, g, T, n, 0, 1) + u[0] * chi;
  };
  cp.diffusion = [=](const PathView& g, const ControlPoint&) -> HMatrix {
    return (*noise)(apply_measure(m, g, T, n, 0, 1));
  };
  cp.running = [=](const PathView& g, double, const NoiseVector&, const ControlPoint& u) {
    return chi.dot(apply_measure(m, g, T, n, 0, 1)) - 0.5 * rho * u[0] * u[0];
  };
  cp.terminal = [=](const PathView& g) { return chi.dot(apply_measure(m, g, T, n, 0, 1)); };
  // |mu(gamma)| <= ||gamma||_0, |chi| <= 1, |e_k| <= sqrt 2, |h| <= 3 sigma / 2, |h'| <= sigma / 2.
  const double umax = max_abs(p.controls);
  const double g_bound = 3.0 * p.sigma * std::sqrt(static_cast<double>(n * p.noise_rank));
  const double g_lip = p.sigma * std::sqrt(2.0 * n) * std::sqrt(static_cast<double>(n * p.noise_rank));
  cp.lipschitz = std::max({theta + umax, g_bound, g_lip, 1.0});
  cp.driver_yz_free = true;
  cp.control_space = control_points(p.controls);
  return cp;
}

SpectralOperator hyperbolic_operator(const HyperbolicParams& p) {
  return SpectralOperator::wave(p.modes, p.scale);
}

ControlProblem hyperbolic_problem(const HyperbolicParams& p) {
  check_common(p.modes, p.noise_rank, p.final_time);
  const int n = p.modes;
  const HVector chi = indicator_coefficients(n);
  auto noise = std::make_shared<NoiseProjection>(n, p.noise_rank, p.sigma);
  const MeasurePreset m = p.measure;
  const double T = p.final_time;
  const double theta = p.theta;
  const double rho = p.rho;
  const int rank = p.noise_rank;

  ControlProblem cp;
  cp.state_dim = 2 * n;
  cp.noise_dim = rank;
  cp.final_time = T;
  cp.drift = [=](const PathView& g, const ControlPoint& u) -> HVector {
    const HVector f = -theta * apply_measure(m, g, T, n, 0, 2) + u[0] * chi;
    HVector out = HVector::Zero(2 * n);
    for (int k = 0; k < n; ++k) out[2 * k + 1] = f[k];
    return out;
  };
  cp.diffusion = [=](const PathView& g, const ControlPoint&) -> HMatrix {
    const HMatrix b = (*noise)(apply_measure(m, g, T, n, 0, 2));
    HMatrix out = HMatrix::Zero(2 * n, rank);
    for (int k = 0; k < n; ++k) out.row(2 * k + 1) = b.row(k);
    return out;
  };
  cp.running = [=](const PathView& g, double, const NoiseVector&, const ControlPoint& u) {
    return chi.dot(apply_measure(m, g, T, n, 0, 2)) - 0.5 * rho * u[0] * u[0];
  };
  cp.terminal = [=](const PathView& g) { return chi.dot(apply_measure(m, g, T, n, 0, 2)); };
  const double umax = max_abs(p.controls);
  const double g_bound = 3.0 * p.sigma * std::sqrt(static_cast<double>(n * rank));
  const double g_lip = p.sigma * std::sqrt(2.0 * n) * std::sqrt(static_cast<double>(n * rank));
  cp.lipschitz = std::max({theta + umax, g_bound, g_lip, 1.0});
  cp.driver_yz_free = true;
  cp.control_space = control_points(p.controls);
  return cp;
}

SpectralOperator quadratic_operator(const QuadraticParams& p) {
  return SpectralOperator::dirichlet_laplacian(p.modes, p.scale);
}

ControlProblem quadratic_problem(const QuadraticParams& p) {
  check_common(p.modes, p.noise_rank, p.final_time);
  if (!(p.nu1 > 0.0)) throw InputError("nu1 must be positive");
  if (!(p.bound >= 0.0)) throw InputError("bound must be nonnegative");
  const int n = p.modes;
  const int rank = p.noise_rank;
  const HVector chi = indicator_coefficients(n);
  const double sigma = p.sigma;
  const double nu1 = p.nu1;
  const double L = p.bound;

  ControlProblem cp;
  cp.state_dim = n;
  cp.noise_dim = rank;
  cp.final_time = p.final_time;
  cp.drift = [=](const PathView&, const ControlPoint& u) -> HVector { return u[0] * chi; };
  cp.diffusion = [=](const PathView&, const ControlPoint&) -> HMatrix {
    HMatrix g = HMatrix::Zero(n, rank);
    for (int j = 0; j < rank; ++j) g(j, j) = sigma / (j + 1);
    return g;
  };
  cp.running = [=](const PathView& g, double, const NoiseVector&, const ControlPoint& u) {
    return -0.5 * nu1 * u[0] * u[0] + L * std::sin(chi.dot(g.terminal()));
  };
  cp.terminal = [=](const PathView& g) { return L * std::cos(chi.dot(g.terminal())); };
  cp.lipschitz = std::max({max_abs(p.controls), sigma, 1.0});
  cp.driver_yz_free = true;
  cp.control_space = control_points(p.controls);
  return cp;
}

double energy_ball_radius(const QuadraticParams& p, double sup_norm) {
  const double T = p.final_time;
  const double L = p.bound;
  const double C = L * (1.0 + T);
  return (2.0 / p.nu1) * ((T + 1.0) * L + C * (1.0 + sup_norm * sup_norm) + 1.0);
}

MarkovianSpec benchmark_spec(const BenchmarkParams& p) {
  MarkovianSpec s;
  s.dim = 1;
  s.rates = {0.0};
  s.drift = [](double, const HVector&, const ControlPoint& u) -> HVector { return u; };
  s.diffusion = [](double, const HVector&, const ControlPoint&) -> HMatrix { return HMatrix::Identity(1, 1); };
  s.running = [](double, const HVector&, double, const NoiseVector&, const ControlPoint& u) {
    return -0.5 * u[0] * u[0];
  };
  const double a = p.amplitude;
  s.terminal = [a](const HVector& x) { return x[0] + a * std::sin(x[0]); };
  s.controls = control_points(p.controls);
  s.final_time = p.final_time;
  s.time_homogeneous = true;
  s.running_rz_free = true;
  return s;
}

ControlProblem benchmark_problem(const BenchmarkParams& p) {
  ControlProblem cp;
  cp.state_dim = 1;
  cp.noise_dim = 1;
  cp.final_time = p.final_time;
  cp.drift = [](const PathView&, const ControlPoint& u) -> HVector { return u; };
  cp.diffusion = [](const PathView&, const ControlPoint&) -> HMatrix { return HMatrix::Identity(1, 1); };
  cp.running = [](const PathView&, double, const NoiseVector&, const ControlPoint& u) {
    return -0.5 * u[0] * u[0];
  };
  const double a = p.amplitude;
  cp.terminal = [a](const PathView& g) { return g.terminal()[0] + a * std::sin(g.terminal()[0]); };
  cp.lipschitz = std::max(max_abs(p.controls), 1.0);
  cp.driver_yz_free = true;
  cp.control_space = control_points(p.controls);
  return cp;
}

double benchmark_terminal(const BenchmarkParams& p, double x) { return x + p.amplitude * std::sin(x); }

BenchmarkJet benchmark_value(const BenchmarkParams& p, double t, double x) {
  const double tau = p.final_time - t;
  const double a = p.amplitude;
  const double e = std::exp(-0.5 * tau);
  const double s = std::sin(x + tau);
  const double c = std::cos(x + tau);
  BenchmarkJet j;
  j.value = x + 0.5 * tau + a * e * s;
  j.dt = -0.5 + 0.5 * a * e * s - a * e * c;
  j.dx = 1.0 + a * e * c;
  j.dxx = -a * e * s;
  return j;
}

bool benchmark_regime_holds(const BenchmarkParams& p) {
  bool has_one = false;
  for (double u : p.controls) has_one = has_one || u == 1.0;
  if (!has_one) return false;
  for (double slope : {1.0 - std::abs(p.amplitude), 1.0 + std::abs(p.amplitude)}) {
    for (double u : p.controls) {
      if (u == 1.0) continue;
      if (!(u * slope - 0.5 * u * u < slope - 0.5)) return false;
    }
  }
  return true;
}

std::vector<ControlProcess> constant_family(const std::vector<double>& values) {
  std::vector<ControlProcess> out;
  for (double u : values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u=%g", u);
    out.push_back(ControlProcess::constant(ControlPoint::Constant(1, u), buf));
  }
  return out;
}

}  // namespace pdhjb::harness
