#include "pdhjb/fsee.hpp"

#include <algorithm>
#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/parallel.hpp"
#include "pdhjb/rng.hpp"
#include "pdhjb/stats.hpp"

namespace pdhjb {

ControlProcess ControlProcess::constant(ControlPoint u, std::string label) {
  return ControlProcess{{0.0}, {std::move(u)}, std::move(label)};
}

const ControlPoint& ControlProcess::at(double s) const {
  auto it = std::upper_bound(switch_times.begin(), switch_times.end(), s + 1e-12 * (1.0 + std::abs(s)));
  if (it == switch_times.begin()) {
    throw InputError("control '" + label + "' undefined at time " + std::to_string(s));
  }
  return values[static_cast<std::size_t>(it - switch_times.begin()) - 1];
}

void ControlProcess::validate() const {
  if (switch_times.empty() || switch_times.size() != values.size()) {
    throw InputError("control '" + label + "': switch_times and values must be nonempty and equal length");
  }
  for (std::size_t j = 1; j < switch_times.size(); ++j) {
    if (!(switch_times[j] > switch_times[j - 1])) {
      throw InputError("control '" + label + "': switch times must increase");
    }
  }
}

void ControlProblem::validate() const {
  if (state_dim < 1 || noise_dim < 1) throw InputError("ControlProblem: dimensions must be positive");
  if (!(final_time > 0.0)) throw InputError("ControlProblem: final time must be positive");
  if (!drift || !diffusion || !running || !terminal) {
    throw InputError("ControlProblem: F, G, q and phi must all be supplied");
  }
  if (!(lipschitz > 0.0)) throw InputError("ControlProblem: Lipschitz constant must be positive");
}

std::size_t step_count(double t, double T, double dt) {
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (T < t) throw InputError("initial horizon beyond the final time");
  const double ratio = (T - t) / dt;
  const double n = std::round(ratio);
  if (std::abs(n * dt - (T - t)) > 1e-12 * std::max(1.0, T)) {
    throw InputError("dt = " + std::to_string(dt) + " does not divide the window [" +
                     std::to_string(t) + ", " + std::to_string(T) + "]");
  }
  return static_cast<std::size_t>(n);
}

PathView SdeEnsemble::view(std::size_t i, std::size_t k, HVector& integral) const {
  integral = running_integral[i].col(k);
  return PathView(grid, values[i], k + 1, running_sup[i][k], &integral);
}

DiscretePath SdeEnsemble::path(std::size_t i) const { return DiscretePath(grid, values[i]); }

SdeEnsemble simulate_mild(const SpectralOperator& op, const ControlProblem& problem,
                          const DiscretePath& initial, const ControlProcess& control,
                          const NoiseSpec& noise, std::size_t samples) {
  problem.validate();
  control.validate();
  if (samples == 0) throw InputError("simulate_mild: need at least one sample");
  if (op.dim() != problem.state_dim || initial.dim() != problem.state_dim) {
    throw InputError("simulate_mild: operator, problem and initial path dimensions differ");
  }
  if (noise.noise_dim != problem.noise_dim) throw InputError("simulate_mild: noise rank mismatch");
  const double t = initial.horizon();
  const double T = problem.final_time;
  const double dt = noise.dt;
  const std::size_t n = step_count(t, T, dt);
  const int dim = problem.state_dim;
  const int K = noise.noise_dim;

  SdeEnsemble ens;
  ens.grid = initial.grid();
  ens.start = initial.size() - 1;
  for (std::size_t k = 1; k <= n; ++k) ens.grid.push_back(k == n ? T : t + static_cast<double>(k) * dt);
  for (std::size_t k = ens.start + 1; k < ens.grid.size(); ++k) {
    if (!(ens.grid[k] > ens.grid[k - 1])) throw InputError("simulate_mild: degenerate time grid");
  }
  ens.control = control;
  ens.meta = {noise.seed, noise.stream, dt, "exponential_euler", ""};
  const std::size_t points = ens.grid.size();
  ens.values.resize(samples);
  ens.increments.resize(samples);
  ens.running_sup.resize(samples);
  ens.running_integral.resize(samples);

  // History part shared by all samples.
  Eigen::VectorXd hist_sup(initial.size());
  Eigen::MatrixXd hist_int(dim, initial.size());
  {
    double r = 0.0;
    HVector acc = HVector::Zero(dim);
    for (std::size_t k = 0; k < initial.size(); ++k) {
      if (k > 0) acc += (initial.grid()[k] - initial.grid()[k - 1]) * initial.value(k - 1);
      r = std::max(r, initial.value(k).norm());
      hist_sup[k] = r;
      hist_int.col(k) = acc;
    }
  }
  std::vector<ControlPoint> controls(n);
  for (std::size_t k = 0; k < n; ++k) controls[k] = control.at(ens.grid[ens.start + k]);
  const SemigroupStep step(op, dt);
  const double sqdt = std::sqrt(dt);

  parallel_for(samples, [&](std::size_t i) {
    Eigen::MatrixXd& v = ens.values[i];
    Eigen::MatrixXd& dw = ens.increments[i];
    Eigen::VectorXd& sup = ens.running_sup[i];
    Eigen::MatrixXd& integ = ens.running_integral[i];
    v.resize(dim, points);
    dw.resize(K, n);
    sup.resize(points);
    integ.resize(dim, points);
    v.leftCols(initial.size()) = initial.values();
    sup.head(initial.size()) = hist_sup;
    integ.leftCols(initial.size()) = hist_int;
    HVector x;
    HVector integral;
    NoiseVector z(K);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = ens.start + k;
      const double s = ens.grid[j];
      const double h = ens.grid[j + 1] - s;
      integral = integ.col(j);
      const PathView view(ens.grid, v, j + 1, sup[j], &integral);
      const ControlPoint& u = controls[k];
      keyed_normals(noise.seed, noise.stream, i, static_cast<std::uint64_t>(std::llround(s / dt)),
                    z.data(), K);
      z *= sqdt;
      dw.col(k) = z;
      x = v.col(j) + problem.drift(view, u) * h + problem.diffusion(view, u) * z;
      step.apply_inplace(x);
      if (!x.allFinite()) {
        throw SimulationDiverged("simulation diverged at step " + std::to_string(k) + " (t = " +
                                     std::to_string(ens.grid[j + 1]) + ", sample " +
                                     std::to_string(i) + ")",
                                 k);
      }
      v.col(j + 1) = x;
      sup[j + 1] = std::max(sup[j], x.norm());
      integ.col(j + 1) = integ.col(j) + h * v.col(j);
    }
  });
  return ens;
}

SdeEnsemble simulate_yosida(const SpectralOperator& op, double mu, const ControlProblem& problem,
                            const DiscretePath& initial, const ControlProcess& control,
                            const NoiseSpec& noise, std::size_t samples) {
  SdeEnsemble ens = simulate_mild(op.yosida(mu), problem, initial, control, noise, samples);
  ens.meta.scheme = "exponential_euler_yosida";
  return ens;
}

ItoCheckReport ito_inequality_check(const SpectralOperator& op, const ControlProblem& problem,
                                    const DiscretePath& initial, const DiscretePath& anchor,
                                    const ItoCheckParams& params, const SdeEnsemble& ensemble) {
  if (params.kind == ItoGauge::upsilon) {
    validate_gauge_type(params.gauge);
    if (params.gauge.m < 2) throw UnsupportedParameter("ito_inequality_check: m >= 2 required");
  }
  if (params.kind == ItoGauge::terminal_power && params.gauge.m < 1) {
    throw InputError("ito_inequality_check: m >= 1 required");
  }
  if (std::abs(anchor.horizon() - initial.horizon()) > 1e-12 * (1.0 + initial.horizon())) {
    throw InputError("ito_inequality_check: anchor and initial path must share their horizon");
  }
  if (anchor.dim() != ensemble.dim()) throw InputError("ito_inequality_check: anchor dimension mismatch");
  const std::size_t M = ensemble.samples();
  const std::size_t P = ensemble.points();
  const int dim = ensemble.dim();

  // Anchor semigroup-extended and sampled on the ensemble grid.
  // Past the horizon the anchor is stepped with the simulator's own e^{dt A} so that the
  // F = G = 0 case reproduces the flow bit for bit.
  Eigen::MatrixXd eta(dim, P);
  const SemigroupStep flow(op, ensemble.meta.dt);
  for (std::size_t k = 0; k < P; ++k) {
    if (k <= ensemble.start) {
      eta.col(k) = anchor.at(ensemble.grid[k]);
    } else {
      eta.col(k) = flow.apply(eta.col(k - 1));
    }
  }

  const int m = params.gauge.m;
  auto value = [&](double R, const HVector& y) -> double {
    switch (params.kind) {
      case ItoGauge::upsilon: return upsilon_kernel(params.gauge, R, y);
      case ItoGauge::upsilon_eps: return upsilon_eps_kernel(params.eps, R, y);
      case ItoGauge::terminal_power: return std::pow(y.squaredNorm(), m);
    }
    return 0.0;
  };
  auto grad = [&](double R, const HVector& y) -> HVector {
    switch (params.kind) {
      case ItoGauge::upsilon: return upsilon_grad_kernel(params.gauge, R, y);
      case ItoGauge::upsilon_eps: return upsilon_eps_grad_kernel(params.eps, R, y);
      case ItoGauge::terminal_power: return 2.0 * m * std::pow(y.squaredNorm(), m - 1) * y;
    }
    return HVector();
  };
  auto hess = [&](double R, const HVector& y) -> HMatrix {
    switch (params.kind) {
      case ItoGauge::upsilon: return upsilon_hess_kernel(params.gauge, R, y);
      case ItoGauge::upsilon_eps: return upsilon_eps_hess_kernel(params.eps, R, y);
      case ItoGauge::terminal_power: {
        const double u = y.squaredNorm();
        HMatrix h = HMatrix::Identity(dim, dim) * (2.0 * m * std::pow(u, m - 1));
        if (m >= 2) h += 4.0 * m * (m - 1) * std::pow(u, m - 2) * (y * y.transpose());
        return h;
      }
    }
    return HMatrix();
  };

  ItoCheckReport report;
  report.lhs.assign(M, 0.0);
  report.rhs.assign(M, 0.0);
  parallel_for(M, [&](std::size_t i) {
    const Eigen::MatrixXd& x = ensemble.values[i];
    double R = 0.0;
    for (std::size_t k = 0; k <= ensemble.start; ++k) R = std::max(R, (x.col(k) - eta.col(k)).norm());
    HVector y = x.col(ensemble.start) - eta.col(ensemble.start);
    double rhs = value(R, y);
    HVector integral;
    // Each scheme step is z = y + F h + G dW followed by the flow e^{hA}. The generator integral
    // runs over y -> z by the trapezoidal rule (second-order weak), the dW integral stays
    // left-point. The flow part is zero for a skew A and nonpositive for a dissipative one, as
    // the A-term dropped from the inequality.
    for (std::size_t k = 0; k < ensemble.steps(); ++k) {
      const std::size_t j = ensemble.start + k;
      const double h = ensemble.grid[j + 1] - ensemble.grid[j];
      const PathView view = ensemble.view(i, j, integral);
      const ControlPoint& u = ensemble.control.at(ensemble.grid[j]);
      const HVector F = problem.drift(view, u);
      const HMatrix G = problem.diffusion(view, u);
      const HMatrix GG = G * G.transpose();
      const HVector dW = G * ensemble.increments[i].col(k);
      const HVector z = y + F * h + dW;
      const double Rz = std::max(R, z.norm());
      const HVector g0 = grad(R, y);
      rhs += 0.5 * h * ((g0 + grad(Rz, z)).dot(F) + 0.5 * ((hess(R, y) + hess(Rz, z)) * GG).trace()) +
             g0.dot(dW);
      y = x.col(j + 1) - eta.col(j + 1);
      R = std::max(R, y.norm());
    }
    report.lhs[i] = value(R, y);
    report.rhs[i] = rhs;
  });
  std::vector<double> gaps(M);
  for (std::size_t i = 0; i < M; ++i) gaps[i] = report.lhs[i] - report.rhs[i];
  const MeanStderr ms = mean_stderr(gaps);
  report.mean_gap = ms.mean;
  report.stderr_gap = ms.std_error;
  report.max_gap = *std::max_element(gaps.begin(), gaps.end());
  report.min_gap = *std::min_element(gaps.begin(), gaps.end());
  report.passed = report.mean_gap <= 3.0 * report.stderr_gap;
  return report;
}

std::vector<YosidaGap> yosida_convergence(const SpectralOperator& op, const ControlProblem& problem,
                                          const DiscretePath& initial, const ControlProcess& control,
                                          const NoiseSpec& noise, std::size_t samples,
                                          const std::vector<double>& mus) {
  const SdeEnsemble base = simulate_mild(op, problem, initial, control, noise, samples);
  std::vector<YosidaGap> out;
  for (double mu : mus) {
    const SdeEnsemble ys = simulate_yosida(op, mu, problem, initial, control, noise, samples);
    std::vector<double> gaps(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const double s = sup_norm(DiscretePath(base.grid, base.values[i] - ys.values[i]));
      gaps[i] = s * s;
    }
    const MeanStderr ms = mean_stderr(gaps);
    out.push_back({mu, ms.mean, ms.std_error});
  }
  return out;
}

AssumptionSpotCheck spot_check_assumptions(const ControlProblem& problem,
                                           const std::vector<DiscretePath>& paths) {
  problem.validate();
  AssumptionSpotCheck out;
  const double L = problem.lipschitz;
  for (const auto& u : problem.control_space) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const PathView p(paths[i]);
      const double r = p.sup_norm();
      const double f2 = problem.drift(p, u).squaredNorm();
      const double g2 = problem.diffusion(p, u).squaredNorm();
      out.max_growth_ratio = std::max(out.max_growth_ratio, std::max(f2, g2) / (L * L * (1.0 + r * r)));
      if (i + 1 < paths.size() && paths[i + 1].grid() == paths[i].grid()) {
        const PathView q(paths[i + 1]);
        const double d = sup_norm(DiscretePath(paths[i].grid(), paths[i].values() - paths[i + 1].values()));
        if (d > 0.0) {
          const double df = (problem.drift(p, u) - problem.drift(q, u)).norm();
          const double dg = (problem.diffusion(p, u) - problem.diffusion(q, u)).norm();
          out.max_lipschitz_ratio = std::max(out.max_lipschitz_ratio, std::max(df, dg) / (L * d));
        }
      }
    }
  }
  out.passed = out.max_growth_ratio <= 1.0 + 1e-12 && out.max_lipschitz_ratio <= 1.0 + 1e-12;
  return out;
}

}  // namespace pdhjb
