#include "pdhjb/markovian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <Eigen/Eigenvalues>

#include "pdhjb/errors.hpp"

namespace pdhjb {

void MarkovianSpec::validate() const {
  if (dim != 1 && dim != 2) throw UnsupportedParameter("MarkovianSpec: 1 or 2 retained modes supported");
  if (static_cast<int>(rates.size()) != dim) throw InputError("MarkovianSpec: rates length differs from dim");
  for (double r : rates) {
    if (!(r <= 0.0) || !std::isfinite(r)) throw InputError("MarkovianSpec: rates must be finite and <= 0");
  }
  if (!drift || !diffusion || !running || !terminal) throw InputError("MarkovianSpec: missing coefficient");
  if (controls.empty()) throw InputError("MarkovianSpec: empty control set");
  if (!(final_time > 0.0)) throw InputError("MarkovianSpec: final_time must be positive");
  if (!(lipschitz_r >= 0.0)) throw InputError("MarkovianSpec: lipschitz_r must be >= 0");
}

UpwindHamiltonian quadratic_relaxation_hamiltonian() {
  return [](double, double, double, double pf, double pb, double pxx) {
    const double up = std::max(pf, 0.0);
    const double down = std::min(pb, 0.0);
    return 0.5 * std::max(up * up, down * down) + 0.5 * pxx;
  };
}

namespace {

struct Layout {
  std::vector<std::vector<double>> axes;
  std::vector<std::size_t> n;
  std::size_t total = 1;
  double h = 0.0;

  HVector point(std::size_t idx) const {
    HVector x(static_cast<Eigen::Index>(n.size()));
    for (std::size_t d = 0; d < n.size(); ++d) {
      x[static_cast<Eigen::Index>(d)] = axes[d][idx % n[d]];
      idx /= n[d];
    }
    return x;
  }
  bool boundary(std::size_t idx) const {
    for (std::size_t d = 0; d < n.size(); ++d) {
      const std::size_t i = idx % n[d];
      if (i == 0 || i + 1 == n[d]) return true;
      idx /= n[d];
    }
    return false;
  }
};

Layout make_layout(const std::vector<double>& lower, const std::vector<double>& upper, double h, int dim) {
  if (static_cast<int>(lower.size()) != dim || static_cast<int>(upper.size()) != dim) {
    throw InputError("FdGrid: bounds must match the number of modes");
  }
  if (!(h > 0.0)) throw InputError("FdGrid: h must be positive");
  Layout L;
  L.h = h;
  for (int d = 0; d < dim; ++d) {
    const double span = upper[d] - lower[d];
    if (!(span > 0.0)) throw InputError("FdGrid: empty domain");
    const double cells = span / h;
    const auto nc = static_cast<std::size_t>(std::llround(cells));
    if (std::abs(cells - static_cast<double>(nc)) > 1e-8 * cells || nc < 2) {
      throw InputError("FdGrid: h does not divide the domain");
    }
    std::vector<double> axis(nc + 1);
    for (std::size_t i = 0; i <= nc; ++i) axis[i] = lower[d] + static_cast<double>(i) * h;
    axis.back() = upper[d];
    L.n.push_back(nc + 1);
    L.total *= nc + 1;
    L.axes.push_back(std::move(axis));
  }
  return L;
}

double semigroup_terminal(const MarkovianSpec& spec, double t, const HVector& x) {
  HVector y = x;
  for (int d = 0; d < spec.dim; ++d) y[d] *= std::exp((spec.final_time - t) * spec.rates[static_cast<std::size_t>(d)]);
  return spec.terminal(y);
}

// Precomputed coefficients at one time level: per (point, control) diagonal diffusion, drift
// and, when present, the noise loading used for z.
struct Coefficients {
  std::vector<double> a;  // total * C * dim
  std::vector<double> b;
  std::vector<HMatrix> g;  // total * C
};

Coefficients coefficients(const MarkovianSpec& spec, const Layout& L, double t) {
  const std::size_t C = spec.controls.size();
  const int dim = spec.dim;
  Coefficients c;
  c.a.resize(L.total * C * static_cast<std::size_t>(dim));
  c.b.resize(c.a.size());
  c.g.resize(L.total * C);
  for (std::size_t idx = 0; idx < L.total; ++idx) {
    const HVector x = L.point(idx);
    for (std::size_t u = 0; u < C; ++u) {
      const HVector F = spec.drift(t, x, spec.controls[u]);
      const HMatrix G = spec.diffusion(t, x, spec.controls[u]);
      if (F.size() != dim || G.rows() != dim) throw InputError("MarkovianSpec: coefficient shape mismatch");
      const HMatrix a = 0.5 * G * G.transpose();
      if (dim == 2 && std::abs(a(0, 1)) > 1e-12 * (1.0 + a.diagonal().cwiseAbs().maxCoeff())) {
        throw UnsupportedParameter("markovian_fd_solve: correlated diffusion is not supported");
      }
      if (!F.allFinite() || !G.allFinite()) throw NumericalError("markovian_fd_solve: non-finite coefficient");
      for (int d = 0; d < dim; ++d) {
        const std::size_t k = (idx * C + u) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d);
        c.a[k] = a(d, d);
        c.b[k] = spec.rates[static_cast<std::size_t>(d)] * x[d] + F[d];
      }
      c.g[idx * C + u] = G;
    }
  }
  return c;
}

double cfl_rate(const MarkovianSpec& spec, const Layout& L, const Coefficients& c, const FdOptions& opt) {
  const std::size_t C = spec.controls.size();
  const double h = L.h;
  double rate = 0.0;
  for (std::size_t idx = 0; idx < L.total; ++idx) {
    for (std::size_t u = 0; u < C; ++u) {
      double r = spec.lipschitz_r;
      for (int d = 0; d < spec.dim; ++d) {
        const std::size_t k = (idx * C + u) * static_cast<std::size_t>(spec.dim) + static_cast<std::size_t>(d);
        const double b = opt.hamiltonian ? opt.drift_bound : std::abs(c.b[k]);
        r += 2.0 * c.a[k] / (h * h) + b / h;
      }
      rate = std::max(rate, r);
    }
  }
  return rate;
}

FdSolution solve_once(const MarkovianSpec& spec, const Layout& L, double tau_in, const FdOptions& opt) {
  const int dim = spec.dim;
  const std::size_t C = spec.controls.size();
  const double T = spec.final_time;
  const double h = L.h;
  auto boundary = [&](double t, const HVector& x) {
    return opt.boundary ? opt.boundary(t, x) : semigroup_terminal(spec, t, x);
  };
  if (opt.hamiltonian && dim != 1) throw UnsupportedParameter("markovian_fd_solve: Hamiltonian override is 1-D only");

  Coefficients coef = coefficients(spec, L, T);
  const double rate = cfl_rate(spec, L, coef, opt);
  const double tau_max = rate > 0.0 ? 1.0 / rate : T;
  if (tau_in > 0.0 && tau_in > tau_max * (1.0 + 1e-12)) {
    throw InputError("markovian_fd_solve: CFL violation (tau = " + std::to_string(tau_in) +
                     " > " + std::to_string(tau_max) + ")");
  }
  const double tau0 = tau_in > 0.0 ? tau_in : 0.95 * tau_max;
  const auto steps = static_cast<std::size_t>(std::ceil(T / tau0 - 1e-9));
  const double tau = T / static_cast<double>(steps);

  FdSolution sol;
  sol.axes = L.axes;
  sol.h = h;
  sol.tau = tau;
  sol.steps = steps;
  std::vector<std::size_t> keep;
  for (double t : opt.output_times) {
    if (t < -1e-12 || t > T + 1e-12) throw InputError("markovian_fd_solve: output time outside [0, T]");
    keep.push_back(static_cast<std::size_t>(std::llround(t / tau)));
  }
  keep.push_back(steps);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

  Eigen::VectorXd V(static_cast<Eigen::Index>(L.total));
  std::vector<HVector> pts(L.total);
  for (std::size_t idx = 0; idx < L.total; ++idx) {
    pts[idx] = L.point(idx);
    V[static_cast<Eigen::Index>(idx)] = spec.terminal(pts[idx]);
  }
  if (!V.allFinite()) throw NumericalError("markovian_fd_solve: non-finite terminal data");
  const double scale = 1.0 + V.cwiseAbs().maxCoeff();
  std::vector<std::size_t> stride(static_cast<std::size_t>(dim), 1);
  for (int d = 1; d < dim; ++d) stride[static_cast<std::size_t>(d)] = stride[static_cast<std::size_t>(d - 1)] * L.n[static_cast<std::size_t>(d - 1)];

  const NoiseVector z0 = NoiseVector::Zero(coef.g[0].cols());
  const bool rz_free = spec.running_rz_free;
  const bool homogeneous = spec.time_homogeneous;

  std::vector<std::pair<double, Eigen::VectorXd>> snaps;
  std::size_t next_keep = keep.size();
  if (keep.back() == steps) {
    snaps.emplace_back(T, V);
    --next_keep;
  }
  Eigen::VectorXd Vn(V.size());
  std::vector<double> qtab;
  for (std::size_t j = steps; j-- > 0;) {
    const double t_next = static_cast<double>(j + 1) * tau;
    const double t_now = static_cast<double>(j) * tau;
    if (!homogeneous && j + 1 != steps) {
      coef = coefficients(spec, L, t_next);
      if (cfl_rate(spec, L, coef, opt) * tau > 1.0 + 1e-12) {
        throw InputError("markovian_fd_solve: CFL violation at t = " + std::to_string(t_next));
      }
    }
    if (rz_free && (qtab.empty() || !homogeneous)) {
      qtab.assign(L.total * C, 0.0);
      for (std::size_t idx = 0; idx < L.total; ++idx)
        for (std::size_t u = 0; u < C; ++u) qtab[idx * C + u] = spec.running(t_next, pts[idx], 0.0, z0, spec.controls[u]);
    }
    for (std::size_t idx = 0; idx < L.total; ++idx) {
      const auto ii = static_cast<Eigen::Index>(idx);
      if (L.boundary(idx)) {
        Vn[ii] = boundary(t_now, pts[idx]);
        continue;
      }
      const double v = V[ii];
      double Hmax = -std::numeric_limits<double>::infinity();
      if (opt.hamiltonian) {
        const double vp = V[ii + 1];
        const double vm = V[ii - 1];
        Hmax = opt.hamiltonian(t_next, pts[idx][0], v, (vp - v) / h, (v - vm) / h, (vp - 2.0 * v + vm) / (h * h));
      } else {
        HVector grad(dim);
        for (int d = 0; d < dim; ++d) {
          const std::size_t s = stride[static_cast<std::size_t>(d)];
          grad[d] = (V[static_cast<Eigen::Index>(idx + s)] - V[static_cast<Eigen::Index>(idx - s)]) / (2.0 * h);
        }
        for (std::size_t u = 0; u < C; ++u) {
          double acc = 0.0;
          for (int d = 0; d < dim; ++d) {
            const std::size_t s = stride[static_cast<std::size_t>(d)];
            const std::size_t k = (idx * C + u) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d);
            const double vp = V[static_cast<Eigen::Index>(idx + s)];
            const double vm = V[static_cast<Eigen::Index>(idx - s)];
            const double b = coef.b[k];
            acc += coef.a[k] * (vp - 2.0 * v + vm) / (h * h) + std::max(b, 0.0) * (vp - v) / h -
                   std::max(-b, 0.0) * (v - vm) / h;
          }
          if (rz_free) {
            acc += qtab[idx * C + u];
          } else {
            const HMatrix& G = coef.g[idx * C + u];
            acc += spec.running(t_next, pts[idx], v, G.transpose() * grad, spec.controls[u]);
          }
          Hmax = std::max(Hmax, acc);
        }
      }
      Vn[ii] = v + tau * Hmax;
    }
    V.swap(Vn);
    if (!V.allFinite() || V.cwiseAbs().maxCoeff() > 1e12 * scale) {
      throw NumericalError("markovian_fd_solve: unbounded growth at t = " + std::to_string(t_now));
    }
    if (next_keep > 0 && keep[next_keep - 1] == j) {
      snaps.emplace_back(t_now, V);
      --next_keep;
    }
  }
  std::reverse(snaps.begin(), snaps.end());
  for (auto& [t, v] : snaps) {
    sol.times.push_back(t);
    sol.values.push_back(std::move(v));
  }
  return sol;
}

}  // namespace

std::size_t FdSolution::snapshot(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= 0.5 * tau + 1e-12) return k;
  }
  throw InputError("FdSolution: no snapshot at t = " + std::to_string(t));
}

double FdSolution::value_at(std::size_t k, const HVector& x) const {
  if (k >= values.size()) throw InputError("FdSolution: snapshot index out of range");
  if (static_cast<std::size_t>(x.size()) != axes.size()) throw InputError("FdSolution: point dimension mismatch");
  std::vector<std::size_t> lo(axes.size());
  std::vector<double> w(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const auto& ax = axes[d];
    const double xd = x[static_cast<Eigen::Index>(d)];
    if (xd < ax.front() - 1e-12 || xd > ax.back() + 1e-12) throw InputError("FdSolution: point outside the grid");
    const double pos = std::clamp((xd - ax.front()) / h, 0.0, static_cast<double>(ax.size() - 1));
    lo[d] = std::min(static_cast<std::size_t>(pos), ax.size() - 2);
    w[d] = pos - static_cast<double>(lo[d]);
  }
  const Eigen::VectorXd& v = values[k];
  if (axes.size() == 1) return (1.0 - w[0]) * v[static_cast<Eigen::Index>(lo[0])] + w[0] * v[static_cast<Eigen::Index>(lo[0] + 1)];
  const std::size_t n0 = axes[0].size();
  auto at = [&](std::size_t i, std::size_t j) { return v[static_cast<Eigen::Index>(i + n0 * j)]; };
  return (1.0 - w[0]) * (1.0 - w[1]) * at(lo[0], lo[1]) + w[0] * (1.0 - w[1]) * at(lo[0] + 1, lo[1]) +
         (1.0 - w[0]) * w[1] * at(lo[0], lo[1] + 1) + w[0] * w[1] * at(lo[0] + 1, lo[1] + 1);
}

FdSolution markovian_fd_solve(const MarkovianSpec& spec, const FdGrid& grid, const FdOptions& options) {
  spec.validate();
  const Layout fine = make_layout(grid.lower, grid.upper, grid.h, spec.dim);
  FdSolution sol = solve_once(spec, fine, grid.tau, options);
  if (options.refinement) {
    const Layout coarse = make_layout(grid.lower, grid.upper, 2.0 * grid.h, spec.dim);
    FdOptions copt = options;
    const FdSolution c = solve_once(spec, coarse, 0.0, copt);
    const std::size_t kf = 0;
    const std::size_t kc = c.snapshot(sol.times[kf]);
    double est = 0.0;
    std::vector<HVector> probes = options.probes;
    if (probes.empty()) {
      // Middle half of the domain, on the coarse nodes.
      for (std::size_t idx = 0; idx < coarse.total; ++idx) {
        const HVector x = coarse.point(idx);
        bool inside = true;
        for (int d = 0; d < spec.dim; ++d) {
          const double lo = grid.lower[static_cast<std::size_t>(d)];
          const double hi = grid.upper[static_cast<std::size_t>(d)];
          inside = inside && x[d] >= lo + 0.25 * (hi - lo) && x[d] <= hi - 0.25 * (hi - lo);
        }
        if (inside) probes.push_back(x);
      }
    }
    for (const HVector& x : probes) est = std::max(est, std::abs(sol.value_at(kf, x) - c.value_at(kc, x)));
    sol.refinement_estimate = est;
  }
  return sol;
}

Quadrature gauss_hermite(int n) {
  if (n < 1) throw InputError("gauss_hermite: n must be positive");
  // Rules are reused inside boundary callbacks, so they are cached by size.
  static std::mutex lock;
  static std::map<int, Quadrature> cache;
  {
    std::lock_guard<std::mutex> g(lock);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen solver failed");
  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    q.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    q.weights[static_cast<std::size_t>(k)] = v * v;
  }
  std::lock_guard<std::mutex> g(lock);
  cache.emplace(n, q);
  return q;
}

double hopf_cole_oracle(const std::function<double(double)>& phi, double t, double x, double T,
                        int nodes, double tol) {
  if (!phi) throw InputError("hopf_cole_oracle: phi missing");
  if (t > T + 1e-12) throw InputError("hopf_cole_oracle: t > T");
  const double tau = std::max(0.0, T - t);
  if (tau == 0.0) return phi(x);
  auto eval = [&](int n) {
    const Quadrature q = gauss_hermite(n);
    std::vector<double> e(q.nodes.size());
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < e.size(); ++k) {
      e[k] = phi(x + std::sqrt(tau) * q.nodes[k]);
      m = std::max(m, e[k]);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) s += q.weights[k] * std::exp(e[k] - m);
    return m + std::log(s);
  };
  int n = std::max(2, nodes);
  double a = eval(n);
  while (n <= 512) {
    const double b = eval(2 * n);
    if (std::abs(b - a) <= tol * (1.0 + std::abs(b))) return b;
    a = b;
    n *= 2;
  }
  throw NumericalError("hopf_cole_oracle: quadrature did not converge up to 1024 nodes");
}

std::size_t DpSolution::snapshot(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= 1e-9) return k;
  }
  throw InputError("DpSolution: no snapshot at t = " + std::to_string(t));
}

double DpSolution::value_at(std::size_t k, double x) const {
  if (k >= values.size()) throw InputError("DpSolution: snapshot index out of range");
  if (x < axis.front() - 1e-12 || x > axis.back() + 1e-12) throw InputError("DpSolution: point outside the grid");
  const double h = axis[1] - axis[0];
  boost::math::interpolators::cardinal_cubic_b_spline<double> s(values[k].data(), static_cast<std::size_t>(values[k].size()),
                                                                axis.front(), h);
  return s(x);
}

DpSolution discrete_control_dp(const MarkovianSpec& spec, double lower, double upper, double h,
                               const DpOptions& options) {
  spec.validate();
  if (spec.dim != 1) throw UnsupportedParameter("discrete_control_dp: 1-D only");
  const Layout L = make_layout({lower}, {upper}, h, 1);
  const double T = spec.final_time;
  const std::size_t steps = step_count(0.0, T, options.dt);
  const double dt = T / static_cast<double>(steps);
  const Quadrature q = gauss_hermite(options.quadrature_nodes);
  const double decay = std::exp(dt * spec.rates[0]);
  auto boundary = [&](double t, double x) {
    if (options.boundary) return options.boundary(t, x);
    HVector y(1);
    y[0] = x;
    return semigroup_terminal(spec, t, y);
  };
  std::vector<std::size_t> keep;
  for (double t : options.output_times) keep.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  keep.push_back(steps);

  DpSolution sol;
  sol.axis = L.axes[0];
  const std::size_t n = sol.axis.size();
  Eigen::VectorXd V(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    HVector x(1);
    x[0] = sol.axis[i];
    V[static_cast<Eigen::Index>(i)] = spec.terminal(x);
  }
  std::vector<std::pair<double, Eigen::VectorXd>> snaps;
  auto wanted = [&](std::size_t j) { return std::find(keep.begin(), keep.end(), j) != keep.end(); };
  if (wanted(steps)) snaps.emplace_back(T, V);
  Eigen::VectorXd Vn(V.size());
  for (std::size_t j = steps; j-- > 0;) {
    const double t = static_cast<double>(j) * dt;
    const double t_next = static_cast<double>(j + 1) * dt;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(V.data(), n, sol.axis.front(), h);
    for (std::size_t i = 0; i < n; ++i) {
      HVector x(1);
      x[0] = sol.axis[i];
      double best = -std::numeric_limits<double>::infinity();
      for (const ControlPoint& u : spec.controls) {
        const HVector F = spec.drift(t, x, u);
        const HMatrix G = spec.diffusion(t, x, u);
        const double gnorm = G.norm();
        const double mean = decay * (x[0] + F[0] * dt);
        const double sd = decay * gnorm * std::sqrt(dt);
        double ev = 0.0;
        double evz = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
          const double xp = mean + sd * q.nodes[k];
          const double v = (xp >= sol.axis.front() && xp <= sol.axis.back()) ? spline(xp) : boundary(t_next, xp);
          ev += q.weights[k] * v;
          evz += q.weights[k] * v * q.nodes[k];
        }
        NoiseVector z = NoiseVector::Zero(G.cols());
        if (gnorm > 0.0) z = G.row(0).transpose() / gnorm * (evz / std::sqrt(dt));
        best = std::max(best, ev + dt * spec.running(t, x, ev, z, u));
      }
      Vn[static_cast<Eigen::Index>(i)] = best;
    }
    V.swap(Vn);
    if (!V.allFinite()) throw NumericalError("discrete_control_dp: non-finite value");
    if (wanted(j)) snaps.emplace_back(t, V);
  }
  std::reverse(snaps.begin(), snaps.end());
  for (auto& [t, v] : snaps) {
    sol.times.push_back(t);
    sol.values.push_back(std::move(v));
  }
  return sol;
}

}  // namespace pdhjb
