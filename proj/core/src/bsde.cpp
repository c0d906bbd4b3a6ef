#include "pdhjb/bsde.hpp"

#include <cmath>
#include <limits>

#include "pdhjb/errors.hpp"
#include "pdhjb/parallel.hpp"
#include "pdhjb/stats.hpp"

namespace pdhjb {

BsdeSpec BsdeSpec::from_problem(const ControlProblem& problem) {
  return {problem.running, problem.terminal, std::nullopt, problem.lipschitz, problem.driver_yz_free};
}

void BsdeSpec::validate() const {
  if (!driver) throw InputError("BsdeSpec: driver missing");
  if (!terminal && !terminal_values) throw InputError("BsdeSpec: terminal missing");
  if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw InputError("BsdeSpec: bad lipschitz constant");
}

Eigen::VectorXd BsdeSolution::mean_Y() const { return Y.colwise().mean().transpose(); }

namespace {

Eigen::VectorXd terminal_data(const SdeEnsemble& ens, const BsdeSpec& spec) {
  const std::size_t M = ens.samples();
  if (spec.terminal_values) {
    if (static_cast<std::size_t>(spec.terminal_values->size()) != M) {
      throw InputError("BsdeSpec: terminal_values length differs from the ensemble size");
    }
    return *spec.terminal_values;
  }
  Eigen::VectorXd phi(static_cast<Eigen::Index>(M));
  const std::size_t last = ens.points() - 1;
  parallel_for(M, [&](std::size_t i) {
    HVector integral;
    phi[static_cast<Eigen::Index>(i)] = spec.terminal(ens.view(i, last, integral));
  });
  return phi;
}

Eigen::MatrixXd design(const SdeEnsemble& ens, std::size_t j, const Basis& basis) {
  const std::size_t M = ens.samples();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(M), basis.size);
  parallel_for(M, [&](std::size_t i) {
    HVector integral;
    Eigen::VectorXd row(basis.size);
    basis.features(ens.view(i, j, integral), row.data());
    X.row(static_cast<Eigen::Index>(i)) = row.transpose();
  });
  return X;
}

// One backward sweep. With `lagged` the driver sees the previous iterate (Picard);
// otherwise it sees the current Y_{k+1}, Z_k.
BsdeSolution sweep(const SdeEnsemble& ens, const BsdeSpec& spec, const Basis& basis,
                   const BsdeSolution* lagged) {
  spec.validate();
  if (ens.samples() == 0) throw InputError("BSDE: empty ensemble");
  if (!basis.features || basis.size < 1) throw InputError("BSDE: invalid basis");
  const std::size_t M = ens.samples();
  const std::size_t n = ens.steps();
  const int K = ens.noise_dim();
  const auto Mi = static_cast<Eigen::Index>(M);

  BsdeSolution sol;
  sol.times.assign(ens.grid.begin() + static_cast<std::ptrdiff_t>(ens.start), ens.grid.end());
  sol.Y.resize(Mi, static_cast<Eigen::Index>(n + 1));
  sol.Z.assign(n, Eigen::MatrixXd());
  const Eigen::VectorXd phi = terminal_data(ens, spec);
  if (!phi.allFinite()) throw NumericalError("BSDE: non-finite terminal data");
  sol.Y.col(static_cast<Eigen::Index>(n)) = phi;
  Eigen::VectorXd drift_sum = Eigen::VectorXd::Zero(Mi);
  Eigen::VectorXd mart_sum = Eigen::VectorXd::Zero(Mi);

  for (std::size_t kk = n; kk-- > 0;) {
    const std::size_t j = ens.start + kk;
    const double h = ens.grid[j + 1] - ens.grid[j];
    const ControlPoint u = ens.control.at(ens.grid[j]);
    const Projector proj(design(ens, j, basis));
    if (proj.ridge_used() && !sol.ridge_used) {
      sol.ridge_used = true;
      sol.warnings.push_back("rank-deficient regression at t = " + std::to_string(ens.grid[j]) +
                             "; ridge " + std::to_string(kRidge) + " applied");
    }
    const auto next = sol.Y.col(static_cast<Eigen::Index>(kk + 1));
    // Centring on the conditional mean leaves Z unbiased and removes most of its regression noise.
    const Eigen::VectorXd centred = next - proj.project(next);
    Eigen::MatrixXd zt(Mi, K);
    for (std::size_t i = 0; i < M; ++i) {
      zt.row(static_cast<Eigen::Index>(i)) =
          centred[static_cast<Eigen::Index>(i)] * ens.increments[i].col(static_cast<Eigen::Index>(kk)).transpose() / h;
    }
    sol.Z[kk] = proj.project(zt);
    Eigen::VectorXd q(Mi);
    parallel_for(M, [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      HVector integral;
      const PathView view = ens.view(i, j, integral);
      if (lagged) {
        const NoiseVector z = lagged->Z[kk].row(ii).transpose();
        q[ii] = spec.driver(view, lagged->Y(ii, static_cast<Eigen::Index>(kk + 1)), z, u);
      } else {
        const NoiseVector z = sol.Z[kk].row(ii).transpose();
        q[ii] = spec.driver(view, next[ii], z, u);
      }
    });
    if (!q.allFinite()) throw NumericalError("BSDE: non-finite driver value at t = " + std::to_string(ens.grid[j]));
    const Eigen::VectorXd target = next + q * h;
    sol.Y.col(static_cast<Eigen::Index>(kk)) = proj.project(target);
    drift_sum += q * h;
    for (std::size_t i = 0; i < M; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      mart_sum[ii] += sol.Z[kk].row(ii).dot(ens.increments[i].col(static_cast<Eigen::Index>(kk)));
    }
  }
  sol.pathwise = phi + drift_sum - mart_sum;
  sol.value = sol.Y.col(0).mean();
  const std::vector<double> pw(sol.pathwise.data(), sol.pathwise.data() + M);
  sol.std_error = M > 1 ? mean_stderr(pw).std_error : 0.0;
  sol.terminal_residual = (sol.Y.col(static_cast<Eigen::Index>(n)) - phi).cwiseAbs().maxCoeff();
  return sol;
}

}  // namespace

BsdeSolution solve_regression(const SdeEnsemble& ensemble, const BsdeSpec& spec, const Basis& basis) {
  return sweep(ensemble, spec, basis, nullptr);
}

BsdeSolution solve_regression(const SdeEnsemble& ensemble, const BsdeSpec& spec) {
  return sweep(ensemble, spec, path_feature_basis(ensemble.dim()), nullptr);
}

ValueAtStart solve_value(const SdeEnsemble& ens, const BsdeSpec& spec, const Basis& basis) {
  if (!spec.driver_yz_free) {
    BsdeSolution sol = solve_regression(ens, spec, basis);
    return {sol.value, sol.std_error, std::move(sol.pathwise)};
  }
  spec.validate();
  if (ens.samples() == 0) throw InputError("BSDE: empty ensemble");
  const std::size_t M = ens.samples();
  const std::size_t n = ens.steps();
  ValueAtStart out;
  out.pathwise = terminal_data(ens, spec);
  const NoiseVector z0 = NoiseVector::Zero(ens.noise_dim());
  std::vector<ControlPoint> controls(n);
  for (std::size_t k = 0; k < n; ++k) controls[k] = ens.control.at(ens.grid[ens.start + k]);
  parallel_for(M, [&](std::size_t i) {
    HVector integral;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = ens.start + k;
      acc += spec.driver(ens.view(i, j, integral), 0.0, z0, controls[k]) * (ens.grid[j + 1] - ens.grid[j]);
    }
    out.pathwise[static_cast<Eigen::Index>(i)] += acc;
  });
  if (!out.pathwise.allFinite()) throw NumericalError("BSDE: non-finite pathwise value");
  const MeanStderr ms = mean_stderr(std::vector<double>(out.pathwise.data(), out.pathwise.data() + M));
  out.value = ms.mean;
  out.std_error = M > 1 ? ms.std_error : 0.0;
  return out;
}

PicardResult solve_picard(const SdeEnsemble& ensemble, const BsdeSpec& spec, const Basis& basis,
                          int max_iterations, double tol) {
  if (max_iterations < 1) throw InputError("solve_picard: need at least one iteration");
  PicardResult res;
  // Iterate zero: Y = 0, Z = 0 on the whole grid.
  BsdeSolution prev;
  prev.Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ensemble.samples()),
                                 static_cast<Eigen::Index>(ensemble.steps() + 1));
  prev.Z.assign(ensemble.steps(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ensemble.samples()),
                                                        ensemble.noise_dim()));
  int growing = 0;
  for (int it = 1; it <= max_iterations; ++it) {
    BsdeSolution next = sweep(ensemble, spec, basis, &prev);
    const double gap = (next.Y - prev.Y).cwiseAbs().maxCoeff();
    const double scale = 1.0 + next.Y.cwiseAbs().maxCoeff();
    if (!res.gaps.empty() && gap > res.gaps.back()) {
      if (++growing >= 3) {
        throw NumericalError("solve_picard: iterate gap grew for 3 consecutive iterations (diverged)");
      }
    } else {
      growing = 0;
    }
    res.gaps.push_back(gap);
    prev = std::move(next);
    if (it > 1 && gap <= tol * scale) {
      res.converged = true;
      res.iterations = it - 1;
      break;
    }
  }
  if (!res.converged) res.iterations = max_iterations;
  res.solution = std::move(prev);
  return res;
}

SdeEnsemble coarsen(const SdeEnsemble& ens, std::size_t stride) {
  if (stride < 1) throw InputError("coarsen: stride must be positive");
  const std::size_t n = ens.steps();
  if (n % stride != 0) throw InputError("coarsen: stride does not divide the step count");
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k <= ens.start; ++k) keep.push_back(k);
  for (std::size_t k = stride; k <= n; k += stride) keep.push_back(ens.start + k);
  SdeEnsemble out;
  out.start = ens.start;
  out.control = ens.control;
  out.meta = ens.meta;
  out.meta.dt = ens.meta.dt * static_cast<double>(stride);
  for (std::size_t k : keep) out.grid.push_back(ens.grid[k]);
  const std::size_t M = ens.samples();
  out.values.resize(M);
  out.increments.resize(M);
  out.running_sup.resize(M);
  out.running_integral.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    out.values[i].resize(ens.dim(), static_cast<Eigen::Index>(keep.size()));
    out.running_integral[i].resize(ens.dim(), static_cast<Eigen::Index>(keep.size()));
    out.running_sup[i].resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      const auto kc = static_cast<Eigen::Index>(keep[c]);
      out.values[i].col(cc) = ens.values[i].col(kc);
      out.running_integral[i].col(cc) = ens.running_integral[i].col(kc);
      out.running_sup[i][cc] = ens.running_sup[i][kc];
    }
    out.increments[i].resize(ens.noise_dim(), static_cast<Eigen::Index>(n / stride));
    for (std::size_t c = 0; c < n / stride; ++c) {
      out.increments[i].col(static_cast<Eigen::Index>(c)) =
          ens.increments[i].middleCols(static_cast<Eigen::Index>(c * stride), static_cast<Eigen::Index>(stride)).rowwise().sum();
    }
  }
  return out;
}

DiscretizationEstimate discretization_estimate(const SdeEnsemble& ensemble, const BsdeSpec& spec,
                                               const Basis& basis) {
  DiscretizationEstimate d;
  d.fine = solve_regression(ensemble, spec, basis).value;
  if (ensemble.steps() % 2 != 0) throw InputError("discretization_estimate: odd step count");
  d.coarse = solve_regression(coarsen(ensemble, 2), spec, basis).value;
  d.estimate = std::abs(d.fine - d.coarse);
  return d;
}

ComparisonReport comparison_check(const SdeEnsemble& ens, const BsdeSpec& spec1, const BsdeSpec& spec2,
                                  const Basis& basis) {
  spec1.validate();
  spec2.validate();
  const BsdeSolution s2 = solve_regression(ens, spec2, basis);
  const std::size_t M = ens.samples();
  const std::size_t n = ens.steps();
  const Eigen::VectorXd phi1 = terminal_data(ens, spec1);
  const Eigen::VectorXd& phi2 = s2.Y.col(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < M; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (phi1[ii] < phi2[ii] - 1e-12 * (1.0 + std::abs(phi2[ii]))) {
      throw InputError("comparison_check: terminal ordering violated at sample " + std::to_string(i));
    }
  }
  for (std::size_t kk = 0; kk < n; ++kk) {
    const std::size_t j = ens.start + kk;
    const ControlPoint u = ens.control.at(ens.grid[j]);
    for (std::size_t i = 0; i < M; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      HVector integral;
      const PathView view = ens.view(i, j, integral);
      const NoiseVector z = s2.Z[kk].row(ii).transpose();
      const double y = s2.Y(ii, static_cast<Eigen::Index>(kk + 1));
      const double q1 = spec1.driver(view, y, z, u);
      const double q2 = spec2.driver(view, y, z, u);
      if (q1 < q2 - 1e-12 * (1.0 + std::abs(q2))) {
        throw InputError("comparison_check: driver ordering violated at sample " + std::to_string(i) +
                         ", t = " + std::to_string(ens.grid[j]));
      }
    }
  }
  const BsdeSolution s1 = solve_regression(ens, spec1, basis);
  ComparisonReport rep;
  rep.times = s1.times;
  const Eigen::VectorXd dpath = s1.pathwise - s2.pathwise;
  const double se_path =
      M > 1 ? mean_stderr(std::vector<double>(dpath.data(), dpath.data() + M)).std_error : 0.0;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t kk = 0; kk <= n; ++kk) {
    const Eigen::VectorXd d = s1.Y.col(static_cast<Eigen::Index>(kk)) - s2.Y.col(static_cast<Eigen::Index>(kk));
    const MeanStderr ms = mean_stderr(std::vector<double>(d.data(), d.data() + M));
    const double tol = 3.0 * std::max(ms.std_error, se_path);
    rep.mean_gap.push_back(ms.mean);
    rep.tolerance.push_back(tol);
    rep.min_slack = std::min(rep.min_slack, ms.mean + tol);
  }
  rep.passed = rep.min_slack >= -1e-12;
  return rep;
}

}  // namespace pdhjb
