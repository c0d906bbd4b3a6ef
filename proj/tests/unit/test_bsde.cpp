#include "doctest.h"

#include <cmath>

#include "pdhjb/bsde.hpp"
#include "pdhjb/errors.hpp"
#include "pdhjb/stats.hpp"
#include "test_support.hpp"

using namespace pdhjb;
using namespace pdhjb::testing;

namespace {

SdeEnsemble heat_ensemble(std::size_t M, double dt = 1.0 / 32, std::uint64_t seed = 4) {
  const auto prob = linear_problem(2, 0.5, 0.4);
  const auto op = SpectralOperator::dirichlet_laplacian(2, 0.1);
  const auto init = DiscretePath::constant(HVector::Constant(2, 0.3), {0.0});
  return simulate_mild(op, prob, init, constant_control(1.0), {2, seed, dt}, M);
}

BsdeSpec spec_of(std::function<double(const PathView&, double, const NoiseVector&, const ControlPoint&)> q,
                 std::function<double(const PathView&)> phi, double L = 1.0) {
  BsdeSpec s;
  s.driver = std::move(q);
  s.terminal = std::move(phi);
  s.lipschitz = L;
  return s;
}

double zero_q(const PathView&, double, const NoiseVector&, const ControlPoint&) { return 0.0; }
double phi_sum(const PathView& g) { return g.terminal().sum(); }

}  // namespace

TEST_CASE("q = 0 with a constant basis is the sample mean") {
  const auto ens = heat_ensemble(500);
  const auto sol = solve_regression(ens, spec_of(zero_q, phi_sum), constant_basis());
  double mean = 0.0;
  for (std::size_t i = 0; i < ens.samples(); ++i) mean += ens.values[i].col(ens.points() - 1).sum();
  mean /= static_cast<double>(ens.samples());
  CHECK(sol.value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(sol.terminal_residual == 0.0);
}

TEST_CASE("linear driver closed form") {
  const auto ens = heat_ensemble(400, 1.0 / 64);
  const Basis basis = path_feature_basis(2);
  for (double r : {0.0, 0.5, 1.0}) {
    auto q = [r](const PathView&, double y, const NoiseVector&, const ControlPoint&) { return -r * y; };
    const auto spec = spec_of(q, [](const PathView&) { return 1.0; }, r);
    const auto sol = solve_regression(ens, spec, basis);
    const auto d = discretization_estimate(ens, spec, basis);
    const double bar = std::hypot(sol.std_error, d.estimate);
    CHECK(std::abs(sol.value - std::exp(-r)) <= 3.0 * bar + 1e-12);
    CHECK(sol.terminal_residual == 0.0);
  }
}

TEST_CASE("constant driver adds c (T - t)") {
  const auto ens = heat_ensemble(300);
  auto q = [](const PathView&, double, const NoiseVector&, const ControlPoint&) { return 0.7; };
  const auto a = solve_regression(ens, spec_of(q, phi_sum), constant_basis());
  const auto b = solve_regression(ens, spec_of(zero_q, phi_sum), constant_basis());
  CHECK(a.value - b.value == doctest::Approx(0.7));
}

TEST_CASE("martingale increments are orthogonal to the basis") {
  const auto ens = heat_ensemble(300);
  const Basis basis = path_feature_basis(2);
  const auto sol = solve_regression(ens, spec_of(zero_q, phi_sum), basis);
  // Normal equations: features at step k are orthogonal to Y_{k+1} - Y_k - Z_k dW_k - (proj residual).
  for (std::size_t kk : {std::size_t{0}, ens.steps() / 2, ens.steps() - 1}) {
    const std::size_t j = ens.start + kk;
    Eigen::MatrixXd X(ens.samples(), basis.size);
    for (std::size_t i = 0; i < ens.samples(); ++i) {
      HVector integ;
      Eigen::VectorXd row(basis.size);
      basis.features(ens.view(i, j, integ), row.data());
      X.row(i) = row.transpose();
    }
    const Eigen::VectorXd resid = sol.Y.col(kk + 1) - sol.Y.col(kk);
    const Eigen::VectorXd normal = X.transpose() * resid / static_cast<double>(ens.samples());
    CHECK(normal.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + X.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("picard agrees with the regression solution") {
  const auto ens = heat_ensemble(300);
  const Basis basis = path_feature_basis(2);
  const auto zero = solve_picard(ens, spec_of(zero_q, phi_sum), basis, 10);
  CHECK(zero.converged);
  CHECK(zero.iterations == 1);
  auto q = [](const PathView& g, double y, const NoiseVector& z, const ControlPoint&) {
    return -0.5 * y + 0.1 * z.sum() + 0.2 * g.terminal()[0];
  };
  const auto spec = spec_of(q, phi_sum, 1.0);
  const auto pic = solve_picard(ens, spec, basis, 200, 1e-12);
  const auto reg = solve_regression(ens, spec, basis);
  CHECK(pic.converged);
  CHECK(std::abs(pic.solution.value - reg.value) < 1e-9);
  for (std::size_t k = 1; k < pic.gaps.size(); ++k) CHECK(pic.gaps[k] <= pic.gaps[k - 1] * (1.0 + 1e-12) + 1e-15);
}

TEST_CASE("yz-free shortcut matches the regression value") {
  const auto ens = heat_ensemble(300);
  auto q = [](const PathView& g, double, const NoiseVector&, const ControlPoint&) { return g.terminal()[1]; };
  auto spec = spec_of(q, phi_sum);
  const auto reg = solve_regression(ens, spec, path_feature_basis(2));
  spec.driver_yz_free = true;
  const auto fast = solve_value(ens, spec, path_feature_basis(2));
  CHECK(fast.value == doctest::Approx(reg.value).epsilon(1e-10));
}

TEST_CASE("comparison") {
  const auto ens = heat_ensemble(400);
  const Basis basis = path_feature_basis(2);
  auto q = [](const PathView&, double y, const NoiseVector&, const ControlPoint&) { return -0.3 * y; };
  const auto base = spec_of(q, phi_sum);
  CHECK(comparison_check(ens, base, base, basis).passed);
  const auto shifted = spec_of(zero_q, [](const PathView& g) { return g.terminal().sum() + 1.0; });
  const auto plain = spec_of(zero_q, phi_sum);
  const auto rep = comparison_check(ens, shifted, plain, basis);
  CHECK(rep.passed);
  CHECK(rep.mean_gap.front() == doctest::Approx(1.0));
  auto q1 = [](const PathView&, double, const NoiseVector&, const ControlPoint&) { return 1.0; };
  const auto rep2 = comparison_check(ens, spec_of(q1, phi_sum), plain, basis);
  CHECK(rep2.mean_gap.front() == doctest::Approx(1.0));
  CHECK_THROWS_AS(comparison_check(ens, plain, shifted, basis), InputError);
}

TEST_CASE("a priori bound is stable under refinement") {
  auto ratio = [](std::size_t M, double dt) {
    const auto ens = heat_ensemble(M, dt, 17);
    const auto sol = solve_regression(ens, spec_of(zero_q, phi_sum), path_feature_basis(2));
    double lhs = 0.0, rhs = 0.0;
    for (Eigen::Index i = 0; i < sol.Y.rows(); ++i) {
      const double s = sol.Y.row(i).cwiseAbs().maxCoeff();
      lhs += s * s;
      const double p = sol.Y(i, sol.Y.cols() - 1);
      rhs += p * p;
    }
    return lhs / (static_cast<double>(sol.Y.rows()) + rhs);
  };
  const double a = ratio(400, 1.0 / 16), b = ratio(800, 1.0 / 32);
  CHECK(std::abs(a - b) <= 0.2 * a);
}
