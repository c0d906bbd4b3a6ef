#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/markovian.hpp"

using namespace pdhjb;

namespace {

MarkovianSpec transport_spec(double rate) {
  MarkovianSpec s;
  s.dim = 1;
  s.rates = {rate};
  s.drift = [](double, const HVector& x, const ControlPoint&) -> HVector { return HVector::Zero(x.size()); };
  s.diffusion = [](double, const HVector& x, const ControlPoint&) -> HMatrix { return HMatrix::Zero(x.size(), 1); };
  s.running = [](double, const HVector&, double, const NoiseVector&, const ControlPoint&) { return 0.0; };
  s.terminal = [](const HVector& x) { return std::sin(x[0]); };
  s.controls = {ControlPoint::Zero(1)};
  s.time_homogeneous = true;
  s.running_rz_free = true;
  return s;
}

MarkovianSpec control_spec() {
  MarkovianSpec s;
  s.dim = 1;
  s.rates = {0.0};
  s.drift = [](double, const HVector&, const ControlPoint& u) -> HVector { return u; };
  s.diffusion = [](double, const HVector&, const ControlPoint&) -> HMatrix { return HMatrix::Identity(1, 1); };
  s.running = [](double, const HVector&, double, const NoiseVector&, const ControlPoint& u) { return -0.5 * u[0] * u[0]; };
  s.terminal = [](const HVector& x) { return x[0] + 0.2 * std::sin(x[0]); };
  for (double u : {-1.0, 0.0, 1.0}) s.controls.push_back(ControlPoint::Constant(1, u));
  s.time_homogeneous = true;
  s.running_rz_free = true;
  return s;
}

double exact(double t, double x) {
  const double tau = 1.0 - t;
  return x + tau / 2.0 + 0.2 * std::exp(-tau / 2.0) * std::sin(x + tau);
}

}  // namespace

TEST_CASE("gauss hermite integrates polynomials") {
  const auto q = gauss_hermite(10);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    m0 += q.weights[k];
    m2 += q.weights[k] * std::pow(q.nodes[k], 2);
    m4 += q.weights[k] * std::pow(q.nodes[k], 4);
  }
  CHECK(m0 == doctest::Approx(1.0));
  CHECK(m2 == doctest::Approx(1.0));
  CHECK(m4 == doctest::Approx(3.0));
}

TEST_CASE("hopf-cole oracle") {
  CHECK(hopf_cole_oracle([](double) { return 2.0; }, 0.0, 0.3, 1.0) == doctest::Approx(2.0));
  CHECK(hopf_cole_oracle([](double x) { return 1.5 * x; }, 0.2, 0.3, 1.0) == doctest::Approx(0.45 + 1.125 * 0.8));
  CHECK(hopf_cole_oracle([](double x) { return std::sin(x); }, 1.0, 0.3, 1.0) == std::sin(0.3));
}

TEST_CASE("pure transport by the semigroup") {
  const auto s = transport_spec(-0.5);
  FdGrid grid{{-4.0}, {4.0}, 0.05, 0.0};
  FdOptions opt;
  opt.output_times = {0.0};
  const auto sol = markovian_fd_solve(s, grid, opt);
  for (double x : {-1.0, 0.0, 0.7}) {
    CHECK(sol.value_at(0, HVector::Constant(1, x)) == doctest::Approx(std::sin(std::exp(-0.5) * x)).epsilon(2e-2));
  }
}

TEST_CASE("controlled benchmark: FD, DP and the analytic value agree") {
  const auto s = control_spec();
  FdGrid grid{{-6.0}, {6.0}, 0.02, 0.0};
  FdOptions opt;
  opt.output_times = {0.0, 0.5};
  for (double x : {-0.5, 0.0, 0.5}) opt.probes.push_back(HVector::Constant(1, x));
  const auto fd = markovian_fd_solve(s, grid, opt);
  CHECK(fd.refinement_estimate > 0.0);
  for (double x : {-0.5, 0.0, 0.5}) {
    const double err = std::abs(fd.value_at(0, HVector::Constant(1, x)) - exact(0.0, x));
    CHECK(err <= 2.0 * fd.refinement_estimate);
  }
  DpOptions dopt;
  dopt.output_times = {0.0};
  const auto dp = discrete_control_dp(s, -6.0, 6.0, 0.02, dopt);
  for (double x : {-0.5, 0.0, 0.5}) CHECK(dp.value_at(0, x) == doctest::Approx(exact(0.0, x)).epsilon(1e-3));
  FdGrid bad = grid;
  bad.tau = 1.0;
  CHECK_THROWS_AS(markovian_fd_solve(s, bad, opt), InputError);
}

TEST_CASE("continuous relaxation against hopf-cole, first order in h") {
  auto s = control_spec();
  auto phi = [](double x) { return x + 0.2 * std::sin(x); };
  FdOptions opt;
  opt.hamiltonian = quadratic_relaxation_hamiltonian();
  opt.drift_bound = 2.0;
  opt.refinement = false;
  opt.output_times = {0.0};
  opt.boundary = [&](double t, const HVector& x) { return hopf_cole_oracle(phi, t, x[0], 1.0); };
  std::vector<double> errs;
  for (double h : {0.08, 0.04, 0.02}) {
    const auto sol = markovian_fd_solve(s, FdGrid{{-6.0}, {6.0}, h, 0.0}, opt);
    errs.push_back(std::abs(sol.value_at(0, HVector::Zero(1)) - hopf_cole_oracle(phi, 0.0, 0.0, 1.0)));
  }
  CHECK(errs[2] < errs[1]);
  CHECK(errs[1] < errs[0]);
  CHECK(std::log2(errs[1] / errs[2]) > 0.7);
}

TEST_CASE("unsupported inputs") {
  auto s = control_spec();
  s.dim = 3;
  s.rates = {0, 0, 0};
  CHECK_THROWS_AS(markovian_fd_solve(s, FdGrid{{-1, -1, -1}, {1, 1, 1}, 0.5, 0}), UnsupportedParameter);
}
