#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/fsee.hpp"
#include "pdhjb/parallel.hpp"
#include "pdhjb/stats.hpp"
#include "test_support.hpp"

using namespace pdhjb;
using namespace pdhjb::testing;

TEST_CASE("deterministic flow with F = G = 0") {
  auto prob = linear_problem(2, 0.0, 0.0);
  prob.drift = [](const PathView& g, const ControlPoint&) -> HVector { return HVector::Zero(g.dim()); };
  const auto op = SpectralOperator::diagonal({-1.0, -3.0});
  const auto init = DiscretePath::constant(HVector::Ones(2), {0.0, 0.25});
  const NoiseSpec noise{2, 1, 1.0 / 32.0};
  const auto ens = simulate_mild(op, prob, init, constant_control(0.0), noise, 4);
  for (std::size_t k = ens.start; k < ens.points(); ++k) {
    const HVector expect = op.semigroup_apply(ens.grid[k] - 0.25, HVector::Ones(2));
    CHECK((ens.values[3].col(k) - expect).norm() < 1e-14);
  }
  CHECK(ens.values[0].col(0) == init.value(0));
}

TEST_CASE("Brownian increments have the right variance") {
  auto prob = linear_problem(1, 0.0, 1.0);
  prob.drift = [](const PathView& g, const ControlPoint&) -> HVector { return HVector::Zero(g.dim()); };
  const auto op = SpectralOperator::zero(1);
  const auto init = DiscretePath::constant(HVector::Zero(1), {0.0, 0.5});
  const auto ens = simulate_mild(op, prob, init, constant_control(0.0), {1, 2, 1.0 / 16.0}, 8000);
  std::vector<double> sq;
  for (std::size_t i = 0; i < ens.samples(); ++i) {
    const double d = ens.values[i](0, ens.points() - 1);
    sq.push_back(d * d);
  }
  const auto ms = mean_stderr(sq);
  CHECK(std::abs(ms.mean - 0.5) <= 3.0 * ms.std_error);
}

TEST_CASE("simulation is path dependent and thread-count invariant") {
  ControlProblem prob = linear_problem(1, 0.0, 0.3);
  std::vector<double> seen;
  prob.drift = [](const PathView& g, const ControlPoint&) -> HVector {
    return HVector::Constant(1, g.sup_norm());
  };
  const auto op = SpectralOperator::dirichlet_laplacian(1, 0.1);
  const auto init = DiscretePath::constant(HVector::Constant(1, 0.2), {0.0, 0.1, 0.2});
  const NoiseSpec noise{1, 5, 1.0 / 20.0};
  const auto ens = simulate_mild(op, prob, init, constant_control(0.0), noise, 50);
  for (std::size_t i = 0; i < ens.samples(); ++i) {
    for (std::size_t k = 0; k < ens.points(); ++k) {
      CHECK(ens.running_sup[i][k] == sup_norm(ens.path(i).prefix(k + 1)));
    }
  }
  set_worker_count(1);
  const auto one = simulate_mild(op, prob, init, constant_control(0.0), noise, 50);
  set_worker_count(3);
  const auto three = simulate_mild(op, prob, init, constant_control(0.0), noise, 50);
  set_worker_count(0);
  for (std::size_t i = 0; i < 50; ++i) CHECK(one.values[i] == three.values[i]);
}

TEST_CASE("divergence and grid errors") {
  ControlProblem prob = linear_problem(1, 0.0, 0.0);
  prob.drift = [](const PathView& g, const ControlPoint&) -> HVector { return g.terminal() * 1e200; };
  const auto op = SpectralOperator::zero(1);
  const auto init = DiscretePath::constant(HVector::Ones(1), {0.0, 0.5});
  CHECK_THROWS_AS(simulate_mild(op, prob, init, constant_control(0.0), {1, 0, 0.125}, 2), SimulationDiverged);
  CHECK_THROWS_AS(simulate_mild(op, prob, init, constant_control(0.0), {1, 0, 0.3}, 2), InputError);
}

TEST_CASE("deterministic first-order convergence") {
  const auto prob = linear_problem(1, 1.0, 0.0);
  const auto op = SpectralOperator::diagonal({-0.5});
  const auto init = DiscretePath::constant(HVector::Ones(1), {0.0});
  auto terminal = [&](double dt) {
    return simulate_mild(op, prob, init, constant_control(1.0), {1, 0, dt}, 1).values[0](0, Eigen::last);
  };
  const double a = terminal(1.0 / 32), b = terminal(1.0 / 64), c = terminal(1.0 / 128);
  const double order = std::log2(std::abs(a - b) / std::abs(b - c));
  CHECK(order >= 0.9);
}

TEST_CASE("yosida approximation") {
  const auto prob = linear_problem(2, 0.5, 0.4);
  const auto op = SpectralOperator::dirichlet_laplacian(2, 0.1);
  const auto init = DiscretePath::constant(HVector::Constant(2, 0.5), {0.0});
  const NoiseSpec noise{2, 3, 1.0 / 64};
  const auto gaps = yosida_convergence(op, prob, init, constant_control(1.0), noise, 200, {10.0, 100.0, 1000.0});
  CHECK(gaps[1].mean_sq_sup_gap < gaps[0].mean_sq_sup_gap);
  CHECK(gaps[2].mean_sq_sup_gap < gaps[1].mean_sq_sup_gap);
  CHECK(gaps[2].mean_sq_sup_gap < 1e-2 * gaps[0].mean_sq_sup_gap);
  const auto zero = SpectralOperator::zero(2);
  const auto a = simulate_mild(zero, prob, init, constant_control(1.0), noise, 5);
  const auto b = simulate_yosida(zero, 10.0, prob, init, constant_control(1.0), noise, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("Ito inequality checks") {
  const auto op = SpectralOperator::dirichlet_laplacian(2, 0.1);
  const auto init = DiscretePath::constant(HVector::Constant(2, 0.5), {0.0, 0.25});
  const NoiseSpec noise{2, 9, 1.0 / 64};
  ControlProblem still = linear_problem(2, 0.0, 0.0);
  still.drift = [](const PathView& g, const ControlPoint&) -> HVector { return HVector::Zero(g.dim()); };
  const auto flat = simulate_mild(op, still, init, constant_control(0.0), noise, 10);
  const auto r0 = ito_inequality_check(op, still, init, init, {}, flat);
  CHECK(std::abs(r0.mean_gap) == 0.0);
  CHECK(r0.max_gap == 0.0);

  const auto prob = linear_problem(2, 0.5, 0.4);
  const auto ens = simulate_mild(op, prob, init, constant_control(1.0), noise, 2000);
  const auto anchor = DiscretePath::constant(HVector::Constant(2, 0.2), {0.0, 0.25});
  for (ItoGauge kind : {ItoGauge::upsilon, ItoGauge::upsilon_eps, ItoGauge::terminal_power}) {
    ItoCheckParams params;
    params.kind = kind;
    const auto rep = ito_inequality_check(op, prob, init, anchor, params, ens);
    CHECK(rep.passed);
  }
  ItoCheckParams bad;
  bad.gauge = {1, 3.0};
  CHECK_THROWS_AS(ito_inequality_check(op, prob, init, anchor, bad, ens), UnsupportedParameter);
}

TEST_CASE("assumption spot checks") {
  const auto prob = linear_problem(1, 0.5, 0.4);
  KeyedStream rng(2);
  std::vector<DiscretePath> paths;
  for (int i = 0; i < 40; ++i) paths.push_back(random_path(rng, 1, 4, 1.0, 2.0));
  const auto rep = spot_check_assumptions(prob, paths);
  CHECK(rep.passed);
}
