#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/viscosity.hpp"
#include "test_support.hpp"

using namespace pdhjb;
using namespace pdhjb::testing;

namespace {

HamiltonianSpec scalar_spec() {
  HamiltonianSpec s;
  s.op = SpectralOperator::zero(1);
  s.problem = linear_problem(1, 0.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("hamiltonian examples") {
  HamiltonianSpec s = scalar_spec();
  const auto gamma = DiscretePath::constant(HVector::Zero(1), {0.0, 0.5});
  for (double p : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
    for (double l : {-1.0, 0.0, 2.0}) {
      const double h = hamiltonian(s, gamma, 0.0, HVector::Constant(1, p), HMatrix::Constant(1, 1, l));
      CHECK(h == doctest::Approx(std::max(std::abs(p) - 0.5, 0.0) + 0.5 * l));
    }
  }
  HamiltonianSpec z = s;
  z.problem.drift = [](const PathView& g, const ControlPoint&) -> HVector { return HVector::Zero(g.dim()); };
  z.problem.diffusion = [](const PathView& g, const ControlPoint&) -> HMatrix { return HMatrix::Zero(g.dim(), 1); };
  z.problem.running = [](const PathView&, double, const NoiseVector&, const ControlPoint&) { return 0.0; };
  CHECK(hamiltonian(z, gamma, 3.0, HVector::Constant(1, 2.0), HMatrix::Constant(1, 1, 5.0)) == 0.0);
}

TEST_CASE("hamiltonian monotone in r and degenerate elliptic") {
  HamiltonianSpec s = scalar_spec();
  s.problem.running = [](const PathView&, double y, const NoiseVector& z, const ControlPoint& u) {
    return -0.5 * u[0] * u[0] - 0.7 * y + 0.1 * z[0];
  };
  KeyedStream rng(3);
  for (int k = 0; k < 200; ++k) {
    const auto gamma = random_path(rng, 1, 3, 0.5, 2.0);
    const HVector p = HVector::Constant(1, rng.normal());
    const HMatrix l = HMatrix::Constant(1, 1, rng.normal());
    const double r1 = rng.normal(), r2 = r1 + rng.uniform(0.0, 2.0);
    CHECK(hamiltonian(s, gamma, r1, p, l) >= hamiltonian(s, gamma, r2, p, l));
    CHECK(hamiltonian(s, gamma, r1, p, l + HMatrix::Constant(1, 1, rng.uniform(0.0, 1.0))) >=
          hamiltonian(s, gamma, r1, p, l));
  }
}

TEST_CASE("classical residual") {
  HamiltonianSpec s = scalar_spec();
  // Single control u = 0, q = 0: heat equation with solution v = x^2 + (T - t).
  s.problem.control_space = {ControlPoint::Constant(1, 0.0)};
  s.problem.running = [](const PathView&, double, const NoiseVector&, const ControlPoint&) { return 0.0; };
  s.problem.terminal = [](const PathView& g) { return g.terminal().squaredNorm(); };
  JetFunctional heat = [](const PathView& g) {
    FunctionalJet j;
    const double x = g.terminal()[0];
    j.value = x * x + (1.0 - g.horizon());
    j.dt = -1.0;
    j.dx = HVector::Constant(1, 2.0 * x);
    j.dxx = HMatrix::Constant(1, 1, 2.0);
    j.a_star_dx = HVector::Zero(1);
    return j;
  };
  const auto mid = DiscretePath::constant(HVector::Constant(1, 0.7), {0.0, 0.5});
  CHECK(std::abs(classical_residual(s, heat, mid)) < 1e-14);
  const auto end = DiscretePath::constant(HVector::Constant(1, 0.7), {0.0, 1.0});
  CHECK(std::abs(classical_residual(s, heat, end)) < 1e-14);
  JetFunctional frozen = [](const PathView& g) {
    FunctionalJet j;
    const double x = g.terminal()[0];
    j.value = x * x;
    j.dx = HVector::Constant(1, 2.0 * x);
    j.dxx = HMatrix::Constant(1, 1, 2.0);
    j.a_star_dx = HVector::Zero(1);
    return j;
  };
  CHECK(classical_residual(s, frozen, mid) == doctest::Approx(1.0));
  JetFunctional missing = [](const PathView&) { return FunctionalJet{}; };
  CHECK_THROWS_AS(classical_residual(s, missing, mid), InputError);
}

TEST_CASE("gauge jets match finite differences") {
  KeyedStream rng(6);
  const auto op = SpectralOperator::dirichlet_laplacian(2, 0.1);
  const auto anchor = random_path(rng, 2, 4, 0.3, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto eta = random_path(rng, 2, 8, 0.6, 1.0);
    std::vector<GaugeTerm> terms(4);
    terms[0].kind = GaugeTermKind::anchored_upsilon;
    terms[0].weight = 0.5;
    terms[0].anchor = anchor;
    terms[1].kind = GaugeTermKind::terminal_distance;
    terms[1].weight = 0.7;
    terms[1].anchor = anchor;
    terms[1].power = 2;
    terms[2].kind = GaugeTermKind::weighted_upsilon;
    terms[2].weight = 0.2;
    terms[2].slope = 0.3;
    terms[2].reference_time = 0.1;
    terms[3].kind = GaugeTermKind::time_square;
    terms[3].weight = 2.0;
    terms[3].reference_time = 0.3;
    for (const GaugeTerm& term : terms) {
      const GaugeJet j = gauge_jet(op, term, eta);
      PathFunctional f{[&](const PathView& v) { return gauge_jet(op, term, v.to_path()).value; }};
      const auto d = dupire_derivatives(f, eta);
      CHECK((d.dx - j.dx).norm() <= 1e-5 * std::max(1.0, j.dx.norm()));
      CHECK((d.dxx - j.dxx).norm() <= 1e-4 * std::max(1.0, j.dxx.norm()));
    }
  }
}

TEST_CASE("tangency on a classical solution") {
  HamiltonianSpec s = scalar_spec();
  s.problem.control_space = {ControlPoint::Constant(1, 0.0)};
  s.problem.running = [](const PathView&, double, const NoiseVector&, const ControlPoint&) { return 0.0; };
  auto v = [](double t, double x) { return x * x + (1.0 - t); };
  std::function<double(const DiscretePath&)> w = [&](const DiscretePath& p) { return v(p.horizon(), p.terminal()[0]); };
  const double t0 = 0.5, x0 = 0.4, kappa = 0.05;
  // Taylor expansion of v at (t0, x0) plus a strictly convex margin touches from above.
  TestFunctional test;
  test.smooth = [=](const PathView& g) {
    const double ds = g.horizon() - t0, dx = g.terminal()[0] - x0;
    FunctionalJet j;
    j.value = v(t0, x0) - ds + 2.0 * x0 * dx + dx * dx + kappa * (dx * dx + ds);
    j.dt = -1.0 + kappa;
    j.dx = HVector::Constant(1, 2.0 * x0 + 2.0 * (1.0 + kappa) * dx);
    j.dxx = HMatrix::Constant(1, 1, 2.0 * (1.0 + kappa));
    j.a_star_dx = HVector::Zero(1);
    return j;
  };
  std::vector<DiscretePath> family;
  for (double t : {0.5, 0.55, 0.6})
    for (double x = -0.6; x <= 1.41; x += 0.1) family.push_back(DiscretePath::constant(HVector::Constant(1, x), {0.0, t}));
  const std::size_t cand = family_extremum(s.op, w, test, family, ViscosityKind::sub, t0);
  CHECK(family[cand].horizon() == doctest::Approx(t0));
  CHECK(family[cand].terminal()[0] == doctest::Approx(x0));
  const auto rep = tangency_check(s, w, test, cand, family, ViscosityKind::sub, 1e-10);
  CHECK(rep.passed);
  CHECK(rep.slack == doctest::Approx(2.0 * kappa));
  CHECK_THROWS_AS(tangency_check(s, w, test, (cand + 3) % family.size(), family, ViscosityKind::sub, 1e-10),
                  PreconditionError);
  // A huge gauge weight moves the extremum elsewhere.
  TestFunctional heavy = test;
  GaugeTerm g;
  g.kind = GaugeTermKind::terminal_distance;
  g.weight = 1e3;
  g.anchor = DiscretePath::constant(HVector::Constant(1, 1.4), {0.0, 0.5});
  heavy.gauge.push_back(g);
  CHECK_THROWS_AS(tangency_check(s, w, heavy, cand, family, ViscosityKind::sub, 1e-10), PreconditionError);
}
