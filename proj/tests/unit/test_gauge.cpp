#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/gauge.hpp"
#include "test_support.hpp"

using namespace pdhjb;
using pdhjb::testing::random_path;

namespace {
DiscretePath zero_endpoint(double peak, int dim) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim, 3);
  v(0, 1) = peak;
  return DiscretePath({0.0, 0.5, 1.0}, v);
}
}  // namespace

TEST_CASE("S_m and Upsilon examples") {
  const GaugeParams g{3, 3.0};
  const auto c = DiscretePath::constant(HVector::Constant(2, 1.5), {0.0, 1.0});
  CHECK(eval_Sm(g, c) == 0.0);
  CHECK(eval_upsilon(g, c) == doctest::Approx(3.0 * std::pow(c.terminal().norm(), 6)));
  const auto z = DiscretePath::constant(HVector::Zero(2), {0.0, 1.0});
  CHECK(eval_Sm(g, z) == 0.0);
  CHECK(eval_upsilon(g, z) == 0.0);
  CHECK(grad_upsilon(g, z).norm() == 0.0);
  CHECK(hess_upsilon(g, z).norm() == 0.0);
  CHECK(eval_Sm(g, zero_endpoint(2.0, 1)) == doctest::Approx(64.0));
  CHECK(eval_upsilon(g, zero_endpoint(2.0, 1)) == doctest::Approx(64.0));
  CHECK_THROWS_AS(hess_upsilon(GaugeParams{1, 3.0}, c), UnsupportedParameter);
}

TEST_CASE("terminal strict max branch of the gradient") {
  Eigen::MatrixXd v(1, 3);
  v << 0.5, -1.0, 2.0;
  const DiscretePath p({0.0, 0.5, 1.0}, v);
  for (GaugeParams g : {GaugeParams{2, 3.0}, GaugeParams{3, 5.0}}) {
    const double x = 2.0;
    CHECK(grad_upsilon(g, p)[0] == doctest::Approx(2.0 * g.m * g.M * std::pow(x, 2 * g.m - 1)));
  }
}

TEST_CASE("Upsilon_eps examples and bounds") {
  const EpsGaugeParams e{1.0};
  const auto c = DiscretePath::constant(HVector::Constant(1, 2.0), {0.0, 1.0});
  CHECK(eval_upsilon_eps(e, c) == doctest::Approx(12.0));
  CHECK(eval_upsilon_eps(e, zero_endpoint(1.0, 1)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(eval_upsilon_eps(EpsGaugeParams{0.0}, c), InputError);
}

TEST_CASE("gauge invariants on random paths") {
  KeyedStream rng(21);
  const auto op = SpectralOperator::dirichlet_laplacian(3, 0.1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_path(rng, 3, 6, 1.0);
    const auto q = random_path(rng, 3, 6, 1.0);
    const double R = sup_norm(p), x = p.terminal().norm();
    for (GaugeParams g : {GaugeParams{2, 3.0}, GaugeParams{3, 3.0}, GaugeParams{3, 5.0}}) {
      const double u = eval_upsilon(g, p);
      const double lo = std::pow(R, 2 * g.m) + (g.M - 3.0) * std::pow(x, 2 * g.m);
      const double hi = 3.0 * std::pow(R, 2 * g.m) + (g.M - 3.0) * std::pow(x, 2 * g.m);
      CHECK(u >= lo * (1.0 - 1e-12));
      CHECK(u <= hi * (1.0 + 1e-12));
      CHECK(grad_upsilon(g, p).norm() <= upsilon_grad_bound(g, x) * (1.0 + 1e-12));
      CHECK(hess_upsilon(g, p).norm() <= upsilon_hess_bound(g, x) * (1.0 + 1e-12));
      CHECK(check_subadditivity(g, p, q));
      // Bar-Upsilon is a gauge: zero on the diagonal, and controls d_infty.
      CHECK(eval_bar_upsilon(op, g, p, p) == 0.0);
      const double delta = eval_bar_upsilon(op, g, p, q);
      CHECK(metric_d_infty(op, p, q) <= std::sqrt(delta) + std::pow(delta, 1.0 / (2 * g.m)) + 1e-12);
    }
    CHECK(check_subadditivity(GaugeParams{3, 3.0}, p, p));
    const EpsGaugeParams e{rng.uniform(0.05, 2.0)};
    const double ue = eval_upsilon_eps(e, p);
    CHECK(ue >= std::max(R * R - e.epsilon / 2.0, 0.0) - 1e-12);
    CHECK(ue <= 3.0 * R * R * (1.0 + 1e-12));
    CHECK(grad_upsilon_eps(e, p).norm() <= 6.0 * x + 1e-12);
    CHECK(hess_upsilon_eps(e, p).norm() <= 30.0 + 1e-12);
  }
}

TEST_CASE("anchored difference is nonincreasing under semigroup extension") {
  KeyedStream rng(4);
  const auto op = SpectralOperator::dirichlet_laplacian(2, 0.1);
  const GaugeParams g{3, 3.0};
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_path(rng, 2, 5, 0.5);
    const auto q = random_path(rng, 2, 5, 0.5);
    const DiscretePath diff(p.grid(), p.values() - q.values());
    double prev = eval_upsilon(g, diff);
    for (double s : {0.6, 0.8, 1.0}) {
      const double v = eval_upsilon(g, extend_semigroup(op, diff, s, 4));
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
    }
    // A = 0: flat extension leaves Upsilon unchanged.
    CHECK(eval_upsilon(g, extend_flat(diff, 1.0)) == doctest::Approx(eval_upsilon(g, diff)));
  }
}

TEST_CASE("closed-form derivatives match finite differences") {
  KeyedStream rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_path(rng, 2, 5, 1.0, 1.0);
    // Keep away from the tie |x| = running max.
    if (std::abs(p.terminal().norm() - sup_norm(p.prefix(p.size() - 1))) < 0.05) continue;
    for (GaugeParams g : {GaugeParams{2, 3.0}, GaugeParams{3, 5.0}}) {
      PathFunctional f{[g](const PathView& v) { return eval_upsilon(g, v); }};
      const auto d = dupire_derivatives(f, p);
      const HVector gx = grad_upsilon(g, p);
      const HMatrix hx = hess_upsilon(g, p);
      CHECK((d.dx - gx).norm() <= 1e-5 * std::max(1.0, gx.norm()));
      CHECK((d.dxx - hx).norm() <= 1e-5 * std::max(1.0, hx.norm()));
      CHECK(std::abs(d.dt) < 1e-12);
    }
  }
}

TEST_CASE("g convexity") {
  for (int m : {1, 2, 3}) {
    for (double M : {3.0, 5.0}) {
      const GaugeParams g{m, M};
      CHECK(check_g_convexity(g, 1000) >= -1e-12);
      CHECK(std::isfinite(g_convexity_second_derivative(g, 0.0)));
      CHECK(g_convexity_value(g, 1.0) == doctest::Approx(std::pow(M, 1.0 / (2 * m))));
      // Cross-check the closed form against a second difference in the interior.
      for (double x : {0.3, 0.55, 0.8}) {
        const double h = 1e-4;
        const double fd = (g_convexity_value(g, x + h) - 2.0 * g_convexity_value(g, x) +
                           g_convexity_value(g, x - h)) / (h * h);
        CHECK(g_convexity_second_derivative(g, x) == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
  CHECK_THROWS_AS(check_g_convexity(GaugeParams{3, 2.0}, 10), InputError);
}
