#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/hilbert.hpp"
#include "pdhjb/rng.hpp"

using namespace pdhjb;

TEST_CASE("semigroup examples") {
  const auto op = SpectralOperator::diagonal({-1.0, -4.0});
  const HVector x = HVector::Ones(2);
  CHECK((op.semigroup_apply(0.0, x) - x).norm() == 0.0);
  const auto scalar = SpectralOperator::diagonal({-1.0});
  CHECK(scalar.semigroup_apply(1.0, HVector::Constant(1, 2.0))[0] == doctest::Approx(2.0 * std::exp(-1.0)));
  double prev = x.norm();
  for (double t : {0.5, 1.0, 2.0, 8.0, 40.0}) {
    const double n = op.semigroup_apply(t, x).norm();
    CHECK(n <= prev);
    prev = n;
  }
  CHECK(prev < 1e-15);
  CHECK_THROWS_AS(op.semigroup_apply(-1.0, x), InputError);
  CHECK_THROWS_AS(op.semigroup_apply(1.0, HVector::Ones(3)), InputError);
}

TEST_CASE("yosida examples") {
  const auto op = SpectralOperator::diagonal({-1.0});
  CHECK(op.yosida_apply(1.0, HVector::Ones(1))[0] == doctest::Approx(-0.5));
  CHECK(SpectralOperator::diagonal({0.0}).yosida_apply(7.0, HVector::Ones(1))[0] == 0.0);
  const auto op2 = SpectralOperator::diagonal({-2.0});
  double prev = 1e300;
  for (double mu : {1.0, 10.0, 100.0, 1e3, 1e6}) {
    const double gap = std::abs(op2.yosida_apply(mu, HVector::Ones(1))[0] + 2.0);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-5);
  CHECK_THROWS_AS(op.yosida_apply(0.0, HVector::Ones(1)), InputError);
}

TEST_CASE("projections and inner products") {
  HVector x(2);
  x << 3.0, 5.0;
  CHECK(project(x, 1, ProjectionPart::head) == HVector((HVector(2) << 3.0, 0.0).finished()));
  CHECK(project(x, 1, ProjectionPart::tail) == HVector((HVector(2) << 0.0, 5.0).finished()));
  CHECK(project(x, 2, ProjectionPart::head) == x);
  CHECK_THROWS_AS(project(x, 3, ProjectionPart::head), InputError);
  CHECK(inner(HVector::Unit(2, 0), HVector::Unit(2, 1)) == 0.0);
  CHECK(norm((HVector(2) << 3.0, 4.0).finished()) == 5.0);
  CHECK_THROWS_AS(inner(x, HVector::Ones(3)), InputError);
}

TEST_CASE("operator properties on random inputs") {
  KeyedStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const auto op = trial % 2 ? SpectralOperator::dirichlet_laplacian(n, rng.uniform(0.01, 1.0))
                              : SpectralOperator::wave(n, rng.uniform(0.01, 1.0));
    HVector x(op.dim());
    for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const double s = rng.uniform(0.0, 2.0), t = rng.uniform(0.0, 2.0);
    CHECK(op.semigroup_apply(t, x).norm() <= x.norm() * (1.0 + 1e-14));
    const HVector two = op.semigroup_apply(s, op.semigroup_apply(t, x));
    CHECK((two - op.semigroup_apply(s + t, x)).norm() <= 1e-13 * (1.0 + x.norm()));
    const double mu = rng.uniform(0.1, 100.0);
    CHECK(inner(op.yosida_apply(mu, x), x) <= 1e-13 * x.squaredNorm());
    CHECK((op.adjoint_apply(x) - op.matrix().transpose() * x).norm() <= 1e-12 * (1.0 + x.norm()));
    CHECK((SemigroupStep(op, t).apply(x) - op.semigroup_matrix(t) * x).norm() <= 1e-12 * (1.0 + x.norm()));
  }
}

TEST_CASE("dirichlet preset") {
  const auto op = SpectralOperator::dirichlet_laplacian(3);
  const auto ev = op.eigenvalues();
  REQUIRE(ev.size() == 3);
  CHECK(ev[2] == doctest::Approx(-9.0 * M_PI * M_PI));
  CHECK(op.is_diagonal());
  CHECK_FALSE(SpectralOperator::wave(2).is_diagonal());
  CHECK(SpectralOperator::wave(2).dim() == 4);
  CHECK_THROWS_AS(SpectralOperator::diagonal({0.5}), InputError);
}
