#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pdhjb/parallel.hpp"
#include "pdhjb/rng.hpp"
#include "pdhjb/stats.hpp"

using namespace pdhjb;

TEST_CASE("philox known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("keyed normals are reproducible and standard") {
  double a[3], b[3];
  keyed_normals(7, 1, 42, 9, a, 3);
  keyed_normals(7, 1, 42, 9, b, 3);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  keyed_normals(7, 2, 42, 9, b, 3);
  CHECK(a[0] != b[0]);
  std::vector<double> xs, sq;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    double z[2];
    keyed_normals(1, 0, i, 0, z, 2);
    xs.push_back(z[0]);
    xs.push_back(z[1]);
  }
  for (double x : xs) sq.push_back(x * x);
  const auto m = mean_stderr(xs);
  const auto v = mean_stderr(sq);
  CHECK(std::abs(m.mean) < 4.0 * m.std_error);
  CHECK(std::abs(v.mean - 1.0) < 4.0 * v.std_error);
}

TEST_CASE("parallel_for is order independent") {
  std::vector<double> one(1000), many(1000);
  set_worker_count(1);
  parallel_for(one.size(), [&](std::size_t i) { double z; keyed_normals(3, 0, i, 0, &z, 1); one[i] = z; });
  set_worker_count(4);
  parallel_for(many.size(), [&](std::size_t i) { double z; keyed_normals(3, 0, i, 0, &z, 1); many[i] = z; });
  set_worker_count(0);
  CHECK(one == many);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) { if (i == 3) throw std::runtime_error("x"); }));
}

TEST_CASE("stats helpers") {
  const auto ms = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == 2.5);
  CHECK(ms.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const auto fit = fit_loglog({1.0, 2.0, 4.0}, {3.0, 3.0 * std::sqrt(2.0), 6.0});
  CHECK(fit.slope == doctest::Approx(0.5));
  KeyedStream s(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
