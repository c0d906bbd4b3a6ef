#include "doctest.h"

#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/variational.hpp"

using namespace pdhjb;

namespace {

FamilyFunctional terminal_bump() {
  return [](const FamilyMember& m) {
    const HVector x = m.components.front().terminal();
    return -x.squaredNorm() + 0.3 * m.time();
  };
}

std::size_t argmax(const FamilyFunctional& f, const CandidateFamily& fam) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < fam.members.size(); ++j)
    if (f(fam.members[j]) > f(fam.members[best])) best = j;
  return best;
}

}  // namespace

TEST_CASE("single member family") {
  CandidateFamily fam = random_family(1, 1, 2, 1, 1.0);
  const auto res = borwein_preiss(terminal_bump(), fam, 0.1, 0);
  CHECK(res.point == 0);
  CHECK(res.anchors.size() == 1);
  CHECK(verify_certificate(res, terminal_bump(), fam));
}

TEST_CASE("unique maximizer with tiny epsilon") {
  CandidateFamily fam = random_family(2, 60, 2, 1, 1.0);
  const auto f = terminal_bump();
  const std::size_t best = argmax(f, fam);
  const auto res = borwein_preiss(f, fam, 1e-9, best);
  CHECK(res.point == best);
  CHECK(res.iterations == 1);
  CHECK_THROWS_AS(borwein_preiss(f, fam, 1e-9, (best + 1) % 60), InputError);
}

TEST_CASE("certificates, monotone chain and idempotence") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    CandidateFamily fam = random_family(seed, 120, 2, 1, 1.0);
    const auto f = terminal_bump();
    std::vector<double> vals;
    for (const auto& m : fam.members) vals.push_back(f(m));
    const double sup = f(fam.members[argmax(f, fam)]);
    const double eps = 0.5;
    std::size_t start = 0;
    for (std::size_t j = 0; j < vals.size(); ++j)
      if (vals[j] >= sup - eps && vals[j] < sup - 0.5 * eps) start = j;
    for (auto sel : {AnchorSelection::exact, AnchorSelection::slack}) {
      const auto res = borwein_preiss(f, fam, eps, start, sel);
      CHECK(res.certificate.all());
      CHECK(verify_certificate(res, f, fam));
      CHECK(res.penalized_value >= vals[start] - 1e-12);
      // Gauge coherence: rho distances to the point sum below 2 eps.
      double total = 0.0;
      for (std::size_t a : res.anchors) total += rho(fam, fam.members[a], fam.members[res.point]);
      CHECK(total <= 2.0 * eps);
      // Idempotence on the perturbed functional over the forward cone {t >= t_hat}.
      CandidateFamily cone;
      cone.gauge = fam.gauge;
      cone.op = fam.op;
      std::size_t hat = 0;
      for (std::size_t j = 0; j < fam.members.size(); ++j) {
        if (fam.members[j].time() < fam.members[res.point].time()) continue;
        if (j == res.point) hat = cone.members.size();
        cone.members.push_back(fam.members[j]);
      }
      const auto again = borwein_preiss(perturbed_functional(res, f, fam), cone, eps, hat, sel);
      CHECK(again.point == hat);
      CHECK(again.penalized_value == res.penalized_value);
      const auto repeat = borwein_preiss(f, fam, eps, start, sel);
      CHECK(repeat.anchors == res.anchors);
      CHECK(repeat.penalized_value == res.penalized_value);
    }
  }
}

TEST_CASE("tampering breaks the certificate") {
  CandidateFamily fam = random_family(30, 150, 2, 1, 1.0);
  const auto f = terminal_bump();
  std::size_t start = 0;
  const double sup = f(fam.members[argmax(f, fam)]);
  for (std::size_t j = 0; j < fam.members.size(); ++j)
    if (f(fam.members[j]) >= sup - 1.0 && f(fam.members[j]) < sup - 0.3) start = j;
  const auto res = borwein_preiss(f, fam, 1.0, start, AnchorSelection::slack);
  REQUIRE(verify_certificate(res, f, fam));
  auto heavy = res;
  heavy.weights.front() = 1e9;
  heavy.anchors.front() = (res.point + 1) % fam.members.size();
  CHECK_FALSE(verify_certificate(heavy, f, fam));
  // Moving the point to a member with horizon >= the point's horizon and lower penalized value.
  auto moved = res;
  bool found = false;
  for (std::size_t j = 0; j < fam.members.size() && !found; ++j) {
    if (j == res.point || fam.members[j].time() < fam.members[res.point].time()) continue;
    moved.point = j;
    found = !evaluate_certificate(moved, f, fam).item_iii || !evaluate_certificate(moved, f, fam).item_i;
  }
  CHECK(found);
}

TEST_CASE("psi demo over pair families") {
  CandidateFamily fam = random_family(5, 200, 1, 2, 1.0);
  PsiParams pp;
  pp.w1 = [](const PathView& g) { return std::sin(g.terminal()[0]); };
  pp.w2 = [](const PathView& g) { return std::cos(g.terminal()[0]) - 1.0; };
  const auto psi = make_psi(fam, pp);
  const std::size_t best = argmax(psi, fam);
  const auto res = borwein_preiss(psi, fam, 0.1, best);
  CHECK(verify_certificate(res, psi, fam));
  CHECK(res.penalized_value >= psi(fam.members[best]) - 1e-12);
}
