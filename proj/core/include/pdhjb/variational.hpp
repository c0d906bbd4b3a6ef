#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdhjb/gauge.hpp"

namespace pdhjb {

// A point (t, gamma_t) of the product space: one or more component paths sharing a horizon.
struct FamilyMember {
  std::vector<DiscretePath> components;
  double time() const { return components.front().horizon(); }
};

struct CandidateFamily {
  std::vector<FamilyMember> members;
  GaugeParams gauge{3, 3.0};
  SpectralOperator op;  // semigroup used to align paths of different horizons

  void validate() const;
};

using FamilyFunctional = std::function<double(const FamilyMember&)>;

// rho = sum over components of Upsilon(a_c, b_c) + |t_a - t_b|^2.
double rho(const CandidateFamily& family, const FamilyMember& a, const FamilyMember& b);

enum class AnchorSelection {
  exact,  // argmax of the penalized functional over B_{i-1}
  slack   // lowest-valued member within the admissible slack (longer anchor chains)
};

struct Certificate {
  bool item_i = false;
  bool item_ii = false;
  bool item_iii = false;
  double worst_iii_margin = 0.0;  // min over competitors of penalized(hat) - penalized(member)
  std::vector<std::size_t> ties;  // competitors with exactly equal penalized value
  bool all() const { return item_i && item_ii && item_iii; }
};

struct PerturbedMaximizer {
  std::size_t point = 0;             // family index of (t_hat, gamma_hat)
  std::vector<std::size_t> anchors;  // anchors[0] is the start, then t_1 <= t_2 <= ...
  std::vector<double> weights;       // delta_i = 2^-i per anchor; the tail sum goes on `point`
  double epsilon = 0.0;
  double penalized_value = 0.0;
  int iterations = 0;
  Certificate certificate;
};

// Penalty sum_i delta_i rho(gamma^i, x) including the constant tail anchored at the point.
double penalty(const PerturbedMaximizer& result, const CandidateFamily& family, const FamilyMember& x);

PerturbedMaximizer borwein_preiss(const FamilyFunctional& f, const CandidateFamily& family,
                                  double epsilon, std::size_t start,
                                  AnchorSelection selection = AnchorSelection::exact);

// f minus the penalty of `result`. Running borwein_preiss on it from result.point returns that
// point with zero added penalty, which is the idempotence property checked by the suites.
FamilyFunctional perturbed_functional(const PerturbedMaximizer& result, const FamilyFunctional& f,
                                      const CandidateFamily& family);

// Brute-force re-evaluation of items (i)-(iii) over the family.
Certificate evaluate_certificate(const PerturbedMaximizer& result, const FamilyFunctional& f,
                                 const CandidateFamily& family);
bool verify_certificate(const PerturbedMaximizer& result, const FamilyFunctional& f,
                        const CandidateFamily& family);

// Auxiliary functional of the comparison argument on pair members (gamma, eta):
// W1(gamma) - W2(eta) - beta Upsilon(gamma, eta) - beta^(1/3) |gamma(t) - eta(t)|^2
//   - eps (nu T - t) / (nu T) (Upsilon(gamma) + Upsilon(eta)).
struct PsiParams {
  std::function<double(const PathView&)> w1;
  std::function<double(const PathView&)> w2;
  double beta = 10.0;
  double epsilon = 0.1;
  double nu = 1.0;
  double final_time = 1.0;
};

FamilyFunctional make_psi(const CandidateFamily& family, PsiParams params);

// Random members: horizons on a grid of `horizon_levels` points in [0, T], Gaussian random-walk
// values, `components` paths per member.
CandidateFamily random_family(std::uint64_t seed, std::size_t size, int dim, int components,
                              double final_time, std::size_t horizon_levels = 8,
                              std::size_t steps_per_level = 4);

}  // namespace pdhjb
