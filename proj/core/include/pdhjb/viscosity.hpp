#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pdhjb/gauge.hpp"
#include "pdhjb/problem.hpp"

namespace pdhjb {

struct HamiltonianSpec {
  ControlProblem problem;
  SpectralOperator op;
  void validate() const;
};

// max over u of <p, F> + Tr(l G G^T) / 2 + q(gamma, r, G^T p, u).
double hamiltonian(const HamiltonianSpec& spec, const PathView& gamma, double r, const HVector& p,
                   const HMatrix& l);

// Value and pathwise derivatives of a smooth functional at a path; a_star_dx is A^* d_x v.
struct FunctionalJet {
  double value = 0.0;
  double dt = 0.0;
  HVector dx;
  HMatrix dxx;
  HVector a_star_dx;
};
using JetFunctional = std::function<FunctionalJet(const PathView&)>;

// d_t v + <A^* d_x v, gamma(t)> + H(gamma, v, d_x v, d_xx v); at t = T the gap v - phi.
double classical_residual(const HamiltonianSpec& spec, const JetFunctional& v, const DiscretePath& point);

// Members of the admissible gauge class: weighted sums of
//   h(s) Upsilon(eta_s) with h(s) = weight + slope (s - reference_time) >= 0,
//   weight |eta(s) - e^{(s-t)A} gamma_t(t)|^{2 power},
//   weight Upsilon(eta_s - (gamma^i)^A_{t_i,s}),
//   weight |s - t_i|^2.
enum class GaugeTermKind { weighted_upsilon, terminal_distance, anchored_upsilon, time_square };

struct GaugeTerm {
  GaugeTermKind kind = GaugeTermKind::anchored_upsilon;
  double weight = 0.0;
  double slope = 0.0;
  double reference_time = 0.0;  // weighted_upsilon; t_i for time_square
  DiscretePath anchor;          // gamma_t or gamma^i_{t_i}
  GaugeParams params{3, 3.0};
  int power = 1;
};

struct GaugeJet {
  double value = 0.0;
  double dt_o = 0.0;  // sum h_i'(s) g_i
  HVector dx;
  HMatrix dxx;
};

GaugeJet gauge_jet(const SpectralOperator& op, const GaugeTerm& term, const DiscretePath& eta);
GaugeJet gauge_jet(const SpectralOperator& op, const std::vector<GaugeTerm>& terms, const DiscretePath& eta);

struct TestFunctional {
  JetFunctional smooth;
  std::vector<GaugeTerm> gauge;
  double weight_cap = 1e6;  // bound N on the summed gauge weights
  void validate(double horizon) const;
};

enum class ViscosityKind { sub, super };

struct TangencyReport {
  std::size_t candidate = 0;
  double shift = 0.0;   // constant added to the smooth part so that the extremum value is 0
  double slack = 0.0;   // >= -tol for a passing check
  double tol = 0.0;
  bool passed = false;
  std::size_t competitors = 0;  // family members with horizon >= t
};

// Brute-force extremum of w - phi - g (sub) or w + phi + g (super) over the family.
std::size_t family_extremum(const SpectralOperator& op, const std::function<double(const DiscretePath&)>& w,
                            const TestFunctional& test, const std::vector<DiscretePath>& family,
                            ViscosityKind kind, double t);

TangencyReport tangency_check(const HamiltonianSpec& spec, const std::function<double(const DiscretePath&)>& w,
                              const TestFunctional& test, std::size_t candidate,
                              const std::vector<DiscretePath>& family, ViscosityKind kind, double tol,
                              double tangency_tol = 1e-12);

}  // namespace pdhjb
