#include "pdhjb/viscosity.hpp"

#include <cmath>
#include <limits>

#include "pdhjb/errors.hpp"

namespace pdhjb {

void HamiltonianSpec::validate() const {
  problem.validate();
  if (problem.control_space.empty()) throw InputError("HamiltonianSpec: control space must be finite and nonempty");
  if (op.dim() != problem.state_dim) throw InputError("HamiltonianSpec: operator dimension differs from the state");
}

double hamiltonian(const HamiltonianSpec& spec, const PathView& gamma, double r, const HVector& p,
                   const HMatrix& l) {
  if (spec.problem.control_space.empty()) throw InputError("hamiltonian: empty control space");
  const int n = spec.problem.state_dim;
  if (p.size() != n || l.rows() != n || l.cols() != n) throw InputError("hamiltonian: p or l has the wrong shape");
  double best = -std::numeric_limits<double>::infinity();
  for (const ControlPoint& u : spec.problem.control_space) {
    const HVector F = spec.problem.drift(gamma, u);
    const HMatrix G = spec.problem.diffusion(gamma, u);
    const NoiseVector z = G.transpose() * p;
    const double v = p.dot(F) + 0.5 * (l * G * G.transpose()).trace() + spec.problem.running(gamma, r, z, u);
    if (!std::isfinite(v)) throw NumericalError("hamiltonian: non-finite value");
    best = std::max(best, v);
  }
  return best;
}

namespace {

void check_jet(const FunctionalJet& j, int n) {
  if (j.dx.size() != n || j.dxx.rows() != n || j.dxx.cols() != n || j.a_star_dx.size() != n) {
    throw InputError("missing or mis-shaped derivative data (dx, dxx, A* dx)");
  }
}

bool at_final(double t, double T) { return std::abs(t - T) <= 1e-12 * (1.0 + T); }

}  // namespace

double classical_residual(const HamiltonianSpec& spec, const JetFunctional& v, const DiscretePath& point) {
  spec.validate();
  if (!v) throw InputError("classical_residual: functional missing");
  const PathView view(point);
  const FunctionalJet j = v(view);
  if (at_final(point.horizon(), spec.problem.final_time)) return j.value - spec.problem.terminal(view);
  check_jet(j, spec.problem.state_dim);
  const HVector x = point.terminal();
  return j.dt + j.a_star_dx.dot(x) + hamiltonian(spec, view, j.value, j.dx, j.dxx);
}

GaugeJet gauge_jet(const SpectralOperator& op, const GaugeTerm& term, const DiscretePath& eta) {
  const int n = eta.dim();
  const double s = eta.horizon();
  GaugeJet g;
  g.dx = HVector::Zero(n);
  g.dxx = HMatrix::Zero(n, n);
  switch (term.kind) {
    case GaugeTermKind::weighted_upsilon: {
      const double h = term.weight + term.slope * (s - term.reference_time);
      if (h < 0.0) throw InputError("gauge term: h(s) < 0");
      const PathView v(eta);
      const double u = eval_upsilon(term.params, v);
      g.value = h * u;
      g.dt_o = term.slope * u;
      g.dx = h * grad_upsilon(term.params, v);
      g.dxx = h * hess_upsilon(term.params, v);
      break;
    }
    case GaugeTermKind::terminal_distance: {
      const double t = term.anchor.horizon();
      if (s < t) throw InputError("gauge term: anchor horizon exceeds the evaluation horizon");
      const HVector a = op.semigroup_apply(s - t, term.anchor.terminal());
      const HVector d = eta.terminal() - a;
      const int m = term.power;
      if (m < 1) throw InputError("gauge term: power must be >= 1");
      const double r2 = d.squaredNorm();
      g.value = term.weight * std::pow(r2, m);
      g.dx = term.weight * 2.0 * m * std::pow(r2, m - 1) * d;
      g.dxx = term.weight * 2.0 * m * std::pow(r2, m - 1) * HMatrix::Identity(n, n);
      if (m >= 2) g.dxx += term.weight * 4.0 * m * (m - 1) * std::pow(r2, m - 2) * d * d.transpose();
      break;
    }
    case GaugeTermKind::anchored_upsilon: {
      if (term.anchor.horizon() > s + 1e-12 * (1.0 + s)) {
        throw InputError("gauge term: anchor horizon exceeds the evaluation horizon");
      }
      const DiscretePath diff = aligned_difference(op, term.anchor, eta);
      const PathView v(diff);
      g.value = term.weight * eval_upsilon(term.params, v);
      g.dx = term.weight * grad_upsilon(term.params, v);
      g.dxx = term.weight * hess_upsilon(term.params, v);
      break;
    }
    case GaugeTermKind::time_square: {
      const double d = s - term.reference_time;
      g.value = term.weight * d * d;
      g.dt_o = 2.0 * term.weight * d;
      break;
    }
  }
  return g;
}

GaugeJet gauge_jet(const SpectralOperator& op, const std::vector<GaugeTerm>& terms, const DiscretePath& eta) {
  GaugeJet total;
  total.dx = HVector::Zero(eta.dim());
  total.dxx = HMatrix::Zero(eta.dim(), eta.dim());
  for (const GaugeTerm& t : terms) {
    const GaugeJet g = gauge_jet(op, t, eta);
    total.value += g.value;
    total.dt_o += g.dt_o;
    total.dx += g.dx;
    total.dxx += g.dxx;
  }
  return total;
}

void TestFunctional::validate(double horizon) const {
  if (!smooth) throw InputError("TestFunctional: smooth part missing");
  double sum = 0.0;
  for (const GaugeTerm& t : gauge) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) throw InputError("TestFunctional: gauge weights must be >= 0");
    if (t.kind == GaugeTermKind::anchored_upsilon || t.kind == GaugeTermKind::weighted_upsilon) validate_gauge_type(t.params);
    if (t.kind == GaugeTermKind::anchored_upsilon || t.kind == GaugeTermKind::terminal_distance) {
      if (t.anchor.size() == 0) throw InputError("TestFunctional: anchored term without anchor");
      if (t.anchor.horizon() > horizon + 1e-12 * (1.0 + horizon)) {
        throw InputError("TestFunctional: anchor horizon exceeds the evaluation horizon");
      }
    }
    if (t.kind == GaugeTermKind::time_square && t.reference_time > horizon + 1e-12) {
      throw InputError("TestFunctional: t_i exceeds the evaluation horizon");
    }
    if (t.kind != GaugeTermKind::weighted_upsilon) sum += t.weight;
  }
  if (sum > weight_cap) throw InputError("TestFunctional: summed gauge weights exceed the cap");
}

namespace {

double tangency_value(const SpectralOperator& op, const std::function<double(const DiscretePath&)>& w,
                      const TestFunctional& test, const DiscretePath& eta, ViscosityKind kind) {
  const double phi = test.smooth(PathView(eta)).value;
  const double g = gauge_jet(op, test.gauge, eta).value;
  return kind == ViscosityKind::sub ? w(eta) - phi - g : w(eta) + phi + g;
}

}  // namespace

std::size_t family_extremum(const SpectralOperator& op, const std::function<double(const DiscretePath&)>& w,
                            const TestFunctional& test, const std::vector<DiscretePath>& family,
                            ViscosityKind kind, double t) {
  if (family.empty()) throw InputError("family_extremum: empty family");
  std::size_t best = family.size();
  double best_v = 0.0;
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (family[j].horizon() < t - 1e-12 * (1.0 + t)) continue;
    const double v = tangency_value(op, w, test, family[j], kind);
    const bool better = kind == ViscosityKind::sub ? v > best_v : v < best_v;
    if (best == family.size() || better) {
      best = j;
      best_v = v;
    }
  }
  if (best == family.size()) throw InputError("family_extremum: no member with horizon >= t");
  return best;
}

TangencyReport tangency_check(const HamiltonianSpec& spec, const std::function<double(const DiscretePath&)>& w,
                              const TestFunctional& test, std::size_t candidate,
                              const std::vector<DiscretePath>& family, ViscosityKind kind, double tol,
                              double tangency_tol) {
  spec.validate();
  if (candidate >= family.size()) throw InputError("tangency_check: candidate index out of range");
  const DiscretePath& gamma = family[candidate];
  const double t = gamma.horizon();
  if (t >= spec.problem.final_time - 1e-12) throw InputError("tangency_check: candidate must have t < T");
  test.validate(t);

  TangencyReport rep;
  rep.candidate = candidate;
  rep.tol = tol;
  const double c = tangency_value(spec.op, w, test, gamma, kind);
  rep.shift = c;
  std::string violators;
  std::size_t nviol = 0;
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (j == candidate || family[j].horizon() < t - 1e-12 * (1.0 + t)) continue;
    ++rep.competitors;
    const double v = tangency_value(spec.op, w, test, family[j], kind) - c;
    const bool bad = kind == ViscosityKind::sub ? v > tangency_tol * (1.0 + std::abs(c))
                                                : v < -tangency_tol * (1.0 + std::abs(c));
    if (bad) {
      if (nviol < 8) violators += (violators.empty() ? "" : ", ") + std::to_string(j);
      ++nviol;
    }
  }
  if (nviol > 0) {
    throw PreconditionError("tangency_check: candidate is not the family extremum; violating members: " + violators +
                            (nviol > 8 ? " (+" + std::to_string(nviol - 8) + " more)" : ""));
  }

  const PathView view(gamma);
  const FunctionalJet phi = test.smooth(view);
  check_jet(phi, spec.problem.state_dim);
  const GaugeJet g = gauge_jet(spec.op, test.gauge, gamma);
  const HVector x = gamma.terminal();
  const double transport = phi.a_star_dx.dot(x);
  if (kind == ViscosityKind::sub) {
    // (phi + c + g)(gamma) = w(gamma)
    const double r = phi.value + c + g.value;
    rep.slack = phi.dt + g.dt_o + transport + hamiltonian(spec, view, r, phi.dx + g.dx, phi.dxx + g.dxx);
  } else {
    // w + (phi - c) + g has minimum 0 at gamma, so -(phi - c + g)(gamma) = w(gamma)
    const double r = -(phi.value - c + g.value);
    const double lhs = -phi.dt - g.dt_o - transport + hamiltonian(spec, view, r, -(phi.dx + g.dx), -(phi.dxx + g.dxx));
    rep.slack = -lhs;
  }
  rep.passed = rep.slack >= -tol;
  return rep;
}

}  // namespace pdhjb
