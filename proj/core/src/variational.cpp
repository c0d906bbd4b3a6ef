#include "pdhjb/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdhjb/errors.hpp"
#include "pdhjb/rng.hpp"

namespace pdhjb {

namespace {

constexpr int kMaxIterations = 200;
// After this many slack steps the window is below round-off; switch to the exact argmax.
constexpr int kSlackIterations = 40;

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }

}  // namespace

void CandidateFamily::validate() const {
  if (members.empty()) throw InputError("CandidateFamily: empty family");
  validate_gauge_type(gauge);
  const std::size_t comps = members.front().components.size();
  if (comps == 0) throw InputError("CandidateFamily: member without components");
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto& m = members[j];
    if (m.components.size() != comps) throw InputError("CandidateFamily: member " + std::to_string(j) + " has a different component count");
    for (const auto& c : m.components) {
      if (c.dim() != op.dim()) throw InputError("CandidateFamily: member " + std::to_string(j) + " has the wrong dimension");
      if (!same_time(c.horizon(), m.time())) throw InputError("CandidateFamily: member " + std::to_string(j) + " components disagree on the horizon");
    }
  }
}

double rho(const CandidateFamily& family, const FamilyMember& a, const FamilyMember& b) {
  double r = 0.0;
  for (std::size_t c = 0; c < a.components.size(); ++c) {
    r += eval_upsilon(family.op, family.gauge, a.components[c], b.components[c]);
  }
  const double dt = a.time() - b.time();
  return r + dt * dt;
}

double penalty(const PerturbedMaximizer& result, const CandidateFamily& family, const FamilyMember& x) {
  double p = 0.0;
  for (std::size_t k = 0; k < result.anchors.size(); ++k) {
    p += result.weights[k] * rho(family, family.members[result.anchors[k]], x);
  }
  const double tail = std::ldexp(1.0, 1 - static_cast<int>(result.anchors.size()));
  return p + tail * rho(family, family.members[result.point], x);
}

PerturbedMaximizer borwein_preiss(const FamilyFunctional& f, const CandidateFamily& family,
                                  double epsilon, std::size_t start, AnchorSelection selection) {
  family.validate();
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("borwein_preiss: epsilon must be positive");
  const std::size_t n = family.members.size();
  if (start >= n) throw InputError("borwein_preiss: start index out of range");
  std::vector<double> fv(n);
  for (std::size_t j = 0; j < n; ++j) {
    fv[j] = f(family.members[j]);
    if (!std::isfinite(fv[j])) throw NumericalError("borwein_preiss: non-finite functional at member " + std::to_string(j));
  }
  const double sup = *std::max_element(fv.begin(), fv.end());
  if (fv[start] < sup - epsilon - 1e-12 * (1.0 + std::abs(sup))) {
    throw InputError("borwein_preiss: start is not epsilon-optimal (f = " + std::to_string(fv[start]) +
                     ", sup = " + std::to_string(sup) + ")");
  }
  const auto& mem = family.members;
  PerturbedMaximizer res;
  res.epsilon = epsilon;
  res.anchors = {start};
  res.weights = {1.0};
  std::vector<double> pen(n, 0.0);
  std::vector<std::size_t> B;
  const double t0 = mem[start].time();
  for (std::size_t j = 0; j < n; ++j) {
    if (mem[j].time() < t0 && !same_time(mem[j].time(), t0)) continue;
    pen[j] = rho(family, mem[j], mem[start]);
    if (fv[j] - pen[j] >= fv[start]) B.push_back(j);
  }
  res.point = start;
  for (int i = 1; i <= kMaxIterations; ++i) {
    res.iterations = i;
    if (B.size() == 1) {
      res.point = B.front();
      break;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : B) best = std::max(best, fv[j] - pen[j]);
    std::size_t pick = B.front();
    if (selection == AnchorSelection::slack && i <= kSlackIterations) {
      const double slack = std::ldexp(epsilon, -2 * i);  // delta_i eps / (2^i delta_0)
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t j : B) {
        const double v = fv[j] - pen[j];
        if (v >= best - slack && v < lowest) {
          lowest = v;
          pick = j;
        }
      }
    } else {
      for (std::size_t j : B) {
        if (fv[j] - pen[j] == best) {
          pick = j;
          break;
        }
      }
    }
    // With the exact argmax a repeated anchor leaves only exact ties in B. A slack pick may
    // repeat the last anchor while better members remain, so the chain goes on.
    if (pick == res.anchors.back() && (selection == AnchorSelection::exact || i > kSlackIterations)) {
      res.point = pick;
      break;
    }
    const double level = fv[pick] - pen[pick];
    const double w = std::ldexp(1.0, -i);
    res.anchors.push_back(pick);
    res.weights.push_back(w);
    const double ti = mem[pick].time();
    std::vector<std::size_t> next;
    for (std::size_t j : B) {
      if (mem[j].time() < ti && !same_time(mem[j].time(), ti)) continue;
      pen[j] += w * rho(family, mem[j], mem[pick]);
      if (fv[j] - pen[j] >= level) next.push_back(j);
    }
    B.swap(next);
    res.point = pick;
    if (B.empty()) throw NumericalError("borwein_preiss: empty B_i (round-off in the gauge)");
  }
  res.penalized_value = fv[res.point] - penalty(res, family, mem[res.point]);
  res.certificate = evaluate_certificate(res, f, family);
  return res;
}

Certificate evaluate_certificate(const PerturbedMaximizer& result, const FamilyFunctional& f,
                                 const CandidateFamily& family) {
  Certificate cert;
  const auto& mem = family.members;
  if (result.point >= mem.size() || result.anchors.empty() || result.anchors.size() != result.weights.size()) {
    return cert;
  }
  const FamilyMember& hat = mem[result.point];
  const double eps = result.epsilon;
  const double tol = 1e-12;

  cert.item_i = true;
  double prev_time = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < result.anchors.size(); ++k) {
    const FamilyMember& a = mem[result.anchors[k]];
    const double bound = std::ldexp(eps, -static_cast<int>(k));
    if (rho(family, a, hat) > bound * (1.0 + tol)) cert.item_i = false;
    if (k > 0 && a.time() < prev_time && !same_time(a.time(), prev_time)) cert.item_i = false;
    if (a.time() > hat.time() && !same_time(a.time(), hat.time())) cert.item_i = false;
    prev_time = a.time();
  }

  const double f_hat = f(hat);
  const double v_hat = f_hat - penalty(result, family, hat);
  const double f0 = f(mem[result.anchors.front()]);
  cert.item_ii = v_hat >= f0 - tol * (1.0 + std::abs(f0));

  cert.item_iii = true;
  cert.worst_iii_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mem.size(); ++j) {
    if (j == result.point) continue;
    if (mem[j].time() < hat.time() && !same_time(mem[j].time(), hat.time())) continue;
    const double v = f(mem[j]) - penalty(result, family, mem[j]);
    const double margin = v_hat - v;
    cert.worst_iii_margin = std::min(cert.worst_iii_margin, margin);
    if (std::abs(margin) <= 1e-13 * (1.0 + std::abs(v_hat))) {
      cert.ties.push_back(j);
    } else if (margin < 0.0) {
      cert.item_iii = false;
    }
  }
  return cert;
}

FamilyFunctional perturbed_functional(const PerturbedMaximizer& result, const FamilyFunctional& f,
                                      const CandidateFamily& family) {
  return [result, f, &family](const FamilyMember& m) { return f(m) - penalty(result, family, m); };
}

bool verify_certificate(const PerturbedMaximizer& result, const FamilyFunctional& f,
                        const CandidateFamily& family) {
  return evaluate_certificate(result, f, family).all();
}

FamilyFunctional make_psi(const CandidateFamily& family, PsiParams params) {
  if (!params.w1 || !params.w2) throw InputError("make_psi: W1 and W2 are required");
  if (!(params.beta > 0.0) || !(params.epsilon > 0.0) || !(params.nu >= 1.0) || !(params.final_time > 0.0)) {
    throw InputError("make_psi: invalid parameters");
  }
  const SpectralOperator op = family.op;
  const GaugeParams g = family.gauge;
  return [op, g, params](const FamilyMember& m) {
    if (m.components.size() != 2) throw InputError("psi: pair members required");
    const DiscretePath& x = m.components[0];
    const DiscretePath& y = m.components[1];
    const double t = m.time();
    const double nuT = params.nu * params.final_time;
    const double gap = (x.terminal() - y.terminal()).squaredNorm();
    return params.w1(PathView(x)) - params.w2(PathView(y)) - params.beta * eval_upsilon(op, g, x, y) -
           std::cbrt(params.beta) * gap -
           params.epsilon * (nuT - t) / nuT * (eval_upsilon(g, PathView(x)) + eval_upsilon(g, PathView(y)));
  };
}

CandidateFamily random_family(std::uint64_t seed, std::size_t size, int dim, int components,
                              double final_time, std::size_t horizon_levels, std::size_t steps_per_level) {
  if (size == 0 || dim < 1 || components < 1 || !(final_time > 0.0) || horizon_levels == 0 || steps_per_level == 0) {
    throw InputError("random_family: invalid arguments");
  }
  CandidateFamily fam;
  fam.op = SpectralOperator::dirichlet_laplacian(dim, 0.1);
  KeyedStream rng(seed, 7);
  const double level_dt = final_time / static_cast<double>(horizon_levels);
  const double dt = level_dt / static_cast<double>(steps_per_level);
  for (std::size_t j = 0; j < size; ++j) {
    const std::size_t level = 1 + rng.below(horizon_levels);
    const std::size_t steps = level * steps_per_level;
    const auto grid = DiscretePath::uniform_grid(dt * static_cast<double>(steps), steps);
    FamilyMember m;
    for (int c = 0; c < components; ++c) {
      Eigen::MatrixXd v(dim, static_cast<Eigen::Index>(steps + 1));
      for (int d = 0; d < dim; ++d) v(d, 0) = 0.5 * rng.normal();
      for (std::size_t k = 1; k <= steps; ++k) {
        for (int d = 0; d < dim; ++d) v(d, static_cast<Eigen::Index>(k)) = v(d, static_cast<Eigen::Index>(k - 1)) + std::sqrt(dt) * rng.normal();
      }
      m.components.emplace_back(grid, std::move(v));
    }
    fam.members.push_back(std::move(m));
  }
  return fam;
}

}  // namespace pdhjb
