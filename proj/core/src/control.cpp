#include "pdhjb/control.hpp"

#include <algorithm>
#include <cmath>

#include "pdhjb/errors.hpp"
#include "pdhjb/parallel.hpp"
#include "pdhjb/rng.hpp"
#include "pdhjb/stats.hpp"

namespace pdhjb {

namespace {

Basis pick_basis(const Basis* basis, int dim) { return basis ? *basis : path_feature_basis(dim); }

std::size_t best_index(const std::vector<CostEstimate>& costs) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < costs.size(); ++c) {
    if (costs[c].value > costs[best].value) best = c;
  }
  return best;
}

}  // namespace

CostEstimate cost_J(const SpectralOperator& op, const ControlProblem& problem,
                    const DiscretePath& initial, const ControlProcess& control,
                    const NoiseSpec& noise, std::size_t samples, const Basis* basis) {
  const SdeEnsemble ens = simulate_mild(op, problem, initial, control, noise, samples);
  const ValueAtStart v = solve_value(ens, BsdeSpec::from_problem(problem), pick_basis(basis, problem.state_dim));
  return {control.label, v.value, v.std_error};
}

ValueEstimate value_enumerate(const SpectralOperator& op, const ControlProblem& problem,
                              const DiscretePath& initial, const std::vector<ControlProcess>& family,
                              const NoiseSpec& noise, std::size_t samples, const Basis* basis) {
  if (family.empty()) throw InputError("value_enumerate: empty control family");
  ValueEstimate out;
  out.per_control.resize(family.size());
  parallel_for(family.size(), [&](std::size_t c) {
    out.per_control[c] = cost_J(op, problem, initial, family[c], noise, samples, basis);
  });
  out.argmax_index = best_index(out.per_control);
  out.argmax = out.per_control[out.argmax_index].label;
  out.value = out.per_control[out.argmax_index].value;
  out.std_error = out.per_control[out.argmax_index].std_error;
  return out;
}

CostEstimate backward_semigroup(const SpectralOperator& op, const ControlProblem& problem,
                                const DiscretePath& initial, const ControlProcess& control,
                                double delta, const std::function<double(const PathView&)>& zeta,
                                const NoiseSpec& noise, std::size_t samples, const Basis* basis) {
  if (!(delta > 0.0)) throw InputError("backward_semigroup: delta must be positive");
  const double t = initial.horizon();
  if (t + delta > problem.final_time + 1e-12 * (1.0 + problem.final_time)) {
    throw InputError("backward_semigroup: t + delta exceeds the final time");
  }
  if (!zeta) throw InputError("backward_semigroup: terminal functional missing");
  ControlProblem sub = problem;
  sub.final_time = std::min(problem.final_time, t + delta);
  sub.terminal = zeta;
  return cost_J(op, sub, initial, control, noise, samples, basis);
}

DppReport dpp_residual(const SpectralOperator& op, const ControlProblem& problem,
                       const DiscretePath& initial, const std::vector<ControlProcess>& family,
                       const DppOptions& options, const NoiseSpec& noise, const Basis* basis) {
  if (family.empty()) throw InputError("dpp_residual: empty control family");
  if (!(options.delta > 0.0)) throw InputError("dpp_residual: delta must be positive");
  if (options.samples_outer == 0 || options.samples_inner == 0) {
    throw InputError("dpp_residual: sample counts must be positive");
  }
  const double t = initial.horizon();
  const double T = problem.final_time;
  if (t + options.delta > T + 1e-12 * (1.0 + T)) throw InputError("dpp_residual: t + delta exceeds T");
  const double mid = std::min(T, t + options.delta);
  step_count(t, mid, noise.dt);  // grid alignment
  const double budget = static_cast<double>(family.size()) * static_cast<double>(options.samples_outer) *
                        static_cast<double>(options.samples_inner) * static_cast<double>(family.size());
  if (budget > options.max_inner_paths) {
    throw BudgetExceeded("dpp_residual: nested budget " + std::to_string(budget) +
                         " inner paths exceeds the cap " + std::to_string(options.max_inner_paths));
  }
  const Basis b = pick_basis(basis, problem.state_dim);

  DppReport rep;
  const std::size_t lhs_samples = options.samples_lhs ? options.samples_lhs : options.samples_outer;
  const ValueEstimate lhs = value_enumerate(op, problem, initial, family, noise, lhs_samples, &b);
  rep.lhs = lhs.value;
  rep.lhs_std_error = lhs.std_error;
  rep.lhs_argmax = lhs.argmax;

  ControlProblem sub = problem;
  sub.final_time = mid;
  const std::size_t M = options.samples_outer;
  const std::size_t C = family.size();
  std::vector<Eigen::MatrixXd> inner_costs(C);  // M x C per outer control
  rep.rhs_per_control.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const SdeEnsemble outer = simulate_mild(op, sub, initial, family[c], noise, M);
    Eigen::VectorXd vhat(static_cast<Eigen::Index>(M));
    inner_costs[c].resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(C));
    parallel_for(M, [&](std::size_t i) {
      NoiseSpec inner = noise;
      inner.seed = derive_seed(noise.seed, options.inner_tag + c, i);
      const ValueEstimate v =
          value_enumerate(op, problem, outer.path(i), family, inner, options.samples_inner, &b);
      vhat[static_cast<Eigen::Index>(i)] = v.value;
      for (std::size_t d = 0; d < C; ++d) {
        inner_costs[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v.per_control[d].value;
      }
    });
    BsdeSpec spec = BsdeSpec::from_problem(sub);
    spec.terminal_values = vhat;
    const ValueAtStart g = solve_value(outer, spec, b);
    rep.rhs_per_control[c] = {family[c].label, g.value, g.std_error};
  }
  const std::size_t best = best_index(rep.rhs_per_control);
  rep.rhs = rep.rhs_per_control[best].value;
  rep.rhs_std_error = rep.rhs_per_control[best].std_error;
  rep.rhs_argmax = rep.rhs_per_control[best].label;
  {
    // Bias of max over noisy inner estimates against the control that wins on average.
    const Eigen::MatrixXd& costs = inner_costs[best];
    const Eigen::VectorXd means = costs.colwise().mean().transpose();
    Eigen::Index star = 0;
    for (Eigen::Index d = 1; d < means.size(); ++d) {
      if (means[d] > means[star]) star = d;
    }
    rep.nested_bias = (costs.rowwise().maxCoeff() - costs.col(star)).mean();
  }
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.ci = std::hypot(rep.lhs_std_error, rep.rhs_std_error);
  rep.passed = rep.residual <= 3.0 * rep.ci + 1e-12 * (1.0 + std::abs(rep.lhs));
  return rep;
}

RegularityReport regularity_checks(const SpectralOperator& op, const ControlProblem& problem,
                                   const std::vector<ControlProcess>& family,
                                   const std::vector<std::pair<DiscretePath, DiscretePath>>& path_pairs,
                                   const DiscretePath& base, const std::vector<double>& time_gaps,
                                   const NoiseSpec& noise, std::size_t samples, const Basis* basis) {
  RegularityReport rep;
  auto V = [&](const DiscretePath& p, std::size_t m) {
    return value_enumerate(op, problem, p, family, noise, m, basis).value;
  };
  auto space_constant = [&](std::size_t m, std::vector<double>* ratios) {
    double best = 0.0;
    for (const auto& [g, e] : path_pairs) {
      const double dist = metric_d_infty(op, g, e);
      if (dist == 0.0) continue;  // 0/0
      const double r = std::abs(V(g, m) - V(e, m)) / dist;
      if (ratios) ratios->push_back(r);
      best = std::max(best, r);
    }
    return best;
  };
  rep.space_constant = space_constant(samples, &rep.space_ratios);
  rep.space_constant_doubled = space_constant(2 * samples, nullptr);
  rep.space_stable = std::abs(rep.space_constant_doubled - rep.space_constant) <=
                     0.2 * std::max(rep.space_constant, 1e-300);

  if (!time_gaps.empty()) {
    const double v0 = V(base, samples);
    std::vector<double> gaps;
    std::vector<double> diffs;
    for (double delta : time_gaps) {
      if (!(delta > 0.0)) throw InputError("regularity_checks: time gaps must be positive");
      const DiscretePath ext = extend_semigroup(op, base, base.horizon() + delta);
      const double d = std::abs(v0 - V(ext, samples));
      rep.time_gaps.push_back(delta);
      rep.time_diffs.push_back(d);
      if (d > 0.0) {
        gaps.push_back(delta);
        diffs.push_back(d);
      }
    }
    if (gaps.size() >= 2) {
      rep.time_slope = fit_loglog(gaps, diffs).slope;
      rep.time_slope_in_range = rep.time_slope >= 0.3 && rep.time_slope <= 0.7;
    }
  }
  return rep;
}

}  // namespace pdhjb
