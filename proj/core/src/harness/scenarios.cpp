#include "pdhjb/harness/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "pdhjb/control.hpp"
#include "pdhjb/errors.hpp"
#include "pdhjb/gauge.hpp"
#include "pdhjb/harness/problems.hpp"
#include "pdhjb/markovian.hpp"
#include "pdhjb/rng.hpp"
#include "pdhjb/stats.hpp"
#include "pdhjb/variational.hpp"
#include "pdhjb/viscosity.hpp"

namespace pdhjb::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Contract make(std::string name, double slack, std::string detail, bool required = true) {
  Contract c;
  c.name = std::move(name);
  c.slack = slack;
  c.passed = slack >= 0.0;
  c.required = required;
  c.detail = std::move(detail);
  return c;
}

bool has_stage(const ExperimentConfig& c, const std::string& stage) {
  if (!c.params.contains("stages")) return true;
  for (const auto& s : c.params["stages"])
    if (s.get<std::string>() == stage) return true;
  return false;
}

double param(const ExperimentConfig& c, const char* key) { return c.params.at(key).get<double>(); }

std::vector<double> param_list(const ExperimentConfig& c, const char* key) {
  return c.params.at(key).get<std::vector<double>>();
}

std::vector<double> family_values(const ExperimentConfig& c) {
  std::vector<double> out;
  for (const auto& s : c.controls) out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

NoiseSpec noise_of(const ExperimentConfig& c, int rank, std::uint32_t stream, double dt) {
  NoiseSpec n;
  n.noise_dim = rank;
  n.seed = c.seed;
  n.dt = dt;
  n.stream = stream;
  return n;
}

json per_control_json(const std::vector<CostEstimate>& v) {
  json arr = json::array();
  for (const auto& e : v) arr.push_back({{"label", e.label}, {"value", e.value}, {"std_error", e.std_error}});
  return arr;
}

Table per_control_table(const std::vector<CostEstimate>& v) {
  Table t;
  t.columns = {"control", "J", "std_error"};
  for (const auto& e : v) t.rows.push_back({e.label, e.value, e.std_error});
  return t;
}

std::vector<DiscretePath> random_paths(std::uint64_t seed, int dim, std::size_t count, double scale) {
  KeyedStream rng(seed, 7);
  std::vector<DiscretePath> out;
  const auto grid = DiscretePath::uniform_grid(0.5, 4);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::MatrixXd v(dim, grid.size());
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (int d = 0; d < dim; ++d) v(d, j) = rng.uniform(-scale, scale);
    out.emplace_back(grid, v);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Shared pipeline for the two infinite-dimensional examples.

struct SpdeSetup {
  SpectralOperator op;
  ControlProblem problem;
  DiscretePath initial;
  std::vector<ControlProcess> family;
};

void spde_pipeline(const ExperimentConfig& c, const SpdeSetup& s, ResultBundle& b) {
  const int rank = s.problem.noise_dim;
  const std::size_t steps = step_count(s.initial.horizon(), s.problem.final_time, c.dt);
  const GaugeParams gauge{static_cast<int>(c.params.at("gauge_m").get<std::int64_t>()), param(c, "gauge_M")};

  std::size_t argmax = 0;
  if (has_stage(c, "value") || has_stage(c, "bsde")) {
    check_path_budget(c, c.samples * s.family.size(), steps, "value");
    const auto v = value_enumerate(s.op, s.problem, s.initial, s.family, noise_of(c, rank, 0, c.dt), c.samples);
    argmax = v.argmax_index;
    b.results["value"] = {{"value", v.value}, {"std_error", v.std_error}, {"argmax", v.argmax},
                          {"per_control", per_control_json(v.per_control)}};
    b.tables["per_control"] = per_control_table(v.per_control);
    b.add(make("value_finite", std::isfinite(v.value) && std::isfinite(v.std_error) ? 0.0 : -1.0,
               "V = " + num(v.value) + " +- " + num(v.std_error)));
  }

  if (has_stage(c, "bsde")) {
    const auto ens = simulate_mild(s.op, s.problem, s.initial, s.family[argmax], noise_of(c, rank, 0, c.dt), c.samples);
    const BsdeSpec spec = BsdeSpec::from_problem(s.problem);
    const Basis basis = path_feature_basis(s.problem.state_dim);
    const auto sol = solve_regression(ens, spec, basis);
    const auto disc = discretization_estimate(ens, spec, basis);
    BsdeSpec lower = spec;
    const double shift = param(c, "comparison_shift");
    const auto q = spec.driver;
    lower.driver = [q, shift](const PathView& g, double y, const NoiseVector& z, const ControlPoint& u) {
      return q(g, y, z, u) - shift;
    };
    const auto cmp = comparison_check(ens, spec, lower, basis);
    b.results["bsde"] = {{"control", s.family[argmax].label},
                         {"value", sol.value},
                         {"std_error", sol.std_error},
                         {"terminal_residual", sol.terminal_residual},
                         {"discretization_estimate", disc.estimate},
                         {"ridge_used", sol.ridge_used},
                         {"comparison_min_slack", cmp.min_slack}};
    b.add(make("bsde_terminal_exact", -sol.terminal_residual, "max |Y_T - phi(X_T)| = " + num(sol.terminal_residual)));
    b.add(make("bsde_comparison", cmp.passed ? cmp.min_slack : -std::abs(cmp.min_slack),
               "driver shifted down by " + num(shift) + " stays below"));
    PlotData mean;
    mean.columns = {"t", "mean_Y"};
    const Eigen::VectorXd my = sol.mean_Y();
    for (std::size_t k = 0; k < sol.times.size(); ++k) mean.rows.push_back({sol.times[k], my[static_cast<Eigen::Index>(k)]});
    b.plots["bsde_mean_y"] = mean;
  }

  if (has_stage(c, "ito")) {
    check_path_budget(c, 2 * c.samples, steps, "ito");
    const DiscretePath anchor(s.initial.grid(), param(c, "anchor_scale") * s.initial.values());
    const auto ens = simulate_mild(s.op, s.problem, s.initial, s.family[argmax], noise_of(c, rank, 1, c.dt), c.samples);
    ItoCheckParams ip;
    ip.kind = ItoGauge::upsilon;
    ip.gauge = gauge;
    const auto rep = ito_inequality_check(s.op, s.problem, s.initial, anchor, ip, ens);
    // F = G = 0 with the anchor at the initial path: both sides vanish identically.
    ControlProblem still = s.problem;
    const int dim = s.problem.state_dim;
    still.drift = [dim](const PathView&, const ControlPoint&) -> HVector { return HVector::Zero(dim); };
    still.diffusion = [dim, rank](const PathView&, const ControlPoint&) -> HMatrix { return HMatrix::Zero(dim, rank); };
    const auto flat = simulate_mild(s.op, still, s.initial, s.family[argmax], noise_of(c, rank, 1, c.dt),
                                    std::min<std::size_t>(c.samples, 64));
    const auto zero = ito_inequality_check(s.op, still, s.initial, s.initial, ip, flat);
    const double zero_gap = std::max(std::abs(zero.max_gap), std::abs(zero.min_gap));
    b.results["ito"] = {{"mean_gap", rep.mean_gap}, {"stderr_gap", rep.stderr_gap}, {"max_gap", rep.max_gap},
                        {"min_gap", rep.min_gap}, {"zero_flow_gap", zero_gap},
                        {"gauge", {{"m", gauge.m}, {"M", gauge.M}}}};
    b.add(make("ito_inequality", 3.0 * rep.stderr_gap - rep.mean_gap,
               "mean(LHS - RHS) = " + num(rep.mean_gap) + ", stderr " + num(rep.stderr_gap)));
    b.add(make("ito_zero_flow", -zero_gap, "F = G = 0, anchor = initial: max |gap| = " + num(zero_gap)));
  }

  if (has_stage(c, "yosida")) {
    const auto mus = param_list(c, "yosida_mus");
    const auto m = static_cast<std::size_t>(c.params.at("yosida_samples").get<std::int64_t>());
    check_path_budget(c, m * (mus.size() + 1), steps, "yosida");
    const auto gaps = yosida_convergence(s.op, s.problem, s.initial, s.family[argmax], noise_of(c, rank, 2, c.dt), m, mus);
    json arr = json::array();
    PlotData plot;
    plot.columns = {"mu", "mean_sq_sup_gap", "std_error"};
    double mono = kInf;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      arr.push_back({{"mu", gaps[i].mu}, {"mean_sq_sup_gap", gaps[i].mean_sq_sup_gap}, {"std_error", gaps[i].std_error}});
      plot.rows.push_back({gaps[i].mu, gaps[i].mean_sq_sup_gap, gaps[i].std_error});
      if (i > 0) mono = std::min(mono, gaps[i - 1].mean_sq_sup_gap - gaps[i].mean_sq_sup_gap);
    }
    b.results["yosida"] = arr;
    b.plots["yosida"] = plot;
    if (gaps.size() >= 2) {
      Contract m = make("yosida_monotone", mono, "E||X - X^mu||_0^2 strictly decreasing in mu");
      m.passed = mono > 0.0;
      b.add(m);
      const double ratio = gaps.back().mean_sq_sup_gap / gaps.front().mean_sq_sup_gap;
      b.add(make("yosida_ratio", 1e-2 - ratio, "last / first = " + num(ratio)));
    }
  }

  if (has_stage(c, "dpp")) {
    DppOptions o;
    o.delta = param(c, "dpp_delta") * (s.problem.final_time - s.initial.horizon());
    o.samples_outer = c.samples_outer;
    o.samples_inner = c.samples_inner;
    o.max_inner_paths = c.max_inner_paths;
    const auto rep = dpp_residual(s.op, s.problem, s.initial, s.family, o, noise_of(c, rank, 3, c.dt));
    b.results["dpp"] = {{"delta", o.delta},
                        {"lhs", rep.lhs},
                        {"lhs_std_error", rep.lhs_std_error},
                        {"rhs", rep.rhs},
                        {"rhs_std_error", rep.rhs_std_error},
                        {"residual", rep.residual},
                        {"ci", rep.ci},
                        {"nested_bias", rep.nested_bias},
                        {"lhs_argmax", rep.lhs_argmax},
                        {"rhs_argmax", rep.rhs_argmax},
                        {"rhs_per_control", per_control_json(rep.rhs_per_control)}};
    b.tables["dpp_rhs_per_control"] = per_control_table(rep.rhs_per_control);
    b.add(make("dpp_residual", 3.0 * rep.ci - rep.residual,
               "|LHS - RHS| = " + num(rep.residual) + ", 3 ci = " + num(3.0 * rep.ci) +
                   ", nested bias " + num(rep.nested_bias)));
  }

  if (has_stage(c, "assumptions")) {
    const auto paths = random_paths(c.seed, s.problem.state_dim, 64, 2.0);
    const auto rep = spot_check_assumptions(s.problem, paths);
    b.results["assumptions"] = {{"max_growth_ratio", rep.max_growth_ratio}, {"max_lipschitz_ratio", rep.max_lipschitz_ratio},
                                {"lipschitz", s.problem.lipschitz}};
    b.add(make("assumption_growth_lipschitz", 1.0 - std::max(rep.max_growth_ratio, rep.max_lipschitz_ratio),
               "growth and Lipschitz ratios against L = " + num(s.problem.lipschitz)));
  }
}

HVector decaying_profile(int n, double amplitude) {
  HVector x(n);
  for (int k = 0; k < n; ++k) x[k] = amplitude / (k + 1);
  return x;
}

}  // namespace

void check_path_budget(const ExperimentConfig& config, std::size_t samples, std::size_t steps,
                       const std::string& what) {
  const double load = static_cast<double>(samples) * static_cast<double>(steps);
  if (load > config.max_path_steps) {
    throw BudgetExceeded(what + ": " + num(load) + " path steps exceed budget.max_path_steps = " +
                         num(config.max_path_steps));
  }
}

// ---------------------------------------------------------------------------------------------

ResultBundle run_parabolic(const ExperimentConfig& c) {
  ParabolicParams p;
  p.modes = c.truncation;
  p.noise_rank = c.noise_rank;
  p.scale = c.operator_scale;
  p.theta = param(c, "theta");
  p.sigma = param(c, "sigma");
  p.rho = param(c, "rho");
  p.final_time = c.final_time;
  p.measure = parse_measure(c.params.at("measure").get<std::string>());
  p.controls = family_values(c);
  SpdeSetup s{make_operator(c), parabolic_problem(p), DiscretePath::point(decaying_profile(p.modes, param(c, "initial_amplitude"))),
              make_family(c)};
  ResultBundle b;
  b.scenario = ScenarioId::parabolic_control;
  b.results["measure"] = to_string(p.measure);
  spde_pipeline(c, s, b);
  return b;
}

ResultBundle run_hyperbolic(const ExperimentConfig& c) {
  HyperbolicParams p;
  p.modes = c.truncation;
  p.noise_rank = c.noise_rank;
  p.scale = c.operator_scale;
  p.theta = param(c, "theta");
  p.sigma = param(c, "sigma");
  p.rho = param(c, "rho");
  p.final_time = c.final_time;
  p.measure = parse_measure(c.params.at("measure").get<std::string>());
  p.controls = family_values(c);
  HVector x0 = HVector::Zero(2 * p.modes);
  const HVector prof = decaying_profile(p.modes, param(c, "initial_amplitude"));
  for (int k = 0; k < p.modes; ++k) x0[2 * k] = prof[k];
  SpdeSetup s{hyperbolic_operator(p), hyperbolic_problem(p), DiscretePath::point(x0), make_family(c)};
  ResultBundle b;
  b.scenario = ScenarioId::hyperbolic_control;
  b.results["measure"] = to_string(p.measure);
  spde_pipeline(c, s, b);
  return b;
}

// ---------------------------------------------------------------------------------------------

ResultBundle run_quadratic_growth(const ExperimentConfig& c) {
  QuadraticParams p;
  p.modes = c.truncation;
  p.noise_rank = c.noise_rank;
  p.scale = c.operator_scale;
  p.sigma = param(c, "sigma");
  p.nu1 = param(c, "nu1");
  p.bound = param(c, "bound");
  p.final_time = c.final_time;
  p.controls = family_values(c);
  const SpectralOperator op = make_operator(c);
  const ControlProblem problem = quadratic_problem(p);
  const DiscretePath initial = DiscretePath::point(decaying_profile(p.modes, param(c, "initial_amplitude")));
  const auto family = make_family(c);
  const NoiseSpec noise = noise_of(c, p.noise_rank, 0, c.dt);
  const double t = initial.horizon();
  const double T = c.final_time;
  const std::size_t steps = step_count(t, T, c.dt);
  check_path_budget(c, c.samples * (family.size() + 1), steps, "value");

  ResultBundle b;
  b.scenario = ScenarioId::quadratic_growth;
  const auto v = value_enumerate(op, problem, initial, family, noise, c.samples);
  const auto zero = cost_J(op, problem, initial, ControlProcess::constant(ControlPoint::Zero(1), "u=0"), noise, c.samples);
  const double radius = energy_ball_radius(p, sup_norm(initial));

  // E int_t^T |u|^2 of each (deterministic) control.
  auto energy = [&](const ControlProcess& u) {
    double e = 0.0;
    const auto grid = DiscretePath::uniform_grid(T, steps);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      if (grid[k] < t - 1e-12) continue;
      e += u.at(grid[k]).squaredNorm() * (grid[k + 1] - grid[k]);
    }
    return e;
  };
  Table table;
  table.columns = {"control", "energy", "excluded", "J", "std_error", "margin"};
  double worst = kInf;
  std::size_t excluded = 0;
  bool argmax_excluded = false;
  json rows = json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double e = energy(family[i]);
    const bool out = e > radius;
    const double margin = zero.value - 1.0 - v.per_control[i].value;
    if (out) {
      ++excluded;
      worst = std::min(worst, margin);
      if (i == v.argmax_index) argmax_excluded = true;
    }
    table.rows.push_back({family[i].label, e, out, v.per_control[i].value, v.per_control[i].std_error, margin});
    rows.push_back({{"control", family[i].label}, {"energy", e}, {"excluded", out}, {"J", v.per_control[i].value}});
  }
  b.tables["energy_ball"] = table;
  b.results["value"] = {{"value", v.value}, {"std_error", v.std_error}, {"argmax", v.argmax}};
  b.results["baseline_zero_control"] = {{"value", zero.value}, {"std_error", zero.std_error}};
  b.results["energy_ball"] = {{"radius", radius}, {"excluded", excluded}, {"controls", rows},
                              {"value_upper_bound", p.bound * (1.0 + T - t)}};
  {
    Contract ct = make("energy_ball_exclusion", argmax_excluded ? -1.0 : (excluded ? worst : 0.0),
                       std::to_string(excluded) + " controls beyond E int |u|^2 > " + num(radius) +
                           "; each has J <= J(0) - 1");
    if (argmax_excluded) ct.detail += "; argmax lies outside the ball";
    b.add(ct);
  }
  b.add(make("value_upper_bound", p.bound * (1.0 + T - t) - v.value, "V <= L (1 + T - t)"));
  b.add(make("baseline_finite", std::isfinite(zero.value) ? 0.0 : -1.0, "J(gamma, 0) = " + num(zero.value)));

  // Time regularity over the controls inside the ball.
  std::vector<ControlProcess> inside;
  for (const auto& u : family)
    if (energy(u) <= radius) inside.push_back(u);
  std::vector<double> gaps;
  for (double g : param_list(c, "holder_gaps")) gaps.push_back(g * T);
  if (!inside.empty() && !gaps.empty()) {
    check_path_budget(c, c.samples * inside.size() * (gaps.size() + 1), steps, "regularity");
    const auto rep = regularity_checks(op, problem, inside, {}, initial, gaps, noise, c.samples);
    PlotData plot;
    plot.columns = {"delta", "abs_diff"};
    double quarter = 0.0;
    for (std::size_t i = 0; i < rep.time_gaps.size(); ++i) {
      plot.rows.push_back({rep.time_gaps[i], rep.time_diffs[i]});
      quarter = std::max(quarter, rep.time_diffs[i] / std::pow(rep.time_gaps[i], 0.25));
    }
    b.plots["time_regularity"] = plot;
    const double slope = rep.time_slope;
    b.results["time_regularity"] = {{"gaps", rep.time_gaps}, {"diffs", rep.time_diffs}, {"fitted_exponent", slope},
                                    {"quarter_holder_constant", quarter}};
    // The quarter exponent is an upper bound on roughness: a fit at or above 1/4 is consistent.
    b.add(make("holder_exponent_at_least_quarter", slope - 0.25, "fitted exponent " + num(slope)));
    b.add(make("holder_exponent_in_window", std::min(slope - 0.15, 0.4 - slope),
               "fitted exponent " + num(slope) + " against [0.15, 0.4]", false));
  }
  return b;
}

// ---------------------------------------------------------------------------------------------

ResultBundle run_markovian_benchmark(const ExperimentConfig& c) {
  BenchmarkParams p;
  p.amplitude = param(c, "amplitude");
  p.final_time = c.final_time;
  p.controls = family_values(c);
  const MarkovianSpec spec = benchmark_spec(p);
  const ControlProblem problem = benchmark_problem(p);
  const SpectralOperator op = SpectralOperator::zero(1);
  const auto family = make_family(c);
  const auto domain = param_list(c, "domain");
  if (domain.size() != 2 || !(domain[0] < domain[1])) throw ConfigError("expected [lower, upper]", "/params/domain");
  const double T = c.final_time;

  std::vector<std::pair<double, double>> points;
  for (const auto& e : c.params.at("points")) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("points are [t, x] pairs", "/params/points");
    const double t = e[0].get<double>(), x = e[1].get<double>();
    if (!(t >= 0.0 && t < T) || !(x > domain[0] && x < domain[1]))
      throw ConfigError("point outside [0, T) x domain", "/params/points");
    points.emplace_back(t, x);
  }
  std::vector<double> times;
  for (const auto& [t, x] : points) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  ResultBundle b;
  b.scenario = ScenarioId::markovian_benchmark;
  const bool regime = benchmark_regime_holds(p);
  b.results["explicit_regime"] = regime;

  // Finite differences with the grid controls.
  FdOptions fo;
  fo.output_times = times;
  for (const auto& [t, x] : points) fo.probes.push_back(HVector::Constant(1, x));
  const double h = param(c, "fd_h");
  const FdSolution fd = markovian_fd_solve(spec, FdGrid{{domain[0]}, {domain[1]}, h, 0.0}, fo);
  const double ref = fd.refinement_estimate;

  // Dynamic programming oracle.
  DpOptions dopt;
  dopt.dt = param(c, "dp_dt");
  dopt.quadrature_nodes = static_cast<int>(c.params.at("dp_nodes").get<std::int64_t>());
  dopt.output_times = times;
  const DpSolution dp = discrete_control_dp(spec, domain[0], domain[1], param(c, "dp_h"), dopt);

  // Monte Carlo over the constant controls.
  Table table;
  table.columns = {"t", "x", "mc", "mc_std_error", "fd", "dp", "explicit"};
  double s_mf = kInf, s_md = kInf, s_fd = kInf, max_se = 0.0;
  json rows = json::array();
  for (const auto& [t, x] : points) {
    const DiscretePath init = t == 0.0 ? DiscretePath::point(HVector::Constant(1, x))
                                       : DiscretePath::constant(HVector::Constant(1, x), {0.0, t});
    check_path_budget(c, c.samples * family.size(), step_count(t, T, c.dt), "monte carlo");
    const auto v = value_enumerate(op, problem, init, family, noise_of(c, 1, 0, c.dt), c.samples);
    const double vf = fd.value_at(fd.snapshot(t), HVector::Constant(1, x));
    const double vd = dp.value_at(dp.snapshot(t), x);
    const double ve = regime ? benchmark_value(p, t, x).value : std::nan("");
    max_se = std::max(max_se, v.std_error);
    s_mf = std::min(s_mf, std::max(3.0 * v.std_error, 2.0 * ref) - std::abs(v.value - vf));
    s_md = std::min(s_md, std::max(3.0 * v.std_error, 2.0 * ref) - std::abs(v.value - vd));
    s_fd = std::min(s_fd, 2.0 * ref - std::abs(vf - vd));
    table.rows.push_back({t, x, v.value, v.std_error, vf, vd, regime ? json(ve) : json(nullptr)});
    rows.push_back({{"t", t}, {"x", x}, {"mc", v.value}, {"mc_std_error", v.std_error}, {"mc_argmax", v.argmax},
                    {"fd", vf}, {"dp", vd}, {"explicit", regime ? json(ve) : json(nullptr)}});
  }
  b.tables["cross_check"] = table;
  b.results["cross_check"] = rows;
  b.results["fd"] = {{"h", fd.h}, {"tau", fd.tau}, {"steps", fd.steps}, {"refinement_estimate", ref}};
  b.add(make("mc_vs_fd", s_mf, "|MC - FD| <= max(3 stderr, 2 ref), ref = " + num(ref)));
  b.add(make("mc_vs_dp", s_md, "|MC - DP| <= max(3 stderr, 2 ref)"));
  b.add(make("fd_vs_dp", s_fd, "|FD - DP| <= 2 ref"));

  // Continuous-control relaxation against the Hopf-Cole formula.
  {
    const double a = p.amplitude;
    auto phi = [a](double x) { return x + a * std::sin(x); };
    FdOptions ro = fo;
    ro.hamiltonian = quadratic_relaxation_hamiltonian();
    double umax = 0.0;
    for (double u : p.controls) umax = std::max(umax, std::abs(u));
    ro.drift_bound = std::max(umax, 1.0 + std::abs(a));
    ro.boundary = [phi, T](double t, const HVector& x) { return hopf_cole_oracle(phi, t, x[0], T); };
    const FdSolution rel = markovian_fd_solve(spec, FdGrid{{domain[0]}, {domain[1]}, h, 0.0}, ro);
    double slack = kInf;
    json hc = json::array();
    for (const auto& [t, x] : points) {
      const double vr = rel.value_at(rel.snapshot(t), HVector::Constant(1, x));
      const double vh = hopf_cole_oracle(phi, t, x, T);
      slack = std::min(slack, 2.0 * rel.refinement_estimate - std::abs(vr - vh));
      hc.push_back({{"t", t}, {"x", x}, {"fd_relaxed", vr}, {"hopf_cole", vh}});
    }
    b.results["relaxation"] = {{"points", hc}, {"refinement_estimate", rel.refinement_estimate}};
    b.add(make("hopf_cole_vs_relaxation", slack, "|FD_relaxed - HopfCole| <= 2 ref, ref = " + num(rel.refinement_estimate)));
  }

  PlotData profile;
  profile.columns = {"x", "fd", "dp", "explicit"};
  for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.05) {
    profile.rows.push_back({x, fd.value_at(fd.snapshot(times.front()), HVector::Constant(1, x)),
                            dp.value_at(dp.snapshot(times.front()), x),
                            regime ? benchmark_value(p, times.front(), x).value : std::nan("")});
  }
  b.plots["value_profile"] = profile;

  if (!regime) return b;

  // Viscosity checks on the explicit solution.
  const double tol = 2.0 * ref + 3.0 * max_se;
  HamiltonianSpec hs{problem, op};
  JetFunctional exact = [p](const PathView& g) {
    const auto j = benchmark_value(p, g.horizon(), g.terminal()[0]);
    FunctionalJet out;
    out.value = j.value;
    out.dt = j.dt;
    out.dx = HVector::Constant(1, j.dx);
    out.dxx = HMatrix::Constant(1, 1, j.dxx);
    out.a_star_dx = HVector::Zero(1);
    return out;
  };
  {
    KeyedStream rng(c.seed, 11);
    const auto n = static_cast<std::size_t>(c.params.at("residual_points").get<std::int64_t>());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = rng.uniform(0.0, 0.95 * T);
      const double x = rng.uniform(-2.0, 2.0);
      const auto pt = t == 0.0 ? DiscretePath::point(HVector::Constant(1, x))
                               : DiscretePath::constant(HVector::Constant(1, x), {0.0, t});
      worst = std::max(worst, std::abs(classical_residual(hs, exact, pt)));
    }
    b.results["classical_residual"] = {{"points", n}, {"max_abs", worst}, {"tol", tol}};
    b.add(make("classical_residual", tol - worst, "max |residual| = " + num(worst) + " at " + std::to_string(n) + " points"));
  }
  {
    const auto n = static_cast<std::size_t>(c.params.at("tangency_tests").get<std::int64_t>());
    const double kappa = param(c, "kappa");
    // FD snapshots on the horizons used by the families.
    std::set<double> needed;
    for (std::size_t i = 0; i < n; ++i) {
      const double t0 = 0.1 + 0.8 * static_cast<double>(i / 2) / std::max<double>(1.0, static_cast<double>(n / 2));
      for (double dtau : {0.0, 0.05, 0.1}) needed.insert(std::round((t0 + dtau) * 1e6) / 1e6);
    }
    FdOptions to;
    to.output_times.assign(needed.begin(), needed.end());
    to.refinement = false;
    const FdSolution fdt = markovian_fd_solve(spec, FdGrid{{domain[0]}, {domain[1]}, h, 0.0}, to);
    const std::function<double(const DiscretePath&)> w = [&fdt](const DiscretePath& g) {
      return fdt.value_at(fdt.snapshot(g.horizon()), g.terminal());
    };

    double worst = kInf;
    std::size_t on_target = 0;
    Table tt;
    tt.columns = {"test", "kind", "t", "x", "candidate_t", "candidate_x", "slack"};
    for (std::size_t i = 0; i < n; ++i) {
      const double t0 = std::round((0.1 + 0.8 * static_cast<double>(i / 2) / std::max<double>(1.0, static_cast<double>(n / 2))) * 1e6) / 1e6;
      const double x0 = -1.0 + 2.0 * static_cast<double>((7 * i) % n) / static_cast<double>(n);
      const ViscosityKind kind = i % 2 == 0 ? ViscosityKind::sub : ViscosityKind::super;
      const double sign = kind == ViscosityKind::sub ? 1.0 : -1.0;
      TestFunctional test;
      // Sub: phi = V + kappa (|x - x0|^2 + s - t0) touches w from above; super: -(V - kappa (...)).
      test.smooth = [p, t0, x0, kappa, sign](const PathView& g) {
        const double s = g.horizon(), x = g.terminal()[0];
        const auto j = benchmark_value(p, s, x);
        FunctionalJet out;
        out.value = sign * j.value + kappa * ((x - x0) * (x - x0) + (s - t0));
        out.dt = sign * j.dt + kappa;
        out.dx = HVector::Constant(1, sign * j.dx + 2.0 * kappa * (x - x0));
        out.dxx = HMatrix::Constant(1, 1, sign * j.dxx + 2.0 * kappa);
        out.a_star_dx = HVector::Zero(1);
        return out;
      };
      const DiscretePath anchor = t0 == 0.0 ? DiscretePath::point(HVector::Constant(1, x0))
                                            : DiscretePath::constant(HVector::Constant(1, x0), {0.0, t0});
      // Cycle through the gauge classes; every fourth test uses the smooth part alone.
      GaugeTerm g;
      switch (i % 4) {
        case 0:
          g.kind = GaugeTermKind::terminal_distance;
          g.weight = 0.05;
          g.anchor = anchor;
          g.power = 2;
          break;
        case 1:
          g.kind = GaugeTermKind::time_square;
          g.weight = 0.5;
          g.reference_time = t0;
          break;
        case 2:
          g.kind = GaugeTermKind::anchored_upsilon;
          g.weight = 0.01;
          g.anchor = anchor;
          g.params = {2, 3.0};
          break;
        default:
          break;
      }
      if (i % 4 != 3) test.gauge.push_back(g);
      std::vector<DiscretePath> members;
      for (double dtau : {0.0, 0.05, 0.1}) {
        const double s = std::round((t0 + dtau) * 1e6) / 1e6;
        for (int k = -6; k <= 6; ++k) {
          const double x = x0 + 0.1 * k;
          members.push_back(DiscretePath::constant(HVector::Constant(1, x), {0.0, s}));
        }
      }
      const std::size_t cand = family_extremum(op, w, test, members, kind, t0);
      if (members[cand].horizon() == t0 && std::abs(members[cand].terminal()[0] - x0) < 1e-12) ++on_target;
      const auto rep = tangency_check(hs, w, test, cand, members, kind, tol);
      worst = std::min(worst, rep.slack + tol);
      tt.rows.push_back({static_cast<std::uint64_t>(i), kind == ViscosityKind::sub ? "sub" : "super", t0, x0,
                         members[cand].horizon(), members[cand].terminal()[0], rep.slack});
    }
    b.tables["tangency"] = tt;
    b.results["tangency"] = {{"tests", n}, {"candidate_at_touching_point", on_target}, {"tol", tol},
                             {"min_slack_plus_tol", worst}};
    b.add(make("viscosity_tangency", worst, std::to_string(n) + " tests, slack >= -tol with tol = " + num(tol)));
  }
  return b;
}

// ---------------------------------------------------------------------------------------------
// Gauge suite

namespace {

DiscretePath sweep_path(KeyedStream& rng, const SweepParams& p, int dim) {
  const std::size_t steps = 1 + rng.below(p.steps);
  Eigen::MatrixXd v(dim, steps + 1);
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (int i = 0; i < dim; ++i) v(i, j) = rng.uniform(-p.scale, p.scale);
  return DiscretePath(DiscretePath::uniform_grid(rng.uniform(0.1, 1.0), steps), v);
}

const GaugeParams kSweepGauges[] = {{2, 3.0}, {3, 3.0}, {3, 5.0}};

}  // namespace

Contract sweep_sandwich(const SweepParams& p) {
  KeyedStream rng(p.seed, 21);
  double worst = kInf;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < p.count; ++i) {
    const int dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.max_dim)));
    const auto path = sweep_path(rng, p, dim);
    const double R = sup_norm(path), x = path.terminal().norm();
    for (const auto& g : kSweepGauges) {
      const double u = eval_upsilon(g, path);
      const double lo = std::pow(R, 2 * g.m) + (g.M - 3.0) * std::pow(x, 2 * g.m);
      const double hi = 3.0 * std::pow(R, 2 * g.m) + (g.M - 3.0) * std::pow(x, 2 * g.m);
      const double s = std::min(u - lo * (1.0 - 1e-12), hi * (1.0 + 1e-12) - u) / std::max(hi, 1e-300);
      if (s < 0.0) ++bad;
      worst = std::min(worst, s);
    }
  }
  return make("gauge_sandwich", worst, std::to_string(p.count) + " paths x 3 (m, M), " + std::to_string(bad) + " violations");
}

Contract sweep_eps_bounds(const SweepParams& p) {
  KeyedStream rng(p.seed, 22);
  double worst = kInf;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < p.count; ++i) {
    const int dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.max_dim)));
    const auto path = sweep_path(rng, p, dim);
    const double R = sup_norm(path), x = path.terminal().norm();
    for (double eps : {0.1, 1.0, rng.uniform(0.01, 2.0)}) {
      const EpsGaugeParams e{eps};
      const double u = eval_upsilon_eps(e, path);
      const double scale = std::max(3.0 * R * R, 1.0);
      double s = std::min(u - std::max(R * R - eps / 2.0, 0.0) + 1e-12 * scale, 3.0 * R * R * (1.0 + 1e-12) - u) / scale;
      s = std::min(s, (6.0 * x + 1e-12 - grad_upsilon_eps(e, path).norm()) / std::max(6.0 * x, 1.0));
      s = std::min(s, (30.0 + 1e-12 - hess_upsilon_eps(e, path).norm()) / 30.0);
      if (s < 0.0) ++bad;
      worst = std::min(worst, s);
    }
  }
  return make("upsilon_eps_bounds", worst,
              std::to_string(p.count) + " paths x 3 eps: value bounds, |d_x| <= 6|x|, |d_xx| <= 30; " + std::to_string(bad) + " violations");
}

Contract sweep_derivative_oracle(const SweepParams& p, const std::vector<double>& epsilons) {
  KeyedStream rng(p.seed, 23);
  double worst_rel = 0.0;
  std::size_t checked = 0;
  auto compare = [&](const PathFunctional& f, const DiscretePath& path, const HVector& gx, const HMatrix& hx) {
    // Stencil reach stays well inside the 1% no-tie margin.
    DupireOptions opt;
    opt.h_space = 2e-3 * (1.0 + sup_norm(path));
    opt.richardson = true;
    const auto d = dupire_derivatives(f, path, opt);
    worst_rel = std::max(worst_rel, (d.dx - gx).norm() / std::max(1.0, gx.norm()));
    worst_rel = std::max(worst_rel, (d.dxx - hx).norm() / std::max(1.0, hx.norm()));
    ++checked;
  };
  // Paths whose terminal value is not within 1% of the earlier running maximum (no tie).
  auto draw = [&]() {
    while (true) {
      const int dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.max_dim)));
      auto path = sweep_path(rng, p, dim);
      if (path.size() < 2) continue;
      const double r = sup_norm(path.prefix(path.size() - 1));
      if (std::abs(path.terminal().norm() - r) > 1e-2 * (1.0 + r)) return path;
    }
  };
  for (const auto& g : kSweepGauges) {
    PathFunctional f{[g](const PathView& v) { return eval_upsilon(g, v); }};
    for (std::size_t i = 0; i < p.count; ++i) {
      const auto path = draw();
      compare(f, path, grad_upsilon(g, path), hess_upsilon(g, path));
    }
  }
  for (double eps : epsilons) {
    const EpsGaugeParams e{eps};
    PathFunctional f{[e](const PathView& v) { return eval_upsilon_eps(e, v); }};
    for (std::size_t i = 0; i < p.count; ++i) {
      const auto path = draw();
      compare(f, path, grad_upsilon_eps(e, path), hess_upsilon_eps(e, path));
    }
  }
  return make("derivative_oracle", 1e-5 - worst_rel,
              std::to_string(checked) + " paths, worst relative gap " + num(worst_rel));
}

Contract sweep_subadditivity(const SweepParams& p) {
  KeyedStream rng(p.seed, 24);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < p.count; ++i) {
    const int dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.max_dim)));
    const std::size_t steps = 1 + rng.below(p.steps);
    const auto grid = DiscretePath::uniform_grid(rng.uniform(0.1, 1.0), steps);
    Eigen::MatrixXd a(dim, steps + 1), b(dim, steps + 1);
    for (Eigen::Index j = 0; j <= static_cast<Eigen::Index>(steps); ++j)
      for (int d = 0; d < dim; ++d) {
        a(d, j) = rng.uniform(-p.scale, p.scale);
        b(d, j) = rng.uniform(-p.scale, p.scale);
      }
    for (const auto& g : kSweepGauges)
      if (!check_subadditivity(g, DiscretePath(grid, a), DiscretePath(grid, b))) ++bad;
  }
  return make("subadditivity", bad == 0 ? 0.0 : -static_cast<double>(bad),
              std::to_string(p.count) + " pairs x 3 (m, M), " + std::to_string(bad) + " violations");
}

Contract sweep_g_convexity(int grid_size) {
  double worst = kInf;
  for (int m : {1, 2, 3})
    for (double M : {3.0, 5.0}) worst = std::min(worst, check_g_convexity(GaugeParams{m, M}, grid_size));
  return make("g_convexity", worst + 1e-12, "min g'' over " + std::to_string(grid_size) + " points = " + num(worst));
}

std::pair<Contract, Contract> sweep_borwein_preiss(const BpSweepParams& p) {
  std::size_t certified = 0, idempotent = 0, runs = 0, ties = 0;
  std::size_t longest = 0;
  for (std::size_t f = 0; f < p.families; ++f) {
    const CandidateFamily fam = random_family(derive_seed(p.seed, 0x4250, f), p.size, 1, 2, 1.0);
    PsiParams pp;
    pp.w1 = [](const PathView& g) { return std::sin(g.terminal()[0]) + 0.1 * g.horizon(); };
    pp.w2 = [](const PathView& g) { return std::cos(g.terminal()[0]) - 1.0; };
    const FamilyFunctional psi = make_psi(fam, pp);
    std::vector<double> vals;
    for (const auto& m : fam.members) vals.push_back(psi(m));
    const double sup = *std::max_element(vals.begin(), vals.end());
    // Start: the lowest member that is still eps-optimal.
    std::size_t start = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    for (std::size_t j = 0; j < vals.size(); ++j)
      if (vals[j] >= sup - p.epsilon && vals[j] < vals[start]) start = j;
    for (auto sel : {AnchorSelection::exact, AnchorSelection::slack}) {
      const auto r = borwein_preiss(psi, fam, p.epsilon, start, sel);
      ++runs;
      if (verify_certificate(r, psi, fam)) ++certified;
      ties += r.certificate.ties.size();
      longest = std::max(longest, r.anchors.size());
      // Idempotence: the principle applied to its own output functional on the forward cone
      // {t >= t_hat} returns the same point and value, and a repeated run is identical.
      CandidateFamily cone;
      cone.gauge = fam.gauge;
      cone.op = fam.op;
      std::size_t hat = 0;
      for (std::size_t j = 0; j < fam.members.size(); ++j) {
        if (fam.members[j].time() < fam.members[r.point].time()) continue;
        if (j == r.point) hat = cone.members.size();
        cone.members.push_back(fam.members[j]);
      }
      const FamilyFunctional perturbed = perturbed_functional(r, psi, fam);
      const auto again = borwein_preiss(perturbed, cone, p.epsilon, hat, sel);
      const auto repeat = borwein_preiss(psi, fam, p.epsilon, start, sel);
      const bool same = again.point == hat && again.penalized_value == r.penalized_value &&
                        repeat.point == r.point && repeat.anchors == r.anchors &&
                        repeat.penalized_value == r.penalized_value;
      if (same) ++idempotent;
    }
  }
  return {make("bp_certificates", certified == runs ? 0.0 : -static_cast<double>(runs - certified),
               std::to_string(certified) + "/" + std::to_string(runs) + " certified, longest anchor chain " +
                   std::to_string(longest) + ", ties reported " + std::to_string(ties)),
          make("bp_idempotence", idempotent == runs ? 0.0 : -static_cast<double>(runs - idempotent),
               std::to_string(idempotent) + "/" + std::to_string(runs) + " reruns bit-identical")};
}

ResultBundle run_gauge_suite(const ExperimentConfig& c) {
  ResultBundle b;
  b.scenario = ScenarioId::gauge_suite;
  SweepParams sp;
  sp.seed = c.seed;
  sp.count = c.samples;
  sp.max_dim = static_cast<int>(c.params.at("max_dim").get<std::int64_t>());
  sp.steps = static_cast<std::size_t>(c.params.at("path_steps").get<std::int64_t>());
  if (sp.max_dim < 1 || sp.steps < 1) throw ConfigError("max_dim and path_steps must be positive", "/params");
  b.add(sweep_sandwich(sp));
  b.add(sweep_eps_bounds(sp));
  SweepParams op = sp;
  op.count = static_cast<std::size_t>(c.params.at("oracle_paths").get<std::int64_t>());
  b.add(sweep_derivative_oracle(op, param_list(c, "epsilons")));
  SweepParams pairs = sp;
  pairs.count = static_cast<std::size_t>(c.params.at("pairs").get<std::int64_t>());
  b.add(sweep_subadditivity(pairs));
  b.add(sweep_g_convexity(static_cast<int>(c.params.at("convexity_grid").get<std::int64_t>())));
  BpSweepParams bp;
  bp.seed = c.seed;
  bp.families = static_cast<std::size_t>(c.params.at("bp_families").get<std::int64_t>());
  bp.size = static_cast<std::size_t>(c.params.at("bp_size").get<std::int64_t>());
  bp.epsilon = param(c, "bp_epsilon");
  const auto [cert, idem] = sweep_borwein_preiss(bp);
  b.add(cert);
  b.add(idem);
  Table t;
  t.columns = {"contract", "passed", "slack", "detail"};
  for (const auto& ct : b.contracts) t.rows.push_back({ct.name, ct.passed, ct.slack, ct.detail});
  b.tables["gauge_suite"] = t;
  return b;
}

ResultBundle run_scenario(const ExperimentConfig& config) {
  switch (config.scenario) {
    case ScenarioId::parabolic_control: return run_parabolic(config);
    case ScenarioId::hyperbolic_control: return run_hyperbolic(config);
    case ScenarioId::quadratic_growth: return run_quadratic_growth(config);
    case ScenarioId::markovian_benchmark: return run_markovian_benchmark(config);
    case ScenarioId::gauge_suite: return run_gauge_suite(config);
  }
  throw ConfigError("unknown scenario");
}

}  // namespace pdhjb::harness
