#include "pdhjb/gauge.hpp"

#include <algorithm>
#include <cmath>

#include "pdhjb/errors.hpp"

namespace pdhjb {
namespace {

double ipow(double base, int exponent) {
  double result = 1.0;
  for (int k = 0; k < exponent; ++k) result *= base;
  return result;
}

// u = |x|^2, returns (|x|^{2m}, D = R^{2m} - |x|^{2m}, R^{4m}).
struct Powers {
  double x2m;
  double d;
  double r4m;
};

Powers powers(int m, double R, double u) {
  const double r2m = ipow(R * R, m);
  const double x2m = ipow(u, m);
  return {x2m, std::max(r2m - x2m, 0.0), r2m * r2m};
}

}  // namespace

void validate(const GaugeParams& g) {
  if (g.m < 1) throw InputError("gauge: m must be >= 1");
  if (!std::isfinite(g.M)) throw InputError("gauge: M must be finite");
}

void validate_gauge_type(const GaugeParams& g) {
  validate(g);
  if (g.M < 3.0) throw InputError("gauge: M >= 3 required for gauge-type use");
}

double sm_kernel(const GaugeParams& g, double R, const HVector& x) {
  validate(g);
  if (R < kZeroPathThreshold) return 0.0;
  const Powers pw = powers(g.m, R, x.squaredNorm());
  return pw.d * pw.d * pw.d / pw.r4m;
}

double upsilon_kernel(const GaugeParams& g, double R, const HVector& x) {
  validate(g);
  if (R < kZeroPathThreshold) return 0.0;
  const Powers pw = powers(g.m, R, x.squaredNorm());
  return pw.d * pw.d * pw.d / pw.r4m + g.M * pw.x2m;
}

HVector upsilon_grad_kernel(const GaugeParams& g, double R, const HVector& x) {
  validate(g);
  if (R < kZeroPathThreshold) return HVector::Zero(x.size());
  const int m = g.m;
  const double u = x.squaredNorm();
  const Powers pw = powers(m, R, u);
  const double c = 6.0 * m * (pw.r4m - pw.d * pw.d) / pw.r4m + 2.0 * m * (g.M - 3.0);
  return c * ipow(u, m - 1) * x;
}

HMatrix upsilon_hess_kernel(const GaugeParams& g, double R, const HVector& x) {
  validate(g);
  if (g.m < 2) throw UnsupportedParameter("hess_upsilon: m = 1 has no second vertical derivative");
  const int n = static_cast<int>(x.size());
  if (R < kZeroPathThreshold) return HMatrix::Zero(n, n);
  const int m = g.m;
  const double u = x.squaredNorm();
  const Powers pw = powers(m, R, u);
  const double tail = (pw.r4m - pw.d * pw.d) / pw.r4m;
  const double um1 = ipow(u, m - 1);
  const double um2 = ipow(u, m - 2);
  const HMatrix xxt = x * x.transpose();
  HMatrix h = (24.0 * m * m * pw.d / pw.r4m * um1 * um1) * xxt;
  h += (12.0 * m * (m - 1) * tail * um2) * xxt;
  h += (4.0 * m * (m - 1) * (g.M - 3.0) * um2) * xxt;
  h.diagonal().array() += 6.0 * m * tail * um1 + 2.0 * m * (g.M - 3.0) * um1;
  return h;
}

double upsilon_eps_kernel(const EpsGaugeParams& e, double R, const HVector& x) {
  if (!(e.epsilon > 0.0)) throw InputError("upsilon_eps: epsilon must be positive");
  const double u = x.squaredNorm();
  const double d = std::max(R * R - u, 0.0);
  return d * d * d / (e.epsilon * e.epsilon + R * R * R * R) + 3.0 * u;
}

HVector upsilon_eps_grad_kernel(const EpsGaugeParams& e, double R, const HVector& x) {
  if (!(e.epsilon > 0.0)) throw InputError("upsilon_eps: epsilon must be positive");
  const double d = std::max(R * R - x.squaredNorm(), 0.0);
  const double c = e.epsilon * e.epsilon + R * R * R * R;
  return (6.0 - 6.0 * d * d / c) * x;
}

HMatrix upsilon_eps_hess_kernel(const EpsGaugeParams& e, double R, const HVector& x) {
  if (!(e.epsilon > 0.0)) throw InputError("upsilon_eps: epsilon must be positive");
  const double d = std::max(R * R - x.squaredNorm(), 0.0);
  const double c = e.epsilon * e.epsilon + R * R * R * R;
  HMatrix h = (24.0 * d / c) * (x * x.transpose());
  h.diagonal().array() += 6.0 - 6.0 * d * d / c;
  return h;
}

double eval_Sm(const GaugeParams& g, const PathView& p) {
  return sm_kernel(g, p.sup_norm(), p.terminal());
}

double eval_upsilon(const GaugeParams& g, const PathView& p) {
  return upsilon_kernel(g, p.sup_norm(), p.terminal());
}

HVector grad_upsilon(const GaugeParams& g, const PathView& p) {
  return upsilon_grad_kernel(g, p.sup_norm(), p.terminal());
}

HMatrix hess_upsilon(const GaugeParams& g, const PathView& p) {
  return upsilon_hess_kernel(g, p.sup_norm(), p.terminal());
}

double eval_upsilon(const SpectralOperator& op, const GaugeParams& g, const DiscretePath& p,
                    const DiscretePath& q) {
  return eval_upsilon(g, aligned_difference(op, p, q));
}

double eval_upsilon_eps(const EpsGaugeParams& e, const PathView& p) {
  return upsilon_eps_kernel(e, p.sup_norm(), p.terminal());
}

HVector grad_upsilon_eps(const EpsGaugeParams& e, const PathView& p) {
  return upsilon_eps_grad_kernel(e, p.sup_norm(), p.terminal());
}

HMatrix hess_upsilon_eps(const EpsGaugeParams& e, const PathView& p) {
  return upsilon_eps_hess_kernel(e, p.sup_norm(), p.terminal());
}

double eval_bar_upsilon(const SpectralOperator& op, const GaugeParams& g, const DiscretePath& p,
                        const DiscretePath& q) {
  const double dt = p.horizon() - q.horizon();
  return eval_upsilon(op, g, p, q) + dt * dt;
}

double eval_bar_upsilon_pair(const SpectralOperator& op, const GaugeParams& g,
                             const std::pair<DiscretePath, DiscretePath>& first,
                             const std::pair<DiscretePath, DiscretePath>& second) {
  if (first.first.horizon() != first.second.horizon() ||
      second.first.horizon() != second.second.horizon()) {
    throw InputError("bar_upsilon_pair: components of a pair must share their horizon");
  }
  const double dt = first.first.horizon() - second.first.horizon();
  return eval_upsilon(op, g, first.first, second.first) +
         eval_upsilon(op, g, first.second, second.second) + dt * dt;
}

double upsilon_grad_bound(const GaugeParams& g, double x_norm) {
  return 2.0 * g.m * (3.0 + std::abs(g.M - 3.0)) * ipow(x_norm, 2 * g.m - 1);
}

double upsilon_hess_bound(const GaugeParams& g, double x_norm) {
  return 2.0 * g.m * (3.0 * (6.0 * g.m - 1.0) + (2.0 * g.m - 1.0) * std::abs(g.M - 3.0)) *
         ipow(x_norm, 2 * g.m - 2);
}

bool check_subadditivity(const GaugeParams& g, const DiscretePath& p, const DiscretePath& q,
                         double tolerance) {
  validate_gauge_type(g);
  if (p.grid() != q.grid()) throw InputError("check_subadditivity: paths must share their grid");
  const DiscretePath sum(p.grid(), p.values() + q.values());
  const double k = 1.0 / (2.0 * g.m);
  const double lhs = std::pow(eval_upsilon(g, sum), k);
  const double rhs = std::pow(eval_upsilon(g, p), k) + std::pow(eval_upsilon(g, q), k);
  return lhs <= rhs + tolerance;
}

double g_convexity_value(const GaugeParams& g, double x) {
  const int m = g.m;
  const double x2m = ipow(x, 2 * m);
  const double poly = 1.0 - x2m * x2m * x2m + 3.0 * x2m * x2m + (g.M - 3.0) * x2m;
  return std::pow(poly, 1.0 / (2.0 * m));
}

double g_convexity_second_derivative(const GaugeParams& g, double x) {
  validate(g);
  const int m = g.m;
  const double gv = g_convexity_value(g, x);
  const double x2m = ipow(x, 2 * m);
  const double x4m = x2m * x2m;
  const double x6m = x4m * x2m;
  const double x8m = x4m * x4m;
  const double lead = std::pow(gv, 1.0 - 4.0 * m);
  const double first = 3.0 * lead * ipow(x, 4 * m - 2) *
                       (2.0 * x8m - (2.0 * m + 7.0) * x6m + 6.0 * x4m - (6.0 * m - 1.0) * x2m +
                        8.0 * m - 2.0);
  const double second = lead * ipow(x, 2 * m - 2) * (g.M - 3.0) *
                        (-(8.0 * m + 2.0) * x6m + (6.0 * m + 3.0) * x4m + 2.0 * m - 1.0);
  return first + second;
}

double check_g_convexity(const GaugeParams& g, int grid_size) {
  validate_gauge_type(g);
  if (grid_size < 2) throw InputError("check_g_convexity: grid_size must be >= 2");
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_size; ++k) {
    const double x = static_cast<double>(k) / (grid_size - 1);
    lo = std::min(lo, g_convexity_second_derivative(g, x));
  }
  return lo;
}

}  // namespace pdhjb
