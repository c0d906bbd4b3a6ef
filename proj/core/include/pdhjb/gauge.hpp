#pragma once

#include <utility>

#include "pdhjb/hilbert.hpp"
#include "pdhjb/path.hpp"

namespace pdhjb {

struct GaugeParams {
  int m = 3;
  double M = 3.0;
};

struct EpsGaugeParams {
  double epsilon = 1.0;
};

// Below this sup-norm the path is treated as identically zero.
inline constexpr double kZeroPathThreshold = 1e-300;

// Kernels in terms of the running sup-norm R and the terminal value x (R >= |x|).
double sm_kernel(const GaugeParams& g, double R, const HVector& x);
double upsilon_kernel(const GaugeParams& g, double R, const HVector& x);
HVector upsilon_grad_kernel(const GaugeParams& g, double R, const HVector& x);
HMatrix upsilon_hess_kernel(const GaugeParams& g, double R, const HVector& x);
double upsilon_eps_kernel(const EpsGaugeParams& e, double R, const HVector& x);
HVector upsilon_eps_grad_kernel(const EpsGaugeParams& e, double R, const HVector& x);
HMatrix upsilon_eps_hess_kernel(const EpsGaugeParams& e, double R, const HVector& x);

double eval_Sm(const GaugeParams& g, const PathView& p);
double eval_upsilon(const GaugeParams& g, const PathView& p);
HVector grad_upsilon(const GaugeParams& g, const PathView& p);
HMatrix hess_upsilon(const GaugeParams& g, const PathView& p);

// Two-path form: the semigroup-aligned difference eta^A - gamma^A, p = gamma_t, q = eta_s.
double eval_upsilon(const SpectralOperator& op, const GaugeParams& g, const DiscretePath& p,
                    const DiscretePath& q);

double eval_upsilon_eps(const EpsGaugeParams& e, const PathView& p);
HVector grad_upsilon_eps(const EpsGaugeParams& e, const PathView& p);
HMatrix hess_upsilon_eps(const EpsGaugeParams& e, const PathView& p);

// Upsilon(gamma_t, eta_s) + |s - t|^2.
double eval_bar_upsilon(const SpectralOperator& op, const GaugeParams& g, const DiscretePath& p,
                        const DiscretePath& q);
// Upsilon(p, q) + Upsilon(p', q') + |t - s|^2 for pairs sharing their horizon.
double eval_bar_upsilon_pair(const SpectralOperator& op, const GaugeParams& g,
                             const std::pair<DiscretePath, DiscretePath>& first,
                             const std::pair<DiscretePath, DiscretePath>& second);

// Caps on the vertical derivatives in terms of |x|.
double upsilon_grad_bound(const GaugeParams& g, double x_norm);
double upsilon_hess_bound(const GaugeParams& g, double x_norm);

bool check_subadditivity(const GaugeParams& g, const DiscretePath& p, const DiscretePath& q,
                         double tolerance = 1e-12);

// g(x) = (1 - x^{6m} + 3x^{4m} + (M-3)x^{2m})^{1/(2m)} on [0, 1] and its second derivative
// from the expanded polynomial form.
double g_convexity_value(const GaugeParams& g, double x);
double g_convexity_second_derivative(const GaugeParams& g, double x);
// Minimum of g'' over a uniform grid of `grid_size` points on [0, 1].
double check_g_convexity(const GaugeParams& g, int grid_size);

void validate(const GaugeParams& g);
void validate_gauge_type(const GaugeParams& g);

}  // namespace pdhjb
