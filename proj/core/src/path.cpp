#include "pdhjb/path.hpp"

#include <algorithm>
#include <cmath>

#include "pdhjb/errors.hpp"

namespace pdhjb {
namespace {

double time_tol(double s) { return 1e-12 * (1.0 + std::abs(s)); }

std::size_t index_at(const std::vector<double>& grid, double sigma) {
  auto it = std::upper_bound(grid.begin(), grid.end(), sigma + time_tol(sigma));
  if (it == grid.begin()) throw InputError("path: time before grid start");
  return static_cast<std::size_t>(it - grid.begin()) - 1;
}

double eval_or_throw(const PathFunctional& f, const DiscretePath& p) { return f(PathView(p)); }

}  // namespace

DiscretePath::DiscretePath(std::vector<double> grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty()) throw InputError("DiscretePath: empty grid");
  if (grid_.front() != 0.0) throw InputError("DiscretePath: grid must start at 0");
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k] > grid_[k - 1])) {
      throw InputError("DiscretePath: grid not strictly increasing at index " + std::to_string(k));
    }
  }
  if (static_cast<std::size_t>(values_.cols()) != grid_.size()) {
    throw InputError("DiscretePath: values length " + std::to_string(values_.cols()) +
                     " != grid length " + std::to_string(grid_.size()));
  }
  if (values_.rows() < 1) throw InputError("DiscretePath: zero-dimensional values");
}

DiscretePath DiscretePath::point(const HVector& x) {
  Eigen::MatrixXd v(x.size(), 1);
  v.col(0) = x;
  return DiscretePath({0.0}, std::move(v));
}

DiscretePath DiscretePath::constant(const HVector& x, std::vector<double> grid) {
  Eigen::MatrixXd v = x.replicate(1, static_cast<Eigen::Index>(grid.size()));
  return DiscretePath(std::move(grid), std::move(v));
}

std::vector<double> DiscretePath::uniform_grid(double horizon, std::size_t steps) {
  if (steps == 0) {
    if (horizon != 0.0) throw InputError("uniform_grid: zero steps with positive horizon");
    return {0.0};
  }
  if (!(horizon > 0.0)) throw InputError("uniform_grid: horizon must be positive");
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = horizon * static_cast<double>(k) / steps;
  g.back() = horizon;
  return g;
}

HVector DiscretePath::at(double sigma) const {
  if (sigma > horizon() + time_tol(horizon())) throw InputError("DiscretePath::at: beyond horizon");
  return values_.col(index_at(grid_, sigma));
}

DiscretePath DiscretePath::prefix(std::size_t count) const {
  if (count == 0 || count > size()) throw InputError("DiscretePath::prefix: bad count");
  return DiscretePath(std::vector<double>(grid_.begin(), grid_.begin() + count),
                      values_.leftCols(count));
}

PathView::PathView(const DiscretePath& p)
    : grid_(&p.grid()), values_(&p.values()), count_(p.size()), sup_(-1.0), integral_(nullptr) {}

PathView::PathView(const std::vector<double>& grid, const Eigen::MatrixXd& values,
                   std::size_t count, double sup_norm, const HVector* integral)
    : grid_(&grid), values_(&values), count_(count), sup_(sup_norm), integral_(integral) {
  if (count == 0 || count > grid.size() || static_cast<Eigen::Index>(count) > values.cols()) {
    throw InputError("PathView: bad prefix length");
  }
}

double PathView::sup_norm() const {
  if (sup_ >= 0.0) return sup_;
  double r = 0.0;
  for (std::size_t k = 0; k < count_; ++k) r = std::max(r, values_->col(k).norm());
  return r;
}

HVector PathView::running_integral() const {
  if (integral_ != nullptr) return *integral_;
  HVector acc = HVector::Zero(dim());
  for (std::size_t k = 0; k + 1 < count_; ++k) acc += ((*grid_)[k + 1] - (*grid_)[k]) * values_->col(k);
  return acc;
}

DiscretePath PathView::to_path() const {
  return DiscretePath(std::vector<double>(grid_->begin(), grid_->begin() + count_),
                      values_->leftCols(count_));
}

double sup_norm(const PathView& p) { return p.sup_norm(); }

HVector running_integral(const PathView& p) { return p.running_integral(); }

DiscretePath extend_flat(const DiscretePath& p, double s) {
  const double t = p.horizon();
  if (s < t - time_tol(t)) throw InputError("extend_flat: target time before horizon");
  if (s <= t + time_tol(t)) return p;
  std::vector<double> g = p.grid();
  g.push_back(s);
  Eigen::MatrixXd v(p.dim(), g.size());
  v.leftCols(p.size()) = p.values();
  v.col(p.size()) = p.terminal();
  return DiscretePath(std::move(g), std::move(v));
}

DiscretePath extend_semigroup(const SpectralOperator& op, const DiscretePath& p, double s,
                              std::size_t points) {
  const double t = p.horizon();
  if (s < t - time_tol(t)) throw InputError("extend_semigroup: target time before horizon");
  if (s <= t + time_tol(t)) return p;
  if (points == 0) throw InputError("extend_semigroup: need at least one point");
  std::vector<double> times(points);
  for (std::size_t k = 1; k <= points; ++k) times[k - 1] = t + (s - t) * static_cast<double>(k) / points;
  times.back() = s;
  return extend_semigroup_at(op, p, times);
}

DiscretePath extend_semigroup_at(const SpectralOperator& op, const DiscretePath& p,
                                 const std::vector<double>& times) {
  if (op.dim() != p.dim()) throw InputError("extend_semigroup: operator/path dimension mismatch");
  const double t = p.horizon();
  std::vector<double> g = p.grid();
  Eigen::MatrixXd v(p.dim(), p.size() + times.size());
  v.leftCols(p.size()) = p.values();
  const HVector x = p.terminal();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > g.back())) throw InputError("extend_semigroup: times must increase past horizon");
    g.push_back(times[k]);
    v.col(p.size() + k) = op.semigroup_apply(times[k] - t, x);
  }
  return DiscretePath(std::move(g), std::move(v));
}

DiscretePath vertical_bump(const DiscretePath& p, const HVector& h) {
  if (h.size() != p.dim()) throw InputError("vertical_bump: dimension mismatch");
  Eigen::MatrixXd v = p.values();
  v.col(v.cols() - 1) += h;
  return DiscretePath(p.grid(), std::move(v));
}

std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> merged;
  merged.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
  std::vector<double> out;
  out.reserve(merged.size());
  for (double s : merged) {
    if (out.empty() || s > out.back() + time_tol(out.back())) out.push_back(s);
  }
  return out;
}

std::pair<DiscretePath, DiscretePath> align_semigroup(const SpectralOperator& op,
                                                      const DiscretePath& p,
                                                      const DiscretePath& q) {
  if (p.dim() != q.dim() || op.dim() != p.dim()) throw InputError("align: dimension mismatch");
  const std::vector<double> u = union_grid(p.grid(), q.grid());
  auto sample = [&](const DiscretePath& path) {
    const double t = path.horizon();
    const HVector x = path.terminal();
    Eigen::MatrixXd v(path.dim(), u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (u[k] <= t + time_tol(t)) {
        v.col(k) = path.at(u[k]);
      } else {
        v.col(k) = op.semigroup_apply(u[k] - t, x);
      }
    }
    return DiscretePath(u, std::move(v));
  };
  return {sample(p), sample(q)};
}

DiscretePath aligned_difference(const SpectralOperator& op, const DiscretePath& p,
                                const DiscretePath& q) {
  auto [a, b] = align_semigroup(op, p, q);
  return DiscretePath(a.grid(), b.values() - a.values());
}

double metric_d_infty(const SpectralOperator& op, const DiscretePath& p, const DiscretePath& q) {
  return std::abs(p.horizon() - q.horizon()) + sup_norm(aligned_difference(op, p, q));
}

DupireDerivatives dupire_derivatives(const PathFunctional& f, const DiscretePath& p,
                                     const DupireOptions& options) {
  const int n = p.dim();
  const double t = p.horizon();
  const double final_time = options.final_time.value_or(t > 0.0 ? t : 1.0);
  const double r = sup_norm(p);
  const double ht = options.h_time > 0.0 ? options.h_time : 1e-4 * final_time;
  const double hx = options.h_space > 0.0 ? options.h_space : 1e-4 * (1.0 + r);
  if (!(ht > 0.0) || !(hx > 0.0)) throw InputError("dupire_derivatives: steps must be positive");
  if (options.richardson) {
    DupireOptions inner = options;
    inner.richardson = false;
    inner.h_space = hx;
    auto coarse = dupire_derivatives(f, p, inner);
    inner.h_space = hx / 2.0;
    auto fine = dupire_derivatives(f, p, inner);
    fine.dx = (4.0 * fine.dx - coarse.dx) / 3.0;
    fine.dxx = (4.0 * fine.dxx - coarse.dxx) / 3.0;
    return fine;
  }

  DupireDerivatives out;
  out.at_final_time = options.final_time.has_value() && t >= final_time - time_tol(final_time);
  if (out.at_final_time) {
    out.warnings.push_back("horizontal derivative evaluated at the final time with the one-sided rule");
  }

  const double f0 = eval_or_throw(f, p);
  double fmax = std::abs(f0);
  DiscretePath extended;
  if (options.extension == HorizontalExtension::semigroup) {
    if (options.op == nullptr) throw InputError("dupire_derivatives: semigroup extension needs an operator");
    extended = extend_semigroup(*options.op, p, t + ht);
  } else {
    extended = extend_flat(p, t + ht);
  }
  out.dt = (eval_or_throw(f, extended) - f0) / ht;

  auto bumped = [&](const HVector& h) {
    const double v = eval_or_throw(f, vertical_bump(p, h));
    fmax = std::max(fmax, std::abs(v));
    return v;
  };
  out.dx = HVector::Zero(n);
  out.dxx = HMatrix::Zero(n, n);
  std::vector<double> plus(n), minus(n);
  for (int i = 0; i < n; ++i) {
    const HVector e = hx * HVector::Unit(n, i);
    plus[i] = bumped(e);
    minus[i] = bumped(-e);
    out.dx[i] = (plus[i] - minus[i]) / (2.0 * hx);
    out.dxx(i, i) = (plus[i] - 2.0 * f0 + minus[i]) / (hx * hx);
  }
  if (options.second_order) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const HVector ei = hx * HVector::Unit(n, i);
        const HVector ej = hx * HVector::Unit(n, j);
        const double v = (bumped(ei + ej) - bumped(ei - ej) - bumped(ej - ei) + bumped(-ei - ej)) /
                         (4.0 * hx * hx);
        out.dxx(i, j) = v;
        out.dxx(j, i) = v;
      }
    }
  }
  // Round-off in a second difference is about eps*|f|/h^2; flag when it rivals the signal.
  const double roundoff = std::numeric_limits<double>::epsilon() * fmax / (hx * hx);
  if (roundoff > 1e-6 * (out.dxx.norm() + fmax / ((1.0 + r) * (1.0 + r)))) {
    out.warnings.push_back("vertical step small enough that cancellation dominates the second difference");
  }
  return out;
}

}  // namespace pdhjb
