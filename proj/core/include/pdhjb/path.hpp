#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdhjb/hilbert.hpp"

namespace pdhjb {

// Values on an explicit grid 0 = s_0 < ... < s_n = horizon; between grid points the
// path is left-constant (cadlag).
class DiscretePath {
 public:
  DiscretePath() = default;
  DiscretePath(std::vector<double> grid, Eigen::MatrixXd values);

  static DiscretePath point(const HVector& x);
  static DiscretePath constant(const HVector& x, std::vector<double> grid);
  static std::vector<double> uniform_grid(double horizon, std::size_t steps);

  const std::vector<double>& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t size() const { return grid_.size(); }
  int dim() const { return static_cast<int>(values_.rows()); }
  double horizon() const { return grid_.back(); }
  Eigen::MatrixXd::ConstColXpr value(std::size_t k) const { return values_.col(k); }
  HVector terminal() const { return values_.col(values_.cols() - 1); }
  // Left-constant interpolation at sigma in [0, horizon].
  HVector at(double sigma) const;
  DiscretePath prefix(std::size_t count) const;

 private:
  std::vector<double> grid_;
  Eigen::MatrixXd values_;
};

// Non-owning view of the first `count` grid points of a path, optionally carrying the
// running sup-norm and running integral so hot loops avoid O(n) rescans.
class PathView {
 public:
  PathView(const DiscretePath& p);  // NOLINT: implicit by design
  PathView(const std::vector<double>& grid, const Eigen::MatrixXd& values, std::size_t count,
           double sup_norm = -1.0, const HVector* integral = nullptr);

  std::size_t size() const { return count_; }
  int dim() const { return static_cast<int>(values_->rows()); }
  double horizon() const { return (*grid_)[count_ - 1]; }
  double time(std::size_t k) const { return (*grid_)[k]; }
  Eigen::MatrixXd::ConstColXpr value(std::size_t k) const { return values_->col(k); }
  Eigen::MatrixXd::ConstColXpr terminal() const { return values_->col(count_ - 1); }
  double sup_norm() const;
  HVector running_integral() const;
  DiscretePath to_path() const;

 private:
  const std::vector<double>* grid_;
  const Eigen::MatrixXd* values_;
  std::size_t count_;
  double sup_;
  const HVector* integral_;
};

struct PathFunctional {
  std::function<double(const PathView&)> eval;
  double growth_exponent = 0.0;
  double growth_constant = std::numeric_limits<double>::infinity();
  double operator()(const PathView& p) const { return eval(p); }
};

double sup_norm(const PathView& p);
// Integral of the left-constant interpolant over [0, horizon].
HVector running_integral(const PathView& p);

DiscretePath extend_flat(const DiscretePath& p, double s);
// Semigroup extension sampled at `points` equally spaced times in (t, s].
DiscretePath extend_semigroup(const SpectralOperator& op, const DiscretePath& p, double s,
                              std::size_t points = 1);
// Semigroup extension evaluated on the given increasing times in (t, s].
DiscretePath extend_semigroup_at(const SpectralOperator& op, const DiscretePath& p,
                                 const std::vector<double>& times);
DiscretePath vertical_bump(const DiscretePath& p, const HVector& h);

std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b);
// Both paths semigroup-extended to the later horizon and sampled on the union grid.
std::pair<DiscretePath, DiscretePath> align_semigroup(const SpectralOperator& op,
                                                      const DiscretePath& p,
                                                      const DiscretePath& q);
// eta^A_{s,s v t} - gamma^A_{t,t v s} for p = gamma_t, q = eta_s.
DiscretePath aligned_difference(const SpectralOperator& op, const DiscretePath& p,
                                const DiscretePath& q);
double metric_d_infty(const SpectralOperator& op, const DiscretePath& p, const DiscretePath& q);

enum class HorizontalExtension { flat, semigroup };

struct DupireOptions {
  double h_time = -1.0;   // <= 0: 1e-4 * final_time
  double h_space = -1.0;  // <= 0: 1e-4 * (1 + sup norm)
  std::optional<double> final_time;
  HorizontalExtension extension = HorizontalExtension::flat;
  const SpectralOperator* op = nullptr;  // required for the semigroup extension
  bool second_order = true;
  // Combine steps h and h/2 so the vertical error is O(h^4). Pair with a wider h_space: the
  // running-max part of a gauge is large and cancels in every difference.
  bool richardson = false;
};

struct DupireDerivatives {
  double dt = 0.0;
  HVector dx;
  HMatrix dxx;
  bool at_final_time = false;
  std::vector<std::string> warnings;
};

DupireDerivatives dupire_derivatives(const PathFunctional& f, const DiscretePath& p,
                                     const DupireOptions& options = {});

}  // namespace pdhjb
