#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdhjb/path.hpp"

namespace pdhjb {

// Maps a path prefix to `size` regression features written to `out`.
struct Basis {
  int size = 1;
  std::string name;
  std::function<void(const PathView&, double* out)> features;
};

Basis constant_basis();
// 1, terminal coordinates, their pairwise products (i <= j), running sup-norm and the
// coordinates of the running integral.
Basis path_feature_basis(int dim);
// Polynomials of total degree <= degree in the terminal coordinates (Markovian).
Basis terminal_polynomial_basis(int dim, int degree);

inline constexpr double kRidge = 1e-8;

// Least-squares projection onto the column span of a design matrix. Columns with no
// cross-sample variation beyond the first such column are dropped (they duplicate the
// intercept); remaining rank deficiency switches to a ridge of kRidge on the equilibrated
// normal equations.
class Projector {
 public:
  explicit Projector(const Eigen::MatrixXd& design);
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& targets) const;
  Eigen::MatrixXd project(const Eigen::MatrixXd& targets) const;
  bool ridge_used() const { return ridge_used_; }
  const std::vector<int>& active_columns() const { return active_; }

 private:
  Eigen::MatrixXd x_;  // active, scaled columns
  Eigen::VectorXd scale_;
  std::vector<int> active_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  int full_cols_ = 0;
  bool ridge_used_ = false;
};

}  // namespace pdhjb
