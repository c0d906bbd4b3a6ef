#include "pdhjb/regression.hpp"

#include <cmath>

#include "pdhjb/errors.hpp"

namespace pdhjb {

Basis constant_basis() {
  return {1, "constant", [](const PathView&, double* out) { out[0] = 1.0; }};
}

Basis path_feature_basis(int dim) {
  if (dim < 1) throw InputError("path_feature_basis: dim must be positive");
  const int size = 1 + dim + dim * (dim + 1) / 2 + 1 + dim;
  return {size, "path_quadratic", [dim](const PathView& p, double* out) {
            const auto x = p.terminal();
            int c = 0;
            out[c++] = 1.0;
            for (int i = 0; i < dim; ++i) out[c++] = x[i];
            for (int i = 0; i < dim; ++i)
              for (int j = i; j < dim; ++j) out[c++] = x[i] * x[j];
            out[c++] = p.sup_norm();
            const HVector integral = p.running_integral();
            for (int i = 0; i < dim; ++i) out[c++] = integral[i];
          }};
}

Basis terminal_polynomial_basis(int dim, int degree) {
  if (dim < 1 || degree < 0) throw InputError("terminal_polynomial_basis: bad arguments");
  // Enumerate exponent vectors of total degree <= degree.
  std::vector<std::vector<int>> exps;
  std::vector<int> e(dim, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == dim) {
      exps.push_back(e);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[i] = k;
      rec(i + 1, left - k);
    }
    e[i] = 0;
  };
  rec(0, degree);
  const int size = static_cast<int>(exps.size());
  return {size, "terminal_poly" + std::to_string(degree), [exps, dim](const PathView& p, double* out) {
            const auto x = p.terminal();
            for (std::size_t k = 0; k < exps.size(); ++k) {
              double v = 1.0;
              for (int i = 0; i < dim; ++i)
                for (int j = 0; j < exps[k][i]; ++j) v *= x[i];
              out[k] = v;
            }
          }};
}

Projector::Projector(const Eigen::MatrixXd& design) : full_cols_(static_cast<int>(design.cols())) {
  const Eigen::Index n = design.rows();
  if (n == 0 || design.cols() == 0) throw InputError("Projector: empty design");
  bool have_constant = false;
  for (int c = 0; c < design.cols(); ++c) {
    const auto col = design.col(c);
    const double mean = col.mean();
    const double spread = (col.array() - mean).abs().maxCoeff();
    const bool constant = spread <= 1e-13 * (std::abs(mean) + 1e-300);
    if (constant) {
      if (have_constant || mean == 0.0) continue;
      have_constant = true;
    }
    active_.push_back(c);
  }
  if (active_.empty()) active_.push_back(0);
  x_.resize(n, static_cast<Eigen::Index>(active_.size()));
  scale_.resize(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const auto col = design.col(active_[k]);
    const double rms = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    scale_[k] = rms > 0.0 ? 1.0 / rms : 1.0;
    x_.col(k) = col * scale_[k];
  }
  Eigen::MatrixXd gram = (x_.transpose() * x_) / static_cast<double>(n);
  ldlt_.compute(gram);
  const auto d = ldlt_.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (ldlt_.info() != Eigen::Success || !(dmin > 1e-12 * dmax)) {
    gram.diagonal().array() += kRidge;
    ldlt_.compute(gram);
    ridge_used_ = true;
  }
}

Eigen::MatrixXd Projector::coefficients(const Eigen::MatrixXd& targets) const {
  if (targets.rows() != x_.rows()) throw InputError("Projector: target length mismatch");
  const Eigen::MatrixXd beta_scaled =
      ldlt_.solve((x_.transpose() * targets) / static_cast<double>(x_.rows()));
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(full_cols_, targets.cols());
  for (std::size_t k = 0; k < active_.size(); ++k) beta.row(active_[k]) = beta_scaled.row(k) * scale_[k];
  return beta;
}

Eigen::MatrixXd Projector::project(const Eigen::MatrixXd& targets) const {
  if (targets.rows() != x_.rows()) throw InputError("Projector: target length mismatch");
  const Eigen::MatrixXd beta_scaled =
      ldlt_.solve((x_.transpose() * targets) / static_cast<double>(x_.rows()));
  return x_ * beta_scaled;
}

}  // namespace pdhjb
