#include "pdhjb/hilbert.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "pdhjb/errors.hpp"

namespace pdhjb {
namespace {

void require_dim(const HVector& x, int dim, const char* what) {
  if (x.size() != dim) {
    throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) +
                     " vs " + std::to_string(dim) + ")");
  }
}

// A block acts as multiplication by zeta = rate - i*frequency on x1 + i*x2.
std::complex<double> as_complex(const SpectralMode& m) { return {m.rate, -m.frequency}; }

SpectralMode from_complex(std::complex<double> z) {
  return {z.real(), z.imag() == 0.0 ? 0.0 : -z.imag()};
}

}  // namespace

SpectralOperator::SpectralOperator(std::vector<SpectralMode> modes) : modes_(std::move(modes)) {
  for (const auto& m : modes_) {
    if (!std::isfinite(m.rate) || !std::isfinite(m.frequency)) {
      throw InputError("SpectralOperator: non-finite eigenvalue");
    }
    if (m.rate > 0.0) {
      throw InputError("SpectralOperator: eigenvalue " + std::to_string(m.rate) +
                       " > 0 does not generate a contraction");
    }
    dim_ += m.size();
  }
  if (dim_ < 1) throw InputError("SpectralOperator: empty spectrum");
}

SpectralOperator SpectralOperator::diagonal(const std::vector<double>& eigenvalues) {
  std::vector<SpectralMode> modes;
  modes.reserve(eigenvalues.size());
  for (double l : eigenvalues) modes.push_back({l, 0.0});
  return SpectralOperator(std::move(modes));
}

SpectralOperator SpectralOperator::dirichlet_laplacian(int n, double scale) {
  if (n < 1) throw InputError("dirichlet_laplacian: n must be positive");
  if (!(scale > 0.0)) throw InputError("dirichlet_laplacian: scale must be positive");
  std::vector<double> ev(n);
  for (int k = 1; k <= n; ++k) ev[k - 1] = -scale * k * k * std::numbers::pi * std::numbers::pi;
  return diagonal(ev);
}

SpectralOperator SpectralOperator::zero(int n) {
  if (n < 1) throw InputError("zero operator: n must be positive");
  return diagonal(std::vector<double>(n, 0.0));
}

SpectralOperator SpectralOperator::wave(int n, double scale) {
  if (n < 1) throw InputError("wave operator: n must be positive");
  if (!(scale > 0.0)) throw InputError("wave operator: scale must be positive");
  std::vector<SpectralMode> modes;
  for (int k = 1; k <= n; ++k) modes.push_back({0.0, std::sqrt(scale) * k * std::numbers::pi});
  return SpectralOperator(std::move(modes));
}

bool SpectralOperator::is_diagonal() const {
  for (const auto& m : modes_)
    if (m.frequency != 0.0) return false;
  return true;
}

std::vector<double> SpectralOperator::eigenvalues() const {
  std::vector<double> out;
  out.reserve(dim_);
  for (const auto& m : modes_)
    for (int j = 0; j < m.size(); ++j) out.push_back(m.rate);
  return out;
}

HVector SpectralOperator::apply(const HVector& x) const {
  require_dim(x, dim_, "apply");
  HVector y(dim_);
  int i = 0;
  for (const auto& m : modes_) {
    if (m.frequency == 0.0) {
      y[i] = m.rate * x[i];
      i += 1;
    } else {
      y[i] = m.rate * x[i] + m.frequency * x[i + 1];
      y[i + 1] = -m.frequency * x[i] + m.rate * x[i + 1];
      i += 2;
    }
  }
  return y;
}

HVector SpectralOperator::adjoint_apply(const HVector& x) const {
  require_dim(x, dim_, "adjoint_apply");
  HVector y(dim_);
  int i = 0;
  for (const auto& m : modes_) {
    if (m.frequency == 0.0) {
      y[i] = m.rate * x[i];
      i += 1;
    } else {
      y[i] = m.rate * x[i] - m.frequency * x[i + 1];
      y[i + 1] = m.frequency * x[i] + m.rate * x[i + 1];
      i += 2;
    }
  }
  return y;
}

HVector SpectralOperator::semigroup_apply(double t, const HVector& x) const {
  require_dim(x, dim_, "semigroup_apply");
  if (!(t >= 0.0)) throw InputError("semigroup_apply: negative time");
  return SemigroupStep(*this, t).apply(x);
}

HMatrix SpectralOperator::semigroup_matrix(double t) const {
  if (!(t >= 0.0)) throw InputError("semigroup_matrix: negative time");
  SemigroupStep step(*this, t);
  HMatrix out(dim_, dim_);
  for (int j = 0; j < dim_; ++j) out.col(j) = step.apply(HVector::Unit(dim_, j));
  return out;
}

HVector SpectralOperator::yosida_apply(double mu, const HVector& x) const {
  require_dim(x, dim_, "yosida_apply");
  return yosida(mu).apply(x);
}

SpectralOperator SpectralOperator::yosida(double mu) const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("yosida: mu must be positive");
  std::vector<SpectralMode> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) {
    if (m.frequency == 0.0) {
      out.push_back({mu * m.rate / (mu - m.rate), 0.0});
    } else {
      const auto z = as_complex(m);
      out.push_back(from_complex(mu * z / (mu - z)));
    }
  }
  return SpectralOperator(std::move(out));
}

HMatrix SpectralOperator::matrix() const {
  HMatrix out(dim_, dim_);
  for (int j = 0; j < dim_; ++j) out.col(j) = apply(HVector::Unit(dim_, j));
  return out;
}

SemigroupStep::SemigroupStep(const SpectralOperator& op, double t) : modes_(op.modes()), dim_(op.dim()) {
  if (!(t >= 0.0)) throw InputError("semigroup: negative time");
  for (const auto& m : modes_) {
    decay_.push_back(std::exp(m.rate * t));
    cos_.push_back(std::cos(m.frequency * t));
    sin_.push_back(std::sin(m.frequency * t));
  }
}

void SemigroupStep::apply_inplace(HVector& x) const {
  int i = 0;
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (modes_[k].frequency == 0.0) {
      x[i] *= decay_[k];
      i += 1;
    } else {
      const double a = x[i], b = x[i + 1];
      x[i] = decay_[k] * (cos_[k] * a + sin_[k] * b);
      x[i + 1] = decay_[k] * (-sin_[k] * a + cos_[k] * b);
      i += 2;
    }
  }
}

HVector SemigroupStep::apply(const HVector& x) const {
  require_dim(x, dim_, "semigroup");
  HVector y = x;
  apply_inplace(y);
  return y;
}

HVector project(const HVector& x, int n, ProjectionPart part) {
  if (n < 0 || n > x.size()) throw InputError("project: n out of range");
  HVector y = x;
  if (part == ProjectionPart::head) {
    y.tail(x.size() - n).setZero();
  } else {
    y.head(n).setZero();
  }
  return y;
}

double inner(const HVector& x, const HVector& y) {
  require_dim(y, static_cast<int>(x.size()), "inner");
  return x.dot(y);
}

double norm(const HVector& x) { return x.norm(); }

}  // namespace pdhjb
