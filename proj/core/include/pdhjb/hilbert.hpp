#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pdhjb {

// Coefficients against the fixed orthonormal basis of the truncated space.
using HVector = Eigen::VectorXd;
using HMatrix = Eigen::MatrixXd;

// One spectral block. frequency == 0: a single coordinate with eigenvalue `rate`.
// frequency != 0: a 2x2 block [[rate, frequency], [-frequency, rate]] acting on two
// consecutive coordinates (complex pair rate -/+ i*frequency). rate <= 0 always.
struct SpectralMode {
  double rate = 0.0;
  double frequency = 0.0;
  int size() const { return frequency == 0.0 ? 1 : 2; }
};

class SpectralOperator {
 public:
  SpectralOperator() = default;
  explicit SpectralOperator(std::vector<SpectralMode> modes);

  static SpectralOperator diagonal(const std::vector<double>& eigenvalues);
  // lambda_k = -scale * k^2 * pi^2, k = 1..n.
  static SpectralOperator dirichlet_laplacian(int n, double scale = 1.0);
  static SpectralOperator zero(int n);
  // First-order wave system in energy coordinates: n rotation blocks with
  // frequencies sqrt(scale) * k * pi, dimension 2n.
  static SpectralOperator wave(int n, double scale = 1.0);

  int dim() const { return dim_; }
  const std::vector<SpectralMode>& modes() const { return modes_; }
  bool is_diagonal() const;
  // Real part of the spectrum per coordinate (the eigenvalues when diagonal).
  std::vector<double> eigenvalues() const;

  HVector apply(const HVector& x) const;
  HVector adjoint_apply(const HVector& x) const;
  HVector semigroup_apply(double t, const HVector& x) const;
  HMatrix semigroup_matrix(double t) const;
  HVector yosida_apply(double mu, const HVector& x) const;
  // The bounded operator A_mu = mu A (mu I - A)^{-1}, itself a valid spectral operator.
  SpectralOperator yosida(double mu) const;
  HMatrix matrix() const;

 private:
  std::vector<SpectralMode> modes_;
  int dim_ = 0;
};

// Precomputed e^{tA} for a fixed t; applied in place on hot loops.
class SemigroupStep {
 public:
  SemigroupStep() = default;
  SemigroupStep(const SpectralOperator& op, double t);
  void apply_inplace(HVector& x) const;
  HVector apply(const HVector& x) const;

 private:
  std::vector<SpectralMode> modes_;
  std::vector<double> decay_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  int dim_ = 0;
};

enum class ProjectionPart { head, tail };

HVector project(const HVector& x, int n, ProjectionPart part);
double inner(const HVector& x, const HVector& y);
double norm(const HVector& x);

}  // namespace pdhjb
