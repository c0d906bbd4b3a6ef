#pragma once

#include <functional>
#include <vector>

#include "pdhjb/problem.hpp"

namespace pdhjb {

// State-dependent data F(t, x, u), G(t, x, u), q(t, x, r, z, u), phi(x) on 1 or 2 retained modes,
// with a diagonal linear part A = diag(rates).
struct MarkovianSpec {
  int dim = 1;
  std::vector<double> rates;
  std::function<HVector(double, const HVector&, const ControlPoint&)> drift;
  std::function<HMatrix(double, const HVector&, const ControlPoint&)> diffusion;
  std::function<double(double, const HVector&, double, const NoiseVector&, const ControlPoint&)> running;
  std::function<double(const HVector&)> terminal;
  std::vector<ControlPoint> controls;
  double final_time = 1.0;
  double lipschitz_r = 0.0;  // Lipschitz constant of q in r (enters the CFL bound)
  bool time_homogeneous = false;  // F, G, q independent of t: coefficients tabulated once
  bool running_rz_free = false;   // q independent of (r, z): tabulated per level

  void validate() const;
};

struct FdGrid {
  std::vector<double> lower;
  std::vector<double> upper;
  double h = 0.01;
  double tau = 0.0;  // <= 0: largest step allowed by the monotonicity condition
};

// Replaces the max over controls in 1-D: H(t, x, r, p_forward, p_backward, p_xx).
using UpwindHamiltonian = std::function<double(double, double, double, double, double, double)>;

// Godunov form of sup_u (u p - u^2/2) + p_xx / 2 (continuous-control relaxation).
UpwindHamiltonian quadratic_relaxation_hamiltonian();

struct FdOptions {
  std::vector<double> output_times;  // snapshots kept (T is always kept)
  std::vector<HVector> probes;       // points for the refinement estimate
  bool refinement = true;            // also solve with 2h
  std::function<double(double, const HVector&)> boundary;  // default phi(e^{(T-t)A} x)
  UpwindHamiltonian hamiltonian;     // optional 1-D override
  double drift_bound = 0.0;          // |b| bound for the CFL condition with an override
};

struct FdSolution {
  std::vector<std::vector<double>> axes;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;  // flattened, axis 0 fastest
  double h = 0.0;
  double tau = 0.0;
  std::size_t steps = 0;
  double refinement_estimate = 0.0;  // max |V_h - V_2h| over the probes at the earliest snapshot

  // Linear (1-D) or bilinear (2-D) interpolation at snapshot `k`.
  double value_at(std::size_t k, const HVector& x) const;
  std::size_t snapshot(double t) const;
};

FdSolution markovian_fd_solve(const MarkovianSpec& spec, const FdGrid& grid, const FdOptions& options = {});

// Gauss-Hermite nodes and weights for the standard normal law (weights sum to 1).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_hermite(int n);

// log E exp(phi(x + sqrt(T - t) xi)); n and 2n nodes must agree within tol, doubling up to 1024.
double hopf_cole_oracle(const std::function<double(double)>& phi, double t, double x, double T,
                        int nodes = 64, double tol = 1e-10);

struct DpOptions {
  double dt = 1.0 / 64.0;
  int quadrature_nodes = 24;
  std::vector<double> output_times;
  std::function<double(double, double)> boundary;  // outside the grid; default phi(e^{(T-t)A} x)
};

struct DpSolution {
  std::vector<double> axis;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  double value_at(std::size_t k, double x) const;  // cubic B-spline
  std::size_t snapshot(double t) const;
};

// Discrete-time dynamic program over the control set with Gaussian transitions
// x' = e^{dt A}(x + F dt + G dW) and cubic-spline interpolation (1-D).
DpSolution discrete_control_dp(const MarkovianSpec& spec, double lower, double upper, double h,
                               const DpOptions& options);

}  // namespace pdhjb
