#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdhjb/hilbert.hpp"
#include "pdhjb/path.hpp"

namespace pdhjb {

using ControlPoint = Eigen::VectorXd;
using NoiseVector = Eigen::VectorXd;

// Piecewise-constant control: values[j] on [switch_times[j], switch_times[j+1]).
struct ControlProcess {
  std::vector<double> switch_times;
  std::vector<ControlPoint> values;
  std::string label;

  static ControlProcess constant(ControlPoint u, std::string label);
  const ControlPoint& at(double s) const;
  void validate() const;
};

struct ControlProblem {
  int state_dim = 1;
  int noise_dim = 1;
  double final_time = 1.0;
  // F(gamma, u) in H.
  std::function<HVector(const PathView&, const ControlPoint&)> drift;
  // G(gamma, u): state_dim x noise_dim, column j is the image of the j-th noise direction.
  std::function<HMatrix(const PathView&, const ControlPoint&)> diffusion;
  // q(gamma, y, z, u).
  std::function<double(const PathView&, double, const NoiseVector&, const ControlPoint&)> running;
  // phi(gamma_T).
  std::function<double(const PathView&)> terminal;
  double lipschitz = 1.0;
  // q does not read (y, z): the BSDE collapses to Y(t) = E[phi + int q].
  bool driver_yz_free = false;
  std::vector<ControlPoint> control_space;

  void validate() const;
};

struct NoiseSpec {
  int noise_dim = 1;
  std::uint64_t seed = 0;
  double dt = 1.0 / 64.0;
  std::uint32_t stream = 0;
};

// Number of steps of size dt covering [t, T]; throws unless dt divides T - t within 1e-12.
std::size_t step_count(double t, double T, double dt);

}  // namespace pdhjb
