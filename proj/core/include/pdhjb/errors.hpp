#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdhjb {

// Bad arguments: dimension mismatches, negative times, malformed paths.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A parameter combination the closed forms do not cover (e.g. hess with m = 1).
struct UnsupportedParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A check's precondition fails on the supplied data; message names the offender.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SimulationDiverged : std::runtime_error {
  SimulationDiverged(const std::string& what, std::size_t step_index)
      : std::runtime_error(what), step(step_index) {}
  std::size_t step;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative numerics that failed to settle (Picard divergence, quadrature, FD blow-up).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pdhjb
