#pragma once

#include <array>
#include <cstdint>

namespace pdhjb {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);
// Independent seed for a named sub-stream (nested simulations, perturbations).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

// Standard normals keyed by (seed, stream, sample, step); the same key always yields the
// same numbers, independent of evaluation order or thread.
void keyed_normals(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample,
                   std::uint64_t step, double* out, int count);
// Uniforms in (0, 1) with the same keying scheme.
void keyed_uniforms(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample,
                    std::uint64_t step, double* out, int count);

// Sequential stream over a fixed key, for test-data generators and property sweeps.
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t seed, std::uint32_t stream = 0) : seed_(seed), stream_(stream) {}
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
  std::uint64_t counter_ = 0;
  std::array<double, 2> buffer_{};
  int buffered_ = 0;
  bool has_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace pdhjb
