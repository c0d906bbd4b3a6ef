#include "pdhjb/rng.hpp"

#include <cmath>
#include <numbers>

#include "pdhjb/errors.hpp"

namespace pdhjb {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

PhiloxCounter block(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample,
                    std::uint64_t step, std::uint32_t index) {
  if (sample > 0xFFFFFFFFull || step > 0xFFFFFFFFull) {
    throw InputError("keyed rng: sample or step index exceeds 32 bits");
  }
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32_10({static_cast<std::uint32_t>(sample), stream,
                        static_cast<std::uint32_t>(step), index},
                       key);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(tag)) + index);
}

void keyed_uniforms(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample,
                    std::uint64_t step, double* out, int count) {
  for (int j = 0; j < count; j += 2) {
    const PhiloxCounter r = block(seed, stream, sample, step, static_cast<std::uint32_t>(j / 2));
    out[j] = to_open_unit(r[0], r[1]);
    if (j + 1 < count) out[j + 1] = to_open_unit(r[2], r[3]);
  }
}

void keyed_normals(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample,
                   std::uint64_t step, double* out, int count) {
  for (int j = 0; j < count; j += 2) {
    const PhiloxCounter r = block(seed, stream, sample, step, static_cast<std::uint32_t>(j / 2));
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    out[j] = rad * std::cos(ang);
    if (j + 1 < count) out[j + 1] = rad * std::sin(ang);
  }
}

double KeyedStream::uniform() {
  if (buffered_ == 0) {
    keyed_uniforms(seed_, stream_, counter_ & 0xFFFFFFFFull, counter_ >> 32, buffer_.data(), 2);
    ++counter_;
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double KeyedStream::normal() {
  if (has_normal_) {
    has_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  spare_normal_ = rad * std::sin(2.0 * std::numbers::pi * u2);
  has_normal_ = true;
  return rad * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t KeyedStream::below(std::uint64_t n) {
  if (n == 0) throw InputError("KeyedStream::below: empty range");
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace pdhjb
