#pragma once

// Counter-based random numbers. A draw is addressed by (seed, stream, index,
// lane); nothing is carried between calls, so any partition of the index
// range across workers reproduces the same deviates bit-for-bit.

#include <array>
#include <cstdint>
#include <span>

namespace wgl {

// Philox4x32 with 10 rounds (Salmon et al. constants).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Inverse standard normal CDF (Wichura AS241, ~1e-16 relative accuracy).
double inverse_normal_cdf(double p);

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream() const { return stream_; }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t index, std::uint32_t lane) const;

  // Standard normal by inverse-CDF transform of uniform(index, lane).
  double normal(std::uint64_t index, std::uint32_t lane) const;

  // Fills out[j] = normal(index, j).
  void normals(std::uint64_t index, std::span<double> out) const;

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
};

}  // namespace wgl
