#pragma once

// Shared fixtures: a seeded corpus of random spectra and of random Lipschitz
// test functions.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wgl/chaos.hpp"
#include "wgl/grid.hpp"

namespace wgl::testing {

// m <= max_size eigenvalues uniform in [-bound, bound], none tiny.
inline std::vector<SpectralForm> random_spectra(std::size_t count, std::uint64_t seed,
                                                std::size_t max_size = 10, double bound = 3.0) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> size(1, max_size);
  std::uniform_real_distribution<double> value(-bound, bound);
  std::vector<SpectralForm> out;
  while (out.size() < count) {
    std::vector<double> c(size(gen));
    for (auto& x : c) {
      do x = value(gen);
      while (std::fabs(x) < 0.05);
    }
    out.emplace_back(std::move(c));
  }
  return out;
}

// Same corpus rescaled so that sum c^2 = nu.
inline std::vector<SpectralForm> normalized_spectra(std::size_t count, std::uint64_t seed,
                                                    double nu) {
  auto forms = random_spectra(count, seed);
  for (auto& f : forms) f = f.scaled(std::sqrt(nu / f.power_sum(2)));
  return forms;
}

// Piecewise-cubic Hermite interpolant through random knots (values and
// slopes), sampled on the grid and rescaled to lip_norm 1.
inline GridFunction random_lipschitz(const GridSpec& grid, std::mt19937_64& gen,
                                     std::size_t knots = 12) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs(knots), ys(knots), ms(knots);
  const double step = (grid.hi - grid.lo) / static_cast<double>(knots - 1);
  for (std::size_t k = 0; k < knots; ++k) {
    xs[k] = grid.lo + step * static_cast<double>(k);
    ys[k] = 3.0 * u(gen);
    ms[k] = u(gen);
  }
  auto f = [&](double x) {
    std::size_t k = std::min<std::size_t>(knots - 2, static_cast<std::size_t>((x - grid.lo) / step));
    const double t = (x - xs[k]) / step;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * ys[k] + h10 * step * ms[k] + h01 * ys[k + 1] + h11 * step * ms[k + 1];
  };
  const auto raw = GridFunction::sample(grid, f);
  return raw * (1.0 / raw.lip_norm());
}

inline std::vector<GridFunction> lipschitz_corpus(const GridSpec& grid, std::size_t count,
                                                  std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<GridFunction> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_lipschitz(grid, gen));
  return out;
}

inline double c_nu(double nu) { return std::max(1.0, 2.0 / nu); }

}  // namespace wgl::testing
