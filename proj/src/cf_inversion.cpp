#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>

#include <fftw3.h>

#include "wgl/chaos.hpp"
#include "wgl/errors.hpp"

namespace wgl {
namespace {

constexpr double kTailTarget = 1e-8;
constexpr std::size_t kMinTransform = std::size_t{1} << 16;
constexpr std::size_t kMaxTransform = std::size_t{1} << 22;

// |phi(t)| = prod (1 + 4 c^2 t^2)^{-1/4}
double cf_modulus(std::span<const double> c, double t) {
  double log_mod = 0.0;
  for (double x : c) log_mod -= 0.25 * std::log1p(4.0 * x * x * t * t);
  return std::exp(log_mod);
}

// Scaled chi-square(1) density of c (N^2 - 1).
double single_eigen_density(double c, double x) {
  const double u = (x + c) / c;
  if (!(u > 0.0)) return 0.0;
  return std::exp(-0.5 * u) / (std::sqrt(2.0 * std::numbers::pi * u) * std::fabs(c));
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

DensityResult density_cf_inversion(const SpectralForm& form, const GridSpec& grid,
                                   Execution exec) {
  const auto c = form.eigenvalues();
  std::vector<double> nz;
  for (double x : c) {
    if (x != 0.0) nz.push_back(x);
  }
  const bool all_pos = std::all_of(nz.begin(), nz.end(), [](double x) { return x > 0.0; });
  const bool all_neg = std::all_of(nz.begin(), nz.end(), [](double x) { return x < 0.0; });
  double c_max = 0.0;
  double sum_c = 0.0;
  for (double x : nz) {
    c_max = std::max(c_max, std::fabs(x));
    sum_c += x;
  }
  const double sd = std::sqrt(form.variance());
  if (grid.hi - grid.lo < 8.0 * sd) {
    throw ValidationError("density grid must span at least 8 standard deviations");
  }

  DensityResult out;
  out.grid = grid;
  // Density is unbounded (one eigenvalue) or jumps (two) at the support edge.
  const bool single_signed = all_pos || all_neg;
  const double edge = -sum_c;
  out.edge_singular = single_signed && nz.size() <= 2;

  if (nz.size() == 1) {
    out.method = "exact-gamma";
    if (out.edge_singular) {
      // Keep nodes at least one spacing inside the support.
      const double h = grid.spacing();
      std::size_t first = 0;
      std::size_t last = grid.n_points - 1;
      if (all_pos) {
        while (first < grid.n_points && grid.node(first) < edge + h) ++first;
      } else {
        while (last > 0 && grid.node(last) > edge - h) --last;
      }
      if (first + 16 > last + 1) throw ValidationError("density grid has too few interior nodes");
      out.grid = GridSpec(grid.node(first), grid.node(last), last - first + 1);
    }
    std::vector<double> v(out.grid.n_points);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = single_eigen_density(nz[0], out.grid.node(i));
    out.density = GridFunction(out.grid, std::move(v));
    return out;
  }

  out.method = "cf-fft";
  // Period long enough that wrapped tail mass is ~exp(-46).
  const double margin = 46.0 * c_max;
  const double span = grid.hi - grid.lo;
  const double min_period = span + 2.0 * margin;
  const double h = grid.spacing();

  std::size_t n_fft = kMinTransform;
  std::size_t stride = 0;
  double period = 0.0;
  double dt = 0.0;
  for (;; n_fft *= 2) {
    // FFT spacing h/stride makes every grid node an FFT node.
    stride = static_cast<std::size_t>(std::floor(static_cast<double>(n_fft) * h / min_period));
    if (stride >= 1) {
      period = static_cast<double>(n_fft) * h / static_cast<double>(stride);
      dt = 2.0 * std::numbers::pi / period;
      const double cutoff = 0.5 * static_cast<double>(n_fft) * dt;
      if (cf_modulus(nz, cutoff) <= kTailTarget) break;
    }
    if (n_fft >= kMaxTransform) break;
  }
  if (stride == 0) throw ValidationError("density grid spacing too fine for the transform size");
  const double dx = h / static_cast<double>(stride);
  const auto left = static_cast<std::size_t>(std::ceil(margin / dx));
  const double x0 = grid.lo - static_cast<double>(left) * dx;

  out.transform_size = n_fft;
  out.frequency_step = dt;
  out.frequency_cutoff = 0.5 * static_cast<double>(n_fft) * dt;
  out.tail_level = cf_modulus(nz, out.frequency_cutoff);

  const std::size_t n_half = n_fft / 2 + 1;
  std::unique_ptr<fftw_complex, FftwFree> spectrum(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_half)));
  std::unique_ptr<double, FftwFree> values(static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
  if (!spectrum || !values) throw NumericalError("density inversion: allocation failed");

  // Inputs for the c2r transform: conj(phi(t_j) e^{-i t_j x0}); its output
  // is the full two-sided trapezoid sum at x0 + k dx.
  const SpectralForm positive_form(nz);
  auto fill = [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t j = b; j < e; ++j) {
      const double t = static_cast<double>(j) * dt;
      const std::complex<double> y =
          char_function(positive_form, t) * std::polar(1.0, -t * x0);
      const double w = (j + 1 == n_half) ? 0.5 : 1.0;
      spectrum.get()[j][0] = w * y.real();
      spectrum.get()[j][1] = -w * y.imag();
    }
  };
  for_each_chunk(n_half, exec, fill);

  std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan;
#pragma omp critical(wgl_fftw_planner)
  plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n_fft), spectrum.get(), values.get(),
                                  FFTW_ESTIMATE));
  if (!plan) throw NumericalError("density inversion: FFTW planning failed");
  fftw_execute(plan.get());

  const double scale = dt / (2.0 * std::numbers::pi);
  std::size_t first = 0;
  std::size_t last = grid.n_points - 1;
  if (out.edge_singular) {
    // Truncation ringing near the jump decays like 1/(cutoff * distance).
    const double guard = std::max(h, 200.0 / out.frequency_cutoff);
    if (all_pos) {
      while (first < grid.n_points && grid.node(first) < edge + guard) ++first;
    } else {
      while (last > 0 && grid.node(last) > edge - guard) --last;
    }
    if (first + 16 > last + 1) throw ValidationError("density grid has too few interior nodes");
    out.grid = GridSpec(grid.node(first), grid.node(last), last - first + 1);
  }
  std::vector<double> dens(last - first + 1);
  for (std::size_t i = first; i <= last; ++i) {
    const std::size_t k = left + i * stride;
    const double f = scale * values.get()[k];
    dens[i - first] = std::max(f, 0.0);
  }
  out.density = GridFunction(out.grid, std::move(dens));
  return out;
}

}  // namespace wgl
