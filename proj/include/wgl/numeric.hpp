#pragma once

// Quadrature and regression helpers shared across modules.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wgl::numeric {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (21 point) on [a, b]. Throws NumericalError when
// the error estimate exceeds max(abs_tol, rel_tol * |value|).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol = 1e-12, unsigned max_depth = 24);

// Tanh-sinh on [a, b]; tolerates integrable endpoint singularities.
QuadResult integrate_singular(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-12);

// Fixed 16-point Gauss-Legendre rule on [a, b].
double gauss_legendre16(const std::function<double(double)>& f, double a, double b);

template <class F>
double gauss_legendre16_inline(F&& f, double a, double b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares of log(y) on log(x).
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

// 16-point Gauss-Legendre abscissae/weights on [-1, 1].
struct GaussLegendre16 {
  static const std::array<double, 16>& nodes();
  static const std::array<double, 16>& weights();
};


template <class F>
double gauss_legendre16_inline(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& x = GaussLegendre16::nodes();
  const auto& w = GaussLegendre16::weights();
  double s = 0.0;
  for (std::size_t i = 0; i < 16; ++i) s += w[i] * f(mid + half * x[i]);
  return half * s;
}

}  // namespace wgl::numeric
