#include "wgl/numeric.hpp"

#include <cmath>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "wgl/errors.hpp"

namespace wgl::numeric {

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, unsigned max_depth) {
  if (a == b) return {};
  // Global adaptive Gauss-Kronrod: always bisect the interval with the
  // largest error estimate until the summed error meets the tolerance.
  struct Piece {
    double a, b, value, error;
    unsigned depth;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
  auto eval = [&f](double lo, double hi, unsigned depth) {
    double err = 0.0;
    const double v = Rule::integrate(f, lo, hi, 0, 0.0, &err);
    return Piece{lo, hi, v, err, depth};
  };
  std::priority_queue<Piece> heap;
  heap.push(eval(a, b, 0));
  double value = heap.top().value;
  double error = heap.top().error;
  const std::size_t max_pieces = 4000;
  while (error > std::max(abs_tol, rel_tol * std::fabs(value)) && heap.size() < max_pieces) {
    Piece worst = heap.top();
    if (worst.depth >= max_depth) break;
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Piece left = eval(worst.a, mid, worst.depth + 1);
    const Piece right = eval(mid, worst.b, worst.depth + 1);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().value;
    error += heap.top().error;
  }
  if (!std::isfinite(value) || error > std::max(abs_tol, rel_tol * std::fabs(value))) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge on [" << a << ", " << b
        << "]: estimate " << value << ", error " << error << ", tolerance " << abs_tol;
    throw NumericalError(msg.str());
  }
  return {value, error};
}

QuadResult integrate_singular(const std::function<double(double)>& f, double a, double b,
                              double rel_tol) {
  if (a == b) return {};
  thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
  double error = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  auto g = [&f](double x) { return f(x); };
  const double value = rule.integrate(g, a, b, rel_tol, &error, &l1, &levels);
  if (!std::isfinite(value)) {
    throw NumericalError("tanh-sinh quadrature produced a non-finite value");
  }
  return {value, error};
}

const std::array<double, 16>& GaussLegendre16::nodes() {
  static const std::array<double, 16> x = [] {
    std::array<double, 16> out{};
    const auto& half = boost::math::quadrature::gauss<double, 16>::abscissa();
    for (std::size_t i = 0; i < 8; ++i) {
      out[i] = -half[i];
      out[8 + i] = half[i];
    }
    return out;
  }();
  return x;
}

const std::array<double, 16>& GaussLegendre16::weights() {
  static const std::array<double, 16> w = [] {
    std::array<double, 16> out{};
    const auto& half = boost::math::quadrature::gauss<double, 16>::weights();
    for (std::size_t i = 0; i < 8; ++i) {
      out[i] = half[i];
      out[8 + i] = half[i];
    }
    return out;
  }();
  return w;
}

double gauss_legendre16(const std::function<double(double)>& f, double a, double b) {
  return gauss_legendre16_inline(f, a, b);
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_loglog: length mismatch");
  if (x.size() < 2) throw ValidationError("fit_loglog: need at least two points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw ValidationError("fit_loglog: non-positive value cannot be log-transformed");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace wgl::numeric
