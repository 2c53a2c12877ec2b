#include "wgl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "wgl/errors.hpp"

namespace wgl {

GridSpec::GridSpec(double lo_, double hi_, std::size_t n) : lo(lo_), hi(hi_), n_points(n) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    std::ostringstream msg;
    msg << "grid requires finite lo < hi, got [" << lo << ", " << hi << "]";
    throw ValidationError(msg.str());
  }
  if (n_points < 16) throw ValidationError("grid requires at least 16 points");
}

double GridSpec::node(std::size_t i) const {
  if (i + 1 == n_points) return hi;
  return lo + spacing() * static_cast<double>(i);
}

std::size_t GridSpec::cell_of(double x) const {
  if (!(x > lo)) return 0;
  const double pos = (x - lo) / spacing();
  auto k = static_cast<std::size_t>(pos);
  return std::min(k, n_points - 2);
}

GridSpec GridSpec::centered_gamma_default(double nu, std::size_t n_points) {
  if (!(nu > 0.0)) throw DomainError("centered Gamma grid requires nu > 0");
  const double tail = 2.0 * boost::math::gamma_q_inv(0.5 * nu, 1e-12);
  const double width = std::max(14.0 * std::sqrt(nu), tail);
  return GridSpec(-nu - 6.0, -nu + width, n_points);
}

GridFunction::GridFunction(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n_points) {
    throw ValidationError("grid function: value count does not match the grid");
  }
  const double h = grid_.spacing();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ValidationError("grid function: non-finite value");
    sup_norm_ = std::max(sup_norm_, std::fabs(values_[i]));
    if (i > 0) lip_norm_ = std::max(lip_norm_, std::fabs(values_[i] - values_[i - 1]) / h);
  }
}

GridFunction GridFunction::sample(const GridSpec& grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) v[i] = f(grid.node(i));
  return GridFunction(grid, std::move(v));
}

double GridFunction::second_difference_norm() const {
  const double h = grid_.spacing();
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < values_.size(); ++i) {
    best = std::max(best, std::fabs(values_[i + 1] - 2.0 * values_[i] + values_[i - 1]) / (h * h));
  }
  return best;
}

double GridFunction::operator()(double x) const {
  const double h = grid_.spacing();
  const std::size_t n = values_.size();
  if (!(x > grid_.lo)) return values_.front() + (x - grid_.lo) * (values_[1] - values_[0]) / h;
  if (!(x < grid_.hi)) return values_.back() + (x - grid_.hi) * (values_[n - 1] - values_[n - 2]) / h;
  const std::size_t k = grid_.cell_of(x);
  const double x0 = grid_.node(k);
  const double w = (x - x0) / grid_.spacing();
  return values_[k] + w * (values_[k + 1] - values_[k]);
}

GridFunction GridFunction::operator+(const GridFunction& other) const {
  if (!(grid_ == other.grid_)) throw ValidationError("grid function sum: grids differ");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.values_[i];
  return GridFunction(grid_, std::move(v));
}

GridFunction GridFunction::operator*(double a) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= a;
  return GridFunction(grid_, std::move(v));
}

}  // namespace wgl
