#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wgl {

// Uniform 1-D grid [lo, hi] with n_points nodes.
struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n_points = 16;

  GridSpec() = default;
  GridSpec(double lo, double hi, std::size_t n_points);  // validates

  double spacing() const { return (hi - lo) / static_cast<double>(n_points - 1); }
  double node(std::size_t i) const;
  // Index k of the cell [node(k), node(k+1)] containing x, clamped to the grid.
  std::size_t cell_of(double x) const;

  bool operator==(const GridSpec&) const = default;

  // Default grid for centered-Gamma work: [-nu - 6, -nu + w] with 2048 nodes,
  // where w covers the G(nu) upper tail to mass 1e-12 and is at least 14*sqrt(nu).
  static GridSpec centered_gamma_default(double nu, std::size_t n_points = 2048);
};

// Piecewise-linear function on a grid, continued beyond the end nodes along
// the first and last cells. lip_norm is the largest chord slope, which is
// exactly the Lipschitz constant of the interpolant; sup_norm is taken over
// the nodes.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(GridSpec grid, std::vector<double> values);

  static GridFunction sample(const GridSpec& grid, const std::function<double(double)>& f);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  double lip_norm() const { return lip_norm_; }
  double sup_norm() const { return sup_norm_; }
  // ||h||_B = ||h||_inf + ||h'||_inf.
  double lipschitz_space_norm() const { return sup_norm_ + lip_norm_; }
  // max |second difference| / spacing^2.
  double second_difference_norm() const;

  double operator()(double x) const;

  GridFunction operator+(const GridFunction& other) const;
  GridFunction operator*(double a) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double lip_norm_ = 0.0;
  double sup_norm_ = 0.0;
};

}  // namespace wgl
