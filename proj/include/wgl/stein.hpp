#pragma once

// Centered-Gamma Stein equation  2(x + nu) f'(x) - x f(x) = h(x) - E h(G(nu)).
//
// h is a piecewise-linear grid function, continued beyond the grid along its
// end cells (so linear h is represented exactly). For such h
// every integral in the explicit solution reduces to per-cell moments of the
// weights p(t) (t = x + nu > 0) and u^{nu/2 - 1} e^{u/2} (u = -(x + nu) > 0),
// which a SteinOperator precomputes once per (grid, nu). The solution on the
// grid is therefore exact up to rounding for the interpolated h.

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "wgl/chaos.hpp"
#include "wgl/grid.hpp"
#include "wgl/linalg.hpp"
#include "wgl/parallel.hpp"

namespace wgl {

class SteinOperator;

// S(h) for one h, with the running integrals cached so that S(h)(x) costs
// O(1) per point.
class PreparedStein {
 public:
  double value_at(double x) const;
  double derivative_at(double x) const;
  double expectation() const { return eh_; }

  const std::vector<double>& node_values() const { return s_; }
  const std::vector<double>& node_derivatives() const { return ds_; }
  // max |lower + upper| over nodes; both integrals should cancel exactly.
  double cancellation_defect() const { return defect_; }

 private:
  friend class SteinOperator;
  const SteinOperator* op_ = nullptr;
  std::vector<double> ht_;     // h - E h at the nodes
  std::vector<double> lower_;  // integral of ht p over (-nu, x_i]
  std::vector<double> upper_;  // integral of ht p over [x_i, inf)
  std::vector<double> neg_;    // integral over u in [0, -(x_i + nu)] of ht w
  std::vector<double> s_;
  std::vector<double> ds_;
  double slope_lo_ = 0.0;  // slope of the first cell
  double slope_hi_ = 0.0;  // slope of the last cell
  double eh_ = 0.0;
  double defect_ = 0.0;

  // ht continued linearly beyond the grid.
  double ht_at(double x) const;
};

class SteinOperator {
 public:
  SteinOperator(const GridSpec& grid, const GammaTarget& target);

  // Shared instance per (grid, nu); readers never take a lock.
  static std::shared_ptr<const SteinOperator> cached(const GridSpec& grid,
                                                     const GammaTarget& target);

  const GridSpec& grid() const { return grid_; }
  const GammaTarget& target() const { return target_; }

  // E h(G(nu)) for grid values h.
  double expectation(std::span<const double> h) const;

  // S(h) with eh = E h(G(nu)).
  PreparedStein prepare(std::span<const double> h, double eh) const;
  PreparedStein prepare(std::span<const double> h) const { return prepare(h, expectation(h)); }

  // Matrix of S on the hat-function basis: column j = S(e_j) at the nodes.
  const DenseMatrix& matrix(Execution exec = Execution::parallel) const;
  DenseMatrix assemble_matrix(Execution exec) const;

  // Mass of G(nu) outside [lo, hi].
  double outside_mass() const { return below_mass_ + above_mass_; }

 private:
  struct Moments {
    double m0 = 0.0;  // integral of the weight
    double m1 = 0.0;  // integral of the weight times (x - left end), per unit x
  };
  friend class PreparedStein;
  // Raw moments (integral of w, integral of w * (x - xa)) over [xa, xb].
  Moments positive_piece(double xa, double xb) const;
  Moments negative_piece(double xa, double xb) const;
  double density_t(double t) const;

  GridSpec grid_;
  GammaTarget target_;
  double median_ = 0.0;
  double below_mass_ = 0.0;  // P(G < lo) when lo > -nu
  double above_mass_ = 0.0;  // P(G > hi)
  double below_ramp_ = 0.0;  // E (lo - G)_+
  double above_ramp_ = 0.0;  // E (G - hi)_+
  std::vector<Moments> pos_;  // per cell, t > 0 part
  std::vector<Moments> neg_;  // per cell, t < 0 part (u weight, oriented in x)
  std::vector<double> density_;  // p at nodes

  mutable std::once_flag matrix_once_;
  mutable std::unique_ptr<DenseMatrix> matrix_;
};

struct SteinSolution {
  GridFunction solution;
  GridFunction derivative;
  GammaTarget target{1.0};
  double expectation = 0.0;  // E h(G(nu))
  double quadrature_error_estimate = 0.0;
  std::shared_ptr<const SteinOperator> op;
  std::shared_ptr<const PreparedStein> prepared;

  // Continuous evaluation of S(h) and S(h)'.
  double value_at(double x) const { return prepared->value_at(x); }
  double derivative_at(double x) const { return prepared->derivative_at(x); }
};

// E h(G(nu)) for the interpolated grid function. Throws ValidationError when
// the grid leaves more than 1e-8 of the target mass outside [lo, hi].
double target_expectation(const GridFunction& h, const GammaTarget& target);
// E h(G(nu)) for a callable h, by adaptive quadrature against the density.
double target_expectation(const std::function<double(double)>& h, const GammaTarget& target,
                          double abs_tol = 1e-13);

SteinSolution solve_stein(const GridFunction& h, const GammaTarget& target);
GridFunction apply_S(const GridFunction& h, const GammaTarget& target);

// Dense solver for (I + lambda S) g = h on a fixed grid; factorizes once.
class FredholmSolver {
 public:
  FredholmSolver(const GridSpec& grid, const GammaTarget& target, double lambda,
                 Execution exec = Execution::parallel);

  double lambda() const { return lambda_; }
  double condition_estimate() const { return condition_; }

  // Solves and checks the residual with a fresh application of S.
  GridFunction solve(const GridFunction& h) const;
  // ||g + lambda S(g) - h||_inf at the nodes, S applied by quadrature.
  double residual(const GridFunction& g, const GridFunction& h) const;

 private:
  std::shared_ptr<const SteinOperator> op_;
  double lambda_;
  std::unique_ptr<LuFactorization> lu_;
  double condition_ = 0.0;
};

GridFunction solve_functional_equation(const GridFunction& h, double lambda,
                                       const GammaTarget& target);

// Uncentered Gamma(r, 1) Stein equation  x f' + (r - x) f = h - E h(X_r) on
// x >= 0, solved by adaptive quadrature (independent of SteinOperator).
GridFunction gamma_stein_classical(const GridFunction& h, double r);

}  // namespace wgl
