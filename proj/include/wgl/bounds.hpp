#pragma once

// Cumulant distance M(F), the four-term Malliavin-Stein upper bound (unit
// constants), and Monte Carlo checks of the two integration-by-parts
// identities behind it.

#include <cstdint>
#include <optional>
#include <utility>

#include "wgl/chaos.hpp"
#include "wgl/gamma_ops.hpp"
#include "wgl/grid.hpp"
#include "wgl/parallel.hpp"

namespace wgl {

struct BoundReport {
  double nu = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double M = 0.0;
  double sqrtM = 0.0;
  double term_var1 = 0.0;      // Var(Gamma_1 - 2F)
  double term_cross = 0.0;     // sqrt Var(Gamma_2 - 2Gamma_1) * sqrt Var(Gamma_1 - 2F)
  double term_combined = 0.0;  // sqrt Var((Gamma_3 - 2Gamma_2) - 2(Gamma_2 - 2Gamma_1))
  double term_kappa3 = 0.0;    // |k_3(F) - 8 nu|
  double term_kappa4 = 0.0;    // |k_4(F) - 48 nu|
  double d2_upper_shape = 0.0;
  // The same bound with term_combined replaced by sqrt Var(Gamma_3 - 2Gamma_2).
  double term_unsplit = 0.0;
  double d2_upper_unsplit = 0.0;
  double discarded_mass = 0.0;
  GammaVarianceTable variances;
  std::optional<double> empirical_d2;
  std::optional<double> empirical_d2_se;
  std::optional<double> tv_estimate;
};

// Throws ValidationError unless |2 sum c^2 - 2 nu| <= 1e-9.
void require_normalized(const SpectralForm& form, const GammaTarget& target);

// max(|k_3(F) - 8 nu|, |k_4(F) - 48 nu|).
double cumulant_distance(const SpectralForm& form, const GammaTarget& target);

BoundReport malliavin_stein_upper(const SpectralForm& form, const GammaTarget& target);

struct SqrtBound {
  double sqrtM = 0.0;
  double combination = 0.0;  // |(k_4 diff) - 12 (k_3 diff)|
};
SqrtBound d1_sqrt_bound(const SpectralForm& form, const GammaTarget& target);

// (k_3/2 - 2 k_2, k_4/3 - 3 k_3 + 4 k_2) of G(nu) in exact rational arithmetic.
std::pair<Rational, Rational> target_cumulant_combinations(double nu);

enum class IdentityPart { a, b };

struct IdentityCheck {
  IdentityPart part = IdentityPart::a;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double combined_se = 0.0;  // standard error of the paired difference
  std::size_t draws = 0;
  bool pass = false;
};

// Monte Carlo estimate of both sides of
//  (a) E[g(F)(2F - G1)] = E[S'(F) Y^2] + E[S(F)(G2 - 2G1)] + E[S(F)] Ka
//  (b) E[g(F)(2F - G1)] = E[S'(F) Y^2] - E[T'(F)(G2 - 2G1) Y] - E[T(F)(G3 - 2G2)]
//                         + E[S(F)] Ka + E[T(F)] (V1 - Kb)
// with G_r the centered Gamma operators, Y = G1 - 2F, S = S(g), T = S(S(g)),
// Ka = k3/2 - 2k2, Kb = k4/3 - 3k3 + 4k2 and V1 = Var(Gamma_1 - 2F).
IdentityCheck verify_komaki_identity(const SpectralForm& form, const GammaTarget& target,
                                     const GridFunction& g, std::size_t draws,
                                     std::uint64_t seed, IdentityPart part = IdentityPart::a,
                                     Execution exec = Execution::parallel);

}  // namespace wgl
