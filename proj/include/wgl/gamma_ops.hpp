#pragma once

// Gamma operators on the second chaos. With F = sum c_i (N_i^2 - 1) the
// centered operators are  Gamma_r - E Gamma_r = 2^r sum c_i^{r+1} (N_i^2 - 1),
// so every variance below is a closed-form power sum of the spectrum.

#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "wgl/chaos.hpp"

namespace wgl {

// Var(Gamma_r - 2 Gamma_{r-1}) = 2^{2r+1} sum c^{2r} (c - 1)^2, r >= 1.
double var_gamma_diff_trace(const SpectralForm& form, int r);

// The same variance from cumulants:
//   k_{2r+2}/(2r+1)! - 4 k_{2r+1}/(2r)! + 4 k_{2r}/(2r-1)!.
double var_gamma_diff_cumulant(const SpectralForm& form, int r);

// Var((Gamma_3 - 2 Gamma_2) - 2 (Gamma_2 - 2 Gamma_1)) = 2^7 sum c^4 (c - 1)^4.
double var_combined(const SpectralForm& form);

struct GammaVarianceTable {
  int r_max = 0;
  std::vector<double> var_diff;           // index r = 1..r_max (trace route)
  std::vector<double> var_diff_cumulant;  // index r = 1..r_max
  double var_combined = 0.0;
};

GammaVarianceTable gamma_variance_table(const SpectralForm& form, int r_max = 4);

// Gamma_r on one realization z: 2^r sum c^{r+1} z^2 for r >= 1, F for r = 0.
double gamma_pathwise(const SpectralForm& form, int r, std::span<const double> z);

// ---- contraction constants c_q(r_1, ..., r_s) ----

using Rational = boost::multiprecision::cpp_rational;

enum class ConstantVariant { new_recursion, classical };

class GammaConstantKey {
 public:
  // Throws DomainError naming the violated constraint:
  //   1 <= r_j <= min(j q - 2 (r_1 + ... + r_{j-1}), q), and
  //   r_1 + ... + r_j < (j + 1) q / 2 for j = 1..s-1.
  GammaConstantKey(int q, std::vector<int> indices);

  int q() const { return q_; }
  const std::vector<int>& indices() const { return indices_; }
  std::string to_string() const;

 private:
  int q_;
  std::vector<int> indices_;
};

Rational gamma_constants(const GammaConstantKey& key, ConstantVariant variant);

// All admissible tuples of length s for chaos order q.
std::vector<GammaConstantKey> admissible_keys(int q, int s);

}  // namespace wgl
