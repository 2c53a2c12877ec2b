#include "wgl/gamma_ops.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/special_functions/factorials.hpp>

#include "wgl/errors.hpp"

namespace wgl {
namespace {

void require_r(int r) {
  if (r < 1) throw DomainError("Gamma variance index r must be >= 1");
}

double ipow(double x, int p) {
  double v = 1.0;
  for (int k = 0; k < p; ++k) v *= x;
  return v;
}

double fact(int n) { return boost::math::factorial<double>(static_cast<unsigned>(n)); }

using boost::multiprecision::cpp_int;

cpp_int factorial_int(int n) {
  cpp_int f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

cpp_int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  cpp_int b = 1;
  for (int j = 1; j <= k; ++j) {
    b *= n - k + j;
    b /= j;
  }
  return b;
}

}  // namespace

double var_gamma_diff_trace(const SpectralForm& form, int r) {
  require_r(r);
  CompensatedSum s;
  for (double c : form.eigenvalues()) s.add(ipow(c, 2 * r) * (c - 1.0) * (c - 1.0));
  return std::ldexp(s.value(), 2 * r + 1);
}

double var_gamma_diff_cumulant(const SpectralForm& form, int r) {
  require_r(r);
  return cumulant_spectral(form, 2 * r + 2) / fact(2 * r + 1) -
         4.0 * cumulant_spectral(form, 2 * r + 1) / fact(2 * r) +
         4.0 * cumulant_spectral(form, 2 * r) / fact(2 * r - 1);
}

double var_combined(const SpectralForm& form) {
  CompensatedSum s;
  for (double c : form.eigenvalues()) s.add(ipow(c, 4) * ipow(c - 1.0, 4));
  return std::ldexp(s.value(), 7);
}

GammaVarianceTable gamma_variance_table(const SpectralForm& form, int r_max) {
  require_r(r_max);
  GammaVarianceTable t;
  t.r_max = r_max;
  t.var_diff.assign(static_cast<std::size_t>(r_max) + 1, 0.0);
  t.var_diff_cumulant.assign(static_cast<std::size_t>(r_max) + 1, 0.0);
  for (int r = 1; r <= r_max; ++r) {
    t.var_diff[static_cast<std::size_t>(r)] = var_gamma_diff_trace(form, r);
    t.var_diff_cumulant[static_cast<std::size_t>(r)] = var_gamma_diff_cumulant(form, r);
  }
  t.var_combined = var_combined(form);
  return t;
}

double gamma_pathwise(const SpectralForm& form, int r, std::span<const double> z) {
  if (r < 0) throw DomainError("Gamma operator index must be >= 0");
  const auto c = form.eigenvalues();
  if (z.size() < c.size()) throw DomainError("need one normal deviate per eigenvalue");
  if (r == 0) return centered_gamma_on(c, z, 0);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += ipow(c[i], r + 1) * z[i] * z[i];
  return std::ldexp(s, r);
}

GammaConstantKey::GammaConstantKey(int q, std::vector<int> indices)
    : q_(q), indices_(std::move(indices)) {
  if (q_ < 1) throw DomainError("chaos order q must be >= 1");
  if (indices_.empty()) throw DomainError("constant key needs at least one index");
  int prefix = 0;
  const auto s = static_cast<int>(indices_.size());
  for (int j = 1; j <= s; ++j) {
    const int r = indices_[static_cast<std::size_t>(j - 1)];
    const int upper = std::min(j * q_ - 2 * prefix, q_);
    if (r < 1 || r > upper) {
      std::ostringstream msg;
      msg << "inadmissible key " << to_string() << ": need 1 <= r_" << j << " <= min(" << j
          << "q - 2(r_1+...+r_" << j - 1 << "), q) = " << upper << ", got " << r;
      throw DomainError(msg.str());
    }
    prefix += r;
    // 2 (r_1 + ... + r_j) < (j + 1) q keeps the next contraction nonempty.
    if (j < s && !(2 * prefix < (j + 1) * q_)) {
      std::ostringstream msg;
      msg << "inadmissible key " << to_string() << ": indicator r_1+...+r_" << j << " < (" << j + 1
          << ")q/2 fails (sum " << prefix << ")";
      throw DomainError(msg.str());
    }
  }
}

std::string GammaConstantKey::to_string() const {
  std::ostringstream out;
  out << "c_" << q_ << "(";
  for (std::size_t i = 0; i < indices_.size(); ++i) out << (i ? "," : "") << indices_[i];
  out << ")";
  return out.str();
}

Rational gamma_constants(const GammaConstantKey& key, ConstantVariant variant) {
  const int q = key.q();
  const auto& r = key.indices();
  const int r1 = r[0];
  Rational value{q * factorial_int(r1 - 1) * binomial(q - 1, r1 - 1) * binomial(q - 1, r1 - 1)};
  int prefix = r1;
  for (std::size_t idx = 1; idx < r.size(); ++idx) {
    const int s = static_cast<int>(idx) + 1;
    const int rs = r[idx];
    const int width = s * q - 2 * prefix;
    const cpp_int lead = variant == ConstantVariant::new_recursion ? cpp_int(width) : cpp_int(q);
    value *= Rational{lead * factorial_int(rs - 1) * binomial(width - 1, rs - 1) *
                      binomial(q - 1, rs - 1)};
    prefix += rs;
  }
  return value;
}

std::vector<GammaConstantKey> admissible_keys(int q, int s) {
  if (q < 1 || s < 1) throw DomainError("admissible_keys needs q, s >= 1");
  std::vector<GammaConstantKey> out;
  std::vector<int> current;
  auto recurse = [&](auto&& self, int j, int prefix) -> void {
    if (j > s) {
      out.emplace_back(q, current);
      return;
    }
    const int upper = std::min(j * q - 2 * prefix, q);
    for (int r = 1; r <= upper; ++r) {
      if (j < s && !(2 * (prefix + r) < (j + 1) * q)) continue;
      current.push_back(r);
      self(self, j + 1, prefix + r);
      current.pop_back();
    }
  };
  recurse(recurse, 1, 0);
  return out;
}

}  // namespace wgl
