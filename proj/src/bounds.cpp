#include "wgl/bounds.hpp"

#include <cmath>
#include <sstream>

#include "wgl/errors.hpp"
#include "wgl/rng.hpp"
#include "wgl/stein.hpp"

namespace wgl {

void require_normalized(const SpectralForm& form, const GammaTarget& target) {
  const double diff = std::fabs(form.variance() - 2.0 * target.nu());
  if (diff > 1e-9) {
    std::ostringstream msg;
    msg << "variance 2 sum c^2 = " << form.variance() << " differs from 2 nu = "
        << 2.0 * target.nu() << "; normalize the spectrum first";
    throw ValidationError(msg.str());
  }
}

double cumulant_distance(const SpectralForm& form, const GammaTarget& target) {
  require_normalized(form, target);
  return std::max(std::fabs(cumulant_spectral(form, 3) - cumulant_target(target, 3)),
                  std::fabs(cumulant_spectral(form, 4) - cumulant_target(target, 4)));
}

BoundReport malliavin_stein_upper(const SpectralForm& form, const GammaTarget& target) {
  require_normalized(form, target);
  BoundReport r;
  r.nu = target.nu();
  r.kappa2 = cumulant_spectral(form, 2);
  r.kappa3 = cumulant_spectral(form, 3);
  r.kappa4 = cumulant_spectral(form, 4);
  r.term_kappa3 = std::fabs(r.kappa3 - cumulant_target(target, 3));
  r.term_kappa4 = std::fabs(r.kappa4 - cumulant_target(target, 4));
  r.M = std::max(r.term_kappa3, r.term_kappa4);
  r.sqrtM = std::sqrt(r.M);
  r.variances = gamma_variance_table(form, 4);
  const double v1 = r.variances.var_diff[1];
  const double v2 = r.variances.var_diff[2];
  const double v3 = r.variances.var_diff[3];
  r.term_var1 = v1;
  r.term_cross = std::sqrt(v2) * std::sqrt(v1);
  r.term_combined = std::sqrt(r.variances.var_combined);
  r.d2_upper_shape = r.term_var1 + r.term_cross + r.term_combined + r.term_kappa3 + r.term_kappa4;
  r.term_unsplit = std::sqrt(v3);
  r.d2_upper_unsplit = r.term_var1 + r.term_cross + r.term_unsplit + r.term_kappa3 + r.term_kappa4;
  r.discarded_mass = form.discarded_mass();
  return r;
}

SqrtBound d1_sqrt_bound(const SpectralForm& form, const GammaTarget& target) {
  require_normalized(form, target);
  const double d3 = cumulant_spectral(form, 3) - cumulant_target(target, 3);
  const double d4 = cumulant_spectral(form, 4) - cumulant_target(target, 4);
  return {std::sqrt(std::max(std::fabs(d3), std::fabs(d4))), std::fabs(d4 - 12.0 * d3)};
}

std::pair<Rational, Rational> target_cumulant_combinations(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu must be finite and positive");
  // A finite double is an exact dyadic rational.
  int exponent = 0;
  const double mantissa = std::frexp(nu, &exponent);
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  Rational v{scaled};
  const int shift = exponent - 53;
  if (shift >= 0) {
    v *= Rational{boost::multiprecision::cpp_int(1) << shift};
  } else {
    v /= Rational{boost::multiprecision::cpp_int(1) << (-shift)};
  }
  const Rational k2 = 2 * v;
  const Rational k3 = 8 * v;
  const Rational k4 = 48 * v;
  return {k3 / 2 - 2 * k2, k4 / 3 - 3 * k3 + 4 * k2};
}

IdentityCheck verify_komaki_identity(const SpectralForm& form, const GammaTarget& target,
                                     const GridFunction& g, std::size_t draws,
                                     std::uint64_t seed, IdentityPart part, Execution exec) {
  require_normalized(form, target);
  if (draws < 100000) throw ValidationError("identity check needs at least 1e5 draws");
  const auto s1 = solve_stein(g, target);
  std::optional<SteinSolution> s2;
  if (part == IdentityPart::b) s2 = solve_stein(s1.solution, target);

  const double k2 = cumulant_spectral(form, 2);
  const double k3 = cumulant_spectral(form, 3);
  const double k4 = cumulant_spectral(form, 4);
  const double ka = 0.5 * k3 - 2.0 * k2;
  const double kb = k4 / 3.0 - 3.0 * k3 + 4.0 * k2;
  const double v1 = var_gamma_diff_trace(form, 1);

  const auto c = form.eigenvalues();
  const std::size_t m = c.size();
  const CounterRng rng(seed);
  const GridSpec& grid = g.grid();
  // Accumulators: lhs, rhs, lhs^2, rhs^2, (lhs - rhs)^2, outside-grid count.
  const auto sums = chunked_sums(draws, 6, exec, [&](std::size_t i, std::vector<CompensatedSum>& acc) {
    thread_local std::vector<double> z;
    z.resize(m);
    rng.normals(i, z);
    const double f = centered_gamma_on(c, z, 0);
    const double g1 = centered_gamma_on(c, z, 1);
    const double g2 = centered_gamma_on(c, z, 2);
    const double y = g1 - 2.0 * f;
    const double lhs = -g(f) * y;
    const double s = s1.value_at(f);
    const double ds = s1.derivative_at(f);
    double rhs = ds * y * y + s * ka;
    if (part == IdentityPart::a) {
      rhs += s * (g2 - 2.0 * g1);
    } else {
      const double g3 = centered_gamma_on(c, z, 3);
      const double t = s2->value_at(f);
      const double dt = s2->derivative_at(f);
      rhs += -dt * (g2 - 2.0 * g1) * y - t * (g3 - 2.0 * g2) + t * (v1 - kb);
    }
    acc[0].add(lhs);
    acc[1].add(rhs);
    acc[2].add(lhs * lhs);
    acc[3].add(rhs * rhs);
    acc[4].add((lhs - rhs) * (lhs - rhs));
    if (f < grid.lo || f > grid.hi) acc[5].add(1.0);
  });
  const double n = static_cast<double>(draws);
  if (sums[5] > 1e-4 * n) {
    std::ostringstream msg;
    msg << "test-function grid covers too few draws: " << sums[5] << " of " << draws
        << " fall outside [" << grid.lo << ", " << grid.hi << "]";
    throw ValidationError(msg.str());
  }
  IdentityCheck out;
  out.part = part;
  out.draws = draws;
  out.lhs = sums[0] / n;
  out.rhs = sums[1] / n;
  auto se = [n](double mean, double sq) { return std::sqrt(std::max(sq / n - mean * mean, 0.0) / (n - 1.0)); };
  out.lhs_se = se(out.lhs, sums[2]);
  out.rhs_se = se(out.rhs, sums[3]);
  out.combined_se = se(out.lhs - out.rhs, sums[4]);
  out.pass = std::fabs(out.lhs - out.rhs) <= 5.0 * out.combined_se;
  return out;
}

}  // namespace wgl
