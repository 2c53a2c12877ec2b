#include "wgl/distance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "wgl/bounds.hpp"
#include "wgl/errors.hpp"
#include "wgl/numeric.hpp"
#include "wgl/rng.hpp"
#include "wgl/stein.hpp"

namespace wgl {

double TestMember::operator()(double x) const {
  if (kind == Kind::sine) return amplitude * std::sin(omega * x + phase);
  return width * std::tanh((x - shift) / width);
}

std::string TestMember::describe() const {
  std::ostringstream out;
  if (kind == Kind::sine) {
    out << "sine(omega=" << omega << ", phase=" << phase << ", a=" << amplitude << ")";
  } else {
    out << "ramp(shift=" << shift << ", width=" << width << ")";
  }
  return out.str();
}

TestFamily build_test_family(const GridSpec& grid, std::size_t size) {
  if (size < 8) throw ValidationError("test family needs at least 8 members");
  TestFamily fam;
  fam.grid = grid;
  const std::size_t n_ramps = size / 4;
  const std::size_t n_sines = size - n_ramps;
  const double phases[3] = {0.0, 0.5 * std::numbers::pi, 0.25 * std::numbers::pi};
  const std::size_t n_freq = (n_sines + 2) / 3;
  for (std::size_t f = 0; f < n_freq; ++f) {
    const double frac = n_freq == 1 ? 0.0 : static_cast<double>(f) / static_cast<double>(n_freq - 1);
    const double omega = 0.05 * std::pow(400.0, frac);  // 0.05 .. 20
    fam.frequencies.push_back(omega);
    for (double phase : phases) {
      if (fam.members.size() == n_sines) break;
      TestMember m;
      m.kind = TestMember::Kind::sine;
      m.omega = omega;
      m.phase = phase;
      m.amplitude = std::min(1.0 / omega, 1.0 / (omega * omega));
      fam.members.push_back(m);
    }
  }
  // Ramps centered across the first half of the grid, where G(nu) lives.
  for (std::size_t r = 0; r < n_ramps; ++r) {
    TestMember m;
    m.kind = TestMember::Kind::ramp;
    const double frac = static_cast<double>(r + 1) / static_cast<double>(n_ramps + 1);
    m.shift = grid.lo + (0.1 + 0.4 * frac) * (grid.hi - grid.lo);
    m.width = (r % 2 == 0) ? 1.0 : 2.0;
    fam.members.push_back(m);
  }
  for (const auto& m : fam.members) {
    auto gf = GridFunction::sample(grid, [&m](double x) { return m(x); });
    if (gf.lip_norm() > 1.0 + 1e-9 || gf.second_difference_norm() > 1.0 + 1e-9) {
      throw ValidationError("test family member " + m.describe() + " violates its norm caps");
    }
    fam.sampled.push_back(std::move(gf));
  }
  return fam;
}

namespace {

// E e^{itG(nu)} = e^{-i nu t} (1 - 2it)^{-nu/2}.
std::complex<double> target_cf(double nu, double t) {
  const std::complex<double> w{1.0, -2.0 * t};
  return std::exp(-0.5 * nu * std::log(w) - std::complex<double>{0.0, nu * t});
}

bool coupling_available(const SpectralForm& form, double nu) {
  const double r = std::round(nu);
  return std::fabs(nu - r) < 1e-12 && r >= 1.0 && r <= static_cast<double>(form.size());
}

}  // namespace

double member_target_expectation(const TestMember& h, const GammaTarget& target) {
  return target_expectation([&h](double x) { return h(x); }, target, 1e-14);
}

namespace {

// phi_F(t) - phi_G(t) without cancellation: phi_G (exp(D) - 1) with
// D = log phi_F - log phi_G. For 2 max|c| t <= 1/2 (and 2t <= 1/2) D is
// summed as sum_p (2it)^p / (2p) (sum c^p - nu); elsewhere D is the direct
// difference of the logarithms.
class CfDifference {
 public:
  CfDifference(const SpectralForm& form, double nu) : form_(form), nu_(nu) {
    for (double c : form.eigenvalues()) cmax_ = std::max(cmax_, std::fabs(c));
    excess_.assign(kTerms + 1, 0.0);
    for (int p = 2; p <= kTerms; ++p) excess_[p] = form.power_sum(p) - nu;
  }

  std::complex<double> operator()(double t) const {
    const std::complex<double> phi_g = target_cf(nu_, t);
    std::complex<double> d;
    if (2.0 * std::max(cmax_, 1.0) * std::fabs(t) <= 0.5) {
      const std::complex<double> z{0.0, 2.0 * t};
      std::complex<double> zp = z;
      for (int p = 2; p <= kTerms; ++p) {
        zp *= z;
        d += zp * (excess_[p] / (2.0 * p));
      }
    } else {
      std::complex<double> log_f;
      for (double c : form_.eigenvalues()) {
        log_f += -0.5 * std::log(std::complex<double>{1.0, -2.0 * c * t}) - std::complex<double>{0.0, c * t};
      }
      const std::complex<double> log_g =
          -0.5 * nu_ * std::log(std::complex<double>{1.0, -2.0 * t}) - std::complex<double>{0.0, nu_ * t};
      d = log_f - log_g;
    }
    // exp(d) - 1 accurately for small d.
    const std::complex<double> em1 =
        std::complex<double>{std::expm1(d.real()), 0.0} * std::polar(1.0, d.imag()) +
        std::complex<double>{-2.0 * std::pow(std::sin(0.5 * d.imag()), 2), std::sin(d.imag())};
    return phi_g * em1;
  }

 private:
  static constexpr int kTerms = 80;
  const SpectralForm& form_;
  double nu_;
  double cmax_ = 0.0;
  std::vector<double> excess_;
};

}  // namespace

double member_difference_fourier(const TestMember& h, const SpectralForm& form,
                                 const GammaTarget& target) {
  const CfDifference diff(form, target.nu());
  if (h.kind == TestMember::Kind::sine) {
    const std::complex<double> rot = std::polar(1.0, h.phase);
    return h.amplitude * (rot * diff(h.omega)).imag();
  }
  // Fourier transform of w tanh((x - s)/w) is -i pi w^2 e^{-its} / sinh(pi w t / 2).
  const double w = h.width;
  auto integrand = [&](double t) {
    if (t == 0.0) return 0.0;
    const std::complex<double> hat =
        std::complex<double>{0.0, -std::numbers::pi * w * w} * std::polar(1.0, -t * h.shift) /
        std::sinh(0.5 * std::numbers::pi * w * t);
    return (diff(t) * hat).real();
  };
  const double t_end = 40.0 / w;
  double total = 0.0;
  const double panel = 0.5 / w;
  for (double lo = 0.0; lo < t_end; lo += panel) {
    total += numeric::integrate(integrand, lo, std::min(lo + panel, t_end), 1e-15, 1e-10).value;
  }
  return total / std::numbers::pi;
}

DistanceEstimate d2_lower_estimate(const SpectralForm& form, const GammaTarget& target,
                                   const TestFamily& family, std::size_t draws,
                                   std::uint64_t seed, DistanceMethod method, Execution exec) {
  const std::size_t k = family.members.size();
  if (k == 0) throw ValidationError("empty test family");
  require_normalized(form, target);
  DistanceEstimate out;
  out.method = method;
  out.family_size = k;
  out.member_differences.assign(k, 0.0);
  out.member_se.assign(k, 0.0);

  if (method == DistanceMethod::quadrature) {
    for (std::size_t j = 0; j < k; ++j) {
      out.member_differences[j] = member_difference_fourier(family.members[j], form, target);
    }
  } else {
    if (draws < 100000) throw ValidationError("Monte Carlo d2 estimate needs at least 1e5 draws");
    std::vector<double> target_mean(k);
    for (std::size_t j = 0; j < k; ++j) {
      target_mean[j] = member_target_expectation(family.members[j], target);
    }
    const auto c = form.eigenvalues();
    const std::size_t m = c.size();
    const bool coupled = coupling_available(form, target.nu());
    out.coupled = coupled;
    std::vector<std::size_t> block;
    std::vector<std::size_t> rest;
    if (coupled) {
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(c[a] - 1.0) < std::fabs(c[b] - 1.0);
      });
      const auto nb = static_cast<std::size_t>(std::round(target.nu()));
      block.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nb));
      std::sort(block.begin(), block.end());
      for (std::size_t j = 0; j < m; ++j) {
        if (std::find(block.begin(), block.end(), j) == block.end()) rest.push_back(j);
      }
    }
    const std::size_t shifts = coupled ? std::min<std::size_t>(block.size(), 8) : 1;
    const CounterRng rng(seed);
    const GridSpec& grid = family.grid;
    // Per member: d, d^2, hG, hG^2, d*hG, hF, hF^2; then one coverage counter.
    constexpr std::size_t kw = 7;
    const auto sums = chunked_sums(draws, kw * k + 1, exec, [&](std::size_t i, std::vector<CompensatedSum>& acc) {
      thread_local std::vector<double> z;
      thread_local std::vector<double> fs;
      z.resize(m);
      fs.resize(shifts);
      rng.normals(i, z);
      double f0 = 0.0;
      double gval = 0.0;
      if (coupled) {
        double base = 0.0;
        for (std::size_t j : rest) base += c[j] * (z[j] * z[j] - 1.0);
        const std::size_t nb = block.size();
        for (std::size_t b = 0; b < nb; ++b) gval += z[block[b]] * z[block[b]] - 1.0;
        for (std::size_t s = 0; s < shifts; ++s) {
          double f = base;
          for (std::size_t b = 0; b < nb; ++b) {
            const double zz = z[block[(b + s) % nb]];
            f += c[block[b]] * (zz * zz - 1.0);
          }
          fs[s] = f;
        }
        f0 = fs[0];
      } else {
        for (std::size_t j = 0; j < m; ++j) f0 += c[j] * (z[j] * z[j] - 1.0);
        fs[0] = f0;
      }
      for (std::size_t j = 0; j < k; ++j) {
        const TestMember& h = family.members[j];
        const double hf0 = h(f0);
        double hbar = hf0;
        for (std::size_t s = 1; s < shifts; ++s) hbar += h(fs[s]);
        hbar /= static_cast<double>(shifts);
        const double hg = coupled ? h(gval) : 0.0;
        const double d = hbar - hg;
        auto* a = &acc[kw * j];
        a[0].add(d);
        a[1].add(d * d);
        a[2].add(hg);
        a[3].add(hg * hg);
        a[4].add(d * hg);
        a[5].add(hf0);
        a[6].add(hf0 * hf0);
      }
      if (f0 < grid.lo || f0 > grid.hi) acc[kw * k].add(1.0);
    });
    const double n = static_cast<double>(draws);
    if (sums[kw * k] > 1e-4 * n) {
      std::ostringstream msg;
      msg << "samples leave the family grid for " << sums[kw * k] / n << " of draws (limit 1e-4)";
      throw ValidationError(msg.str());
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double* s = &sums[kw * j];
      const double mean_hf = s[5] / n;
      const double var_hf = std::max(s[6] / n - mean_hf * mean_hf, 0.0);
      const double plain_se = std::sqrt(var_hf / (n - 1.0));
      out.plain_noise_floor = std::max(out.plain_noise_floor, plain_se);
      if (!coupled) {
        out.member_differences[j] = mean_hf - target_mean[j];
        out.member_se[j] = plain_se;
        continue;
      }
      const double mean_d = s[0] / n;
      const double mean_g = s[2] / n;
      const double var_d = std::max(s[1] / n - mean_d * mean_d, 0.0);
      const double var_g = std::max(s[3] / n - mean_g * mean_g, 0.0);
      const double cov = s[4] / n - mean_d * mean_g;
      // Control variate on h(G) with its exact mean.
      const double gamma = var_g > 0.0 ? -cov / var_g : 0.0;
      out.member_differences[j] = mean_d + gamma * (mean_g - target_mean[j]);
      const double var = std::max(var_d - (var_g > 0.0 ? cov * cov / var_g : 0.0), 0.0);
      out.member_se[j] = std::sqrt(var / (n - 1.0));
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (std::fabs(out.member_differences[j]) > out.value) {
      out.value = std::fabs(out.member_differences[j]);
      out.argmax = j;
    }
  }
  out.standard_error = out.member_se[out.argmax];
  for (double se : out.member_se) out.noise_floor = std::max(out.noise_floor, se);
  return out;
}

namespace {

// Power series of 1F1(1/2; 1; y), all terms positive for y >= 0.
double kummer_series(double y) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 2000; ++k) {
    term *= (0.5 + k) * y / ((1.0 + k) * (1.0 + k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// sum_k ((1/2)_k)^2 / (k! x^k), truncated at the smallest term.
double kummer_asymptotic_sum(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double next = term * (0.5 + k) * (0.5 + k) / ((1.0 + k) * x);
    if (std::fabs(next) >= std::fabs(term)) break;
    term = next;
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return sum;
}

}  // namespace

double kummer_1f1_half(double z) {
  if (!std::isfinite(z)) throw DomainError("1F1 argument must be finite");
  const double y = std::fabs(z);
  if (y <= 30.0) {
    // Positive-term series in |z|; Kummer's transformation covers z < 0.
    const double s = kummer_series(y);
    return z >= 0.0 ? s : std::exp(z) * s;
  }
  const double tail = kummer_asymptotic_sum(y) / std::sqrt(std::numbers::pi * y);
  return z > 0.0 ? std::exp(y) * tail : tail;
}

double two_eig_density(double c1, double c2, double x) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw DomainError("two-eigenvalue density needs c1, c2 > 0");
  if (c1 < c2) std::swap(c1, c2);
  const double s = x + c1 + c2;
  if (!(s > 0.0)) return 0.0;
  const double arg = -((c1 - c2) / (2.0 * c1 * c2)) * s;
  return std::exp(-s / (2.0 * c1)) * kummer_1f1_half(arg) / (2.0 * std::sqrt(c1 * c2));
}

double tv_distance_two_eig(double c1, double c2, const GammaTarget& target) {
  if (target.nu() != 2.0) throw ValidationError("closed-form TV comparison requires nu = 2");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw DomainError("two-eigenvalue density needs c1, c2 > 0");
  if (c1 < c2) std::swap(c1, c2);
  auto diff = [&](double x) {
    const double g = x > -2.0 ? 0.5 * std::exp(-0.5 * x - 1.0) : 0.0;
    return two_eig_density(c1, c2, x) - g;
  };
  const double edge_f = -(c1 + c2);
  const double edge_g = -2.0;
  const double lower = std::min(edge_f, edge_g);
  const double upper = std::max(edge_f, edge_g) + 2.0 * std::max(c1, 1.0) * 45.0;
  std::vector<double> breaks{lower, std::max(edge_f, edge_g), upper};
  // Sign changes of f - g on a 4096-node scan, refined by bracketing.
  const std::size_t scan = 4096;
  const double start = std::max(edge_f, edge_g);
  const double step = (upper - start) / static_cast<double>(scan);
  double prev_x = start + 1e-12 * std::max(1.0, std::fabs(start));
  double prev = diff(prev_x);
  for (std::size_t i = 1; i <= scan; ++i) {
    const double x = start + step * static_cast<double>(i);
    const double v = diff(x);
    if ((prev < 0.0 && v > 0.0) || (prev > 0.0 && v < 0.0)) {
      std::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(diff, prev_x, x, prev, v,
                                                 boost::math::tools::eps_tolerance<double>(52),
                                                 iters);
      breaks.push_back(0.5 * (r.first + r.second));
    }
    prev_x = x;
    prev = v;
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto absdiff = [&](double x) { return std::fabs(diff(x)); };
  CompensatedSum total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    total.add(numeric::integrate(absdiff, breaks[i], breaks[i + 1], 1e-15, 1e-12).value);
  }
  return std::min(1.0, 0.5 * total.value());
}

}  // namespace wgl
