#include "wgl/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "wgl/errors.hpp"
#include "wgl/jacobi.hpp"
#include "wgl/rng.hpp"

namespace wgl {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

}  // namespace

SpectralForm::SpectralForm(std::vector<double> eigenvalues, double discarded_mass)
    : eigenvalues_(std::move(eigenvalues)), discarded_mass_(discarded_mass) {
  if (eigenvalues_.empty()) throw ValidationError("spectral form needs at least one eigenvalue");
  bool nonzero = false;
  for (double c : eigenvalues_) {
    if (!std::isfinite(c)) throw ValidationError("spectral form: non-finite eigenvalue");
    nonzero = nonzero || c != 0.0;
  }
  if (!nonzero) throw ValidationError("spectral form: all eigenvalues are zero");
}

double SpectralForm::power_sum(int p) const {
  CompensatedSum s;
  for (double c : eigenvalues_) s.add(ipow(c, p));
  return s.value();
}

SpectralForm SpectralForm::scaled(double alpha) const {
  std::vector<double> c(eigenvalues_);
  for (double& x : c) x *= alpha;
  return SpectralForm(std::move(c), discarded_mass_ * alpha * alpha);
}

KernelMatrix::KernelMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n_ == 0) throw ValidationError("kernel matrix must be at least 1x1");
  if (entries_.size() != n_ * n_) throw ValidationError("kernel matrix: expected n*n entries");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i * n_ + j] != entries_[j * n_ + i]) {
        std::ostringstream msg;
        msg << "kernel matrix is not symmetric at (" << i << ", " << j << ")";
        throw ValidationError(msg.str());
      }
    }
  }
  for (double v : entries_) {
    if (!std::isfinite(v)) throw ValidationError("kernel matrix: non-finite entry");
  }
}

double KernelMatrix::frobenius_squared() const {
  CompensatedSum s;
  for (double v : entries_) s.add(v * v);
  return s.value();
}

KernelMatrix KernelMatrix::scaled(double alpha) const {
  std::vector<double> e(entries_);
  for (double& v : e) v *= alpha;
  return KernelMatrix(n_, std::move(e));
}

GammaTarget::GammaTarget(double nu) : nu_(nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("Gamma target requires finite nu > 0");
}

double GammaTarget::log_density(double x) const {
  const double t = x + nu_;
  if (!(t > 0.0)) return -INFINITY;
  const double a = shape();
  return (a - 1.0) * std::log(t) - 0.5 * t - a * std::log(2.0) - std::lgamma(a);
}

double GammaTarget::density(double x) const {
  if (!(x + nu_ > 0.0)) return 0.0;
  return std::exp(log_density(x));
}

double GammaTarget::cdf(double x) const {
  const double t = x + nu_;
  if (!(t > 0.0)) return 0.0;
  return boost::math::gamma_p(shape(), 0.5 * t);
}

double GammaTarget::survival(double x) const {
  const double t = x + nu_;
  if (!(t > 0.0)) return 1.0;
  return boost::math::gamma_q(shape(), 0.5 * t);
}

double cumulant_target(const GammaTarget& target, int p) {
  if (p < 1) throw DomainError("cumulant order must be >= 1");
  if (p == 1) return 0.0;
  return std::ldexp(boost::math::factorial<double>(static_cast<unsigned>(p - 1)), p - 1) *
         target.nu();
}

double cumulant_spectral(const SpectralForm& form, int p) {
  if (p < 2) throw DomainError("spectral cumulant order must be >= 2");
  const double k = std::ldexp(boost::math::factorial<double>(static_cast<unsigned>(p - 1)), p - 1) *
                   form.power_sum(p);
  if (!std::isfinite(k)) throw NumericalError("cumulant of order " + std::to_string(p) + " overflows");
  return k;
}

SpectralForm spectral_from_kernel(const KernelMatrix& matrix, std::optional<double> tol,
                                  Execution exec) {
  const double frob = std::sqrt(matrix.frobenius_squared());
  const double cutoff = tol.value_or(1e-12 * frob);
  if (tol && !(*tol > 0.0)) throw ValidationError("eigenvalue cutoff must be positive");
  auto eig = jacobi_eigenvalues(std::vector<double>(matrix.entries().begin(), matrix.entries().end()),
                                matrix.n(), exec);
  std::sort(eig.eigenvalues.begin(), eig.eigenvalues.end(), std::greater<>());
  std::vector<double> kept;
  CompensatedSum dropped;
  for (double c : eig.eigenvalues) {
    if (std::fabs(c) > cutoff) {
      kept.push_back(c);
    } else {
      dropped.add(c * c);
    }
  }
  if (kept.empty()) throw ValidationError("kernel matrix has no eigenvalue above the cutoff");
  return SpectralForm(std::move(kept), dropped.value());
}

SampleBatch sample(const SpectralForm& form, std::size_t count, std::uint64_t seed,
                   Execution exec) {
  if (count < 1) throw ValidationError("sample count must be >= 1");
  SampleBatch batch;
  batch.seed = seed;
  batch.draws.resize(count);
  const CounterRng rng(seed);
  const auto c = form.eigenvalues();
  for_each_chunk(count, exec, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      double f = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        const double z = rng.normal(i, static_cast<std::uint32_t>(j));
        f += c[j] * (z * z - 1.0);
      }
      batch.draws[i] = f;
    }
  });
  return batch;
}

double centered_gamma_on(std::span<const double> c, std::span<const double> z, int r) {
  if (z.size() < c.size()) throw DomainError("need one normal deviate per eigenvalue");
  if (r < 0) throw DomainError("Gamma operator index must be >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += ipow(c[i], r + 1) * (z[i] * z[i] - 1.0);
  return std::ldexp(s, r);
}

std::complex<double> char_function(const SpectralForm& form, double t) {
  // Sum of principal logarithms; exp of the sum equals the product of the
  // principal-branch factors.
  std::complex<double> log_phi{0.0, 0.0};
  for (double c : form.eigenvalues()) {
    const std::complex<double> w{1.0, -2.0 * c * t};
    log_phi += -0.5 * std::log(w) - std::complex<double>{0.0, c * t};
  }
  return std::exp(log_phi);
}

namespace {

// Cumulants k_2..k_8 from central moments m_2..m_8 (m[1] = 0).
std::vector<double> cumulants_from_central(const std::vector<double>& m, int p_max) {
  std::vector<double> k(static_cast<std::size_t>(p_max) + 1, 0.0);
  auto M = [&](int j) { return m[static_cast<std::size_t>(j)]; };
  if (p_max >= 2) k[2] = M(2);
  if (p_max >= 3) k[3] = M(3);
  if (p_max >= 4) k[4] = M(4) - 3.0 * M(2) * M(2);
  if (p_max >= 5) k[5] = M(5) - 10.0 * M(3) * M(2);
  if (p_max >= 6) {
    k[6] = M(6) - 15.0 * M(4) * M(2) - 10.0 * M(3) * M(3) + 30.0 * M(2) * M(2) * M(2);
  }
  if (p_max >= 7) {
    k[7] = M(7) - 21.0 * M(5) * M(2) - 35.0 * M(4) * M(3) + 210.0 * M(3) * M(2) * M(2);
  }
  if (p_max >= 8) {
    const double m2 = M(2);
    k[8] = M(8) - 28.0 * M(6) * m2 - 56.0 * M(5) * M(3) - 35.0 * M(4) * M(4) +
           420.0 * M(4) * m2 * m2 + 560.0 * M(3) * M(3) * m2 - 630.0 * m2 * m2 * m2 * m2;
  }
  return k;
}

std::vector<double> sample_cumulants(std::span<const double> x, int p_max) {
  CompensatedSum mean_acc;
  for (double v : x) mean_acc.add(v);
  const double n = static_cast<double>(x.size());
  const double mean = mean_acc.value() / n;
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(p_max) + 1);
  for (double v : x) {
    const double d = v - mean;
    double pw = d;
    for (int j = 2; j <= p_max; ++j) {
      pw *= d;
      acc[static_cast<std::size_t>(j)].add(pw);
    }
  }
  std::vector<double> m(static_cast<std::size_t>(p_max) + 1, 0.0);
  for (int j = 2; j <= p_max; ++j) m[static_cast<std::size_t>(j)] = acc[static_cast<std::size_t>(j)].value() / n;
  return cumulants_from_central(m, p_max);
}

}  // namespace

CumulantEstimate estimate_cumulants(std::span<const double> draws, int p_max,
                                    std::size_t batches) {
  if (p_max < 2 || p_max > 8) throw DomainError("sample cumulants supported for orders 2..8");
  if (batches < 2 || draws.size() < 10 * batches) {
    throw ValidationError("too few draws for the requested number of batches");
  }
  CumulantEstimate out;
  out.value = sample_cumulants(draws, p_max);
  out.standard_error.assign(static_cast<std::size_t>(p_max) + 1, 0.0);
  const std::size_t per = draws.size() / batches;
  std::vector<std::vector<double>> per_batch;
  per_batch.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    per_batch.push_back(sample_cumulants(draws.subspan(b * per, per), p_max));
  }
  const double nb = static_cast<double>(batches);
  for (int p = 2; p <= p_max; ++p) {
    const auto ip = static_cast<std::size_t>(p);
    double mean = 0.0;
    for (const auto& k : per_batch) mean += k[ip];
    mean /= nb;
    double ss = 0.0;
    for (const auto& k : per_batch) ss += (k[ip] - mean) * (k[ip] - mean);
    // The full-sample estimate has roughly the spread of a batch mean.
    const double sd_batch = std::sqrt(ss / (nb - 1.0));
    out.standard_error[ip] = sd_batch / std::sqrt(nb);
  }
  return out;
}

}  // namespace wgl
