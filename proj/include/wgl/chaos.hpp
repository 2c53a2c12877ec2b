#pragma once

// Second-Wiener-chaos elements F = sum_i c_i (N_i^2 - 1) in spectral form,
// their exact cumulants, sampling, characteristic functions and densities.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgl/grid.hpp"
#include "wgl/parallel.hpp"

namespace wgl {

class SpectralForm {
 public:
  // Throws ValidationError unless all eigenvalues are finite and one is nonzero.
  explicit SpectralForm(std::vector<double> eigenvalues, double discarded_mass = 0.0);

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::size_t size() const { return eigenvalues_.size(); }
  double eigenvalue(std::size_t i) const { return eigenvalues_[i]; }

  // sum_i c_i^p
  double power_sum(int p) const;
  // Var(F) = 2 sum c_i^2
  double variance() const { return 2.0 * power_sum(2); }
  SpectralForm scaled(double alpha) const;

  // Squared mass sum c^2 of eigenvalues dropped below the cutoff when this
  // form was extracted from a kernel matrix.
  double discarded_mass() const { return discarded_mass_; }

 private:
  std::vector<double> eigenvalues_;
  double discarded_mass_ = 0.0;
};

// Symmetric n x n matrix of quadratic-form coefficients (row-major).
class KernelMatrix {
 public:
  // Throws ValidationError if entries[i][j] != entries[j][i] for any pair.
  KernelMatrix(std::size_t n, std::vector<double> entries);

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> entries() const { return entries_; }
  double frobenius_squared() const;
  KernelMatrix scaled(double alpha) const;

 private:
  std::size_t n_;
  std::vector<double> entries_;
};

// Centered Gamma target G(nu) = 2 Gamma(nu/2, 1) - nu.
class GammaTarget {
 public:
  explicit GammaTarget(double nu);
  double nu() const { return nu_; }
  double shape() const { return 0.5 * nu_; }
  // Density of G(nu); zero for x <= -nu.
  double density(double x) const;
  double log_density(double x) const;
  double cdf(double x) const;
  double survival(double x) const;

 private:
  double nu_;
};

struct SampleBatch {
  std::vector<double> draws;
  std::uint64_t seed = 0;
  std::size_t count() const { return draws.size(); }
};

// 0 for p = 1, 2^{p-1} (p-1)! nu for p >= 2.
double cumulant_target(const GammaTarget& target, int p);
// 2^{p-1} (p-1)! sum c_i^p for p >= 2.
double cumulant_spectral(const SpectralForm& form, int p);

// Eigenvalues of a symmetric kernel via Jacobi rotations, keeping |c| > tol.
// Default tol is 1e-12 times the Frobenius norm.
SpectralForm spectral_from_kernel(const KernelMatrix& matrix, std::optional<double> tol = {},
                                  Execution exec = Execution::parallel);

// Draw i is sum_j c_j (z_ij^2 - 1) with z_ij = CounterRng(seed).normal(i, j).
SampleBatch sample(const SpectralForm& form, std::size_t count, std::uint64_t seed,
                   Execution exec = Execution::parallel);

// Evaluates F and the centered Gamma operators on one realization z:
// returns sum_i c_i^{r+1} (z_i^2 - 1) scaled by 2^r.
double centered_gamma_on(std::span<const double> c, std::span<const double> z, int r);

// prod_j (1 - 2 i c_j t)^{-1/2} exp(-i c_j t), principal branch per factor.
std::complex<double> char_function(const SpectralForm& form, double t);

struct DensityResult {
  GridFunction density;
  bool edge_singular = false;
  // Interior grid actually used when edge_singular is set.
  GridSpec grid;
  // Trapezoidal inversion metadata.
  double frequency_step = 0.0;
  double frequency_cutoff = 0.0;
  std::size_t transform_size = 0;
  double tail_level = 0.0;  // |phi| at the cutoff
  std::string method;       // "cf-fft" or "exact-gamma"
};

DensityResult density_cf_inversion(const SpectralForm& form, const GridSpec& grid,
                                   Execution exec = Execution::parallel);

// Sample cumulants k_2..k_pmax from central moments, with standard errors
// estimated from the spread of per-batch estimates.
struct CumulantEstimate {
  std::vector<double> value;           // index p (0, 1 unused)
  std::vector<double> standard_error;  // index p
};
CumulantEstimate estimate_cumulants(std::span<const double> draws, int p_max,
                                    std::size_t batches = 100);

}  // namespace wgl
