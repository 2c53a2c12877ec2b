#pragma once

// Example sequences of second-chaos elements and the per-n pipeline that
// runs the bounds and distance estimates and fits log-log rates.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wgl/bounds.hpp"
#include "wgl/chaos.hpp"
#include "wgl/distance.hpp"
#include "wgl/numeric.hpp"
#include "wgl/parallel.hpp"

namespace wgl {

// sqrt(1 + 1/n) (N1^2 - 1) + sqrt(1 - 1/n) (N2^2 - 1).
SpectralForm gen_naive(int n);

// Degenerate U-statistic (2/sqrt(n(n-1))) sum_{i<j} Z_i Z_j as a quadratic
// form: zero diagonal, off-diagonal 1/sqrt(n(n-1)).
KernelMatrix ustat_kernel(int n);
// Exact eigenvalues sqrt((n-1)/n) and -1/sqrt(n(n-1)) (n-1 times). For
// n <= 200 the kernel is diagonalized too and must agree to 1e-10.
SpectralForm gen_ustat(int n);

// (i, j) entry beta_n^{|i-j|} / sqrt(n(n-1)) off the diagonal, beta_n = 1 - beta/n.
KernelMatrix gen_ar1(int n, double beta);

struct Ar2Instance {
  KernelMatrix matrix;          // rescaled to variance 4
  double variance = 0.0;        // closed form, before rescaling
  double variance_brute = 0.0;  // 2 sum_{i != j} A_ij^2, before rescaling
};
// (4/n) sum_{i>j} b_{i-j} Z_i Z_j with
// b_k = (cos(theta) sin(k theta) - sin((k-1) theta)) / sin(theta).
// For n <= 200 the closed-form variance must match the brute sum to 1e-9.
Ar2Instance gen_ar2(int n, double theta);
double ar2_variance_closed_form(int n, double theta);

enum class HolderBasis { trig, holder };

// Orthonormal functions e_1..e_nu on [0, 1]: sqrt(2) cos(m pi x) for the
// trig basis; Gram-Schmidt on |sin(2 pi m x)|^alpha (L^2 discretized at 1e4
// midpoints) for the holder basis.
class HolderBasisFunctions {
 public:
  HolderBasisFunctions(int nu, double alpha, HolderBasis basis);
  double operator()(int m, double x) const;  // m in [0, nu)
  int size() const { return nu_; }
  // Largest |<e_i, e_j> - delta_ij| on the discretization.
  double orthonormality_defect() const { return defect_; }

 private:
  int nu_;
  double alpha_;
  HolderBasis basis_;
  std::vector<std::vector<double>> coeff_;  // e_m = sum_k coeff_[m][k] seed_k
  double defect_ = 0.0;
};

// c(i, j) = sqrt(nu / sum d^2) d(i, j), d(i, j) = (1/n) sum_m e_m(i/n) e_m(j/n).
KernelMatrix gen_holder_qf(int n, int nu, double alpha, HolderBasis basis);
// Nonzero spectrum of the same matrix through its rank-nu factorization.
SpectralForm holder_qf_spectrum(int n, int nu, double alpha, HolderBasis basis);

enum class ExperimentName { naive, ustat, ar1, ar2, holder_qf };
ExperimentName parse_experiment_name(const std::string& s);
std::string to_string(ExperimentName name);

struct ExperimentSpec {
  ExperimentName name = ExperimentName::naive;
  std::vector<int> n_list;
  double nu = 2.0;
  // beta (ar1), theta (ar2), basis_size and alpha (holder_qf), holder_basis
  // (0 = trig, 1 = holder).
  std::map<std::string, double> params;
  std::size_t draws = 0;  // 0 disables the Monte Carlo d2 estimate
  std::uint64_t seed = 1;
  std::size_t family_size = 64;
  std::optional<DistanceMethod> d2_method;  // defaults to mc when draws > 0
  bool include_small_n = false;             // keep the two smallest n in fits
  bool tv = true;  // closed-form TV when the spectrum has two positive eigenvalues and nu = 2

  void validate() const;
};

struct RatePoint {
  int n = 0;
  double rescale = 1.0;  // factor applied to the eigenvalues
  std::size_t rank = 0;
  BoundReport bound;
  std::optional<DistanceEstimate> d2;
};

struct RateFit {
  numeric::LinearFit fit;
  std::vector<int> n_used;
};

struct RateReport {
  ExperimentSpec spec;
  std::vector<RatePoint> points;
  // Keys: M, sqrtM, kappa3_diff, kappa4_diff, d2_upper_shape, d2_upper_unsplit,
  // term_unsplit, d2_empirical, tv. Absent when fewer than two usable points.
  std::map<std::string, RateFit> slopes;
};

// The spectral form an experiment uses at size n, before normalization.
SpectralForm experiment_form(const ExperimentSpec& spec, int n);

RateReport run_experiment(const ExperimentSpec& spec, Execution exec = Execution::parallel);

void write_rate_csv(const RateReport& report, std::ostream& out);
// Whitespace-separated columns with a '#' header line.
void write_rate_gnuplot(const RateReport& report, std::ostream& out);

}  // namespace wgl
