#pragma once

// Lower estimates of d_2(F, G(nu)) from a fixed family of smooth test
// functions, and the closed-form two-eigenvalue density with its total
// variation distance to G(2).

#include <cstdint>
#include <string>
#include <vector>

#include "wgl/chaos.hpp"
#include "wgl/grid.hpp"
#include "wgl/parallel.hpp"

namespace wgl {

// a sin(omega x + phase) with a = min(1/omega, 1/omega^2), or
// width * tanh((x - shift) / width) with width >= 1. Both satisfy
// |h'| <= 1 and |h''| <= 1 analytically.
struct TestMember {
  enum class Kind { sine, ramp } kind = Kind::sine;
  double omega = 1.0;
  double phase = 0.0;
  double amplitude = 1.0;
  double shift = 0.0;
  double width = 1.0;

  double operator()(double x) const;
  std::string describe() const;
};

struct TestFamily {
  GridSpec grid;
  std::vector<TestMember> members;
  std::vector<GridFunction> sampled;  // members on the grid
  std::vector<double> frequencies;    // distinct sinusoid frequencies
};

// Three quarters sinusoids (frequencies log-spaced in [0.05, 20], phases
// 0, pi/2, pi/4), one quarter ramps. Throws ValidationError for size < 8
// or when a sampled member violates its norm caps by more than 1e-9.
TestFamily build_test_family(const GridSpec& grid, std::size_t size);

enum class DistanceMethod { mc, quadrature };

struct DistanceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  DistanceMethod method = DistanceMethod::mc;
  std::size_t family_size = 0;
  std::size_t argmax = 0;     // member attaining the maximum
  double noise_floor = 0.0;        // largest member standard error of this estimator
  double plain_noise_floor = 0.0;  // largest uncoupled Monte Carlo standard error
  bool coupled = false;       // common-random-number coupling with G(nu) used
  std::vector<double> member_differences;  // E h(F) - E h(G) per member
  std::vector<double> member_se;
};

// Monte Carlo: one shared batch of draws for all members. When nu is an
// integer no larger than the number of eigenvalues, G(nu) is realized on the
// same normals (the nu eigenvalues closest to 1) and h(F) - h(G) is averaged,
// symmetrized over cyclic shifts of those normals, with E h(G) by quadrature.
// Quadrature: E h(F) - E h(G) as frequency-domain integrals of the
// characteristic functions.
DistanceEstimate d2_lower_estimate(const SpectralForm& form, const GammaTarget& target,
                                   const TestFamily& family, std::size_t draws,
                                   std::uint64_t seed, DistanceMethod method = DistanceMethod::mc,
                                   Execution exec = Execution::parallel);

// E h(X) - E h(G(nu)) for one member, via characteristic functions.
double member_difference_fourier(const TestMember& h, const SpectralForm& form,
                                 const GammaTarget& target);
// E h(G(nu)) for one member.
double member_target_expectation(const TestMember& h, const GammaTarget& target);

// 1F1(1/2; 1; z).
double kummer_1f1_half(double z);

// Density of c1 (N1^2 - 1) + c2 (N2^2 - 1) for c1, c2 > 0.
double two_eig_density(double c1, double c2, double x);

// (1/2) integral |f_{c1,c2} - f_{G(2)}|; requires nu = 2.
double tv_distance_two_eig(double c1, double c2, const GammaTarget& target);

}  // namespace wgl
