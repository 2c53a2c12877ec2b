#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "support.hpp"
#include "wgl/chaos.hpp"
#include "wgl/errors.hpp"

using namespace wgl;

TEST_CASE("cumulant_target oracles") {
  CHECK(cumulant_target(GammaTarget(2.0), 3) == 16.0);
  CHECK(cumulant_target(GammaTarget(2.0), 4) == 96.0);
  CHECK(cumulant_target(GammaTarget(5.0), 1) == 0.0);
  CHECK(cumulant_target(GammaTarget(2.0), 2) == 4.0);
  CHECK_THROWS_AS(cumulant_target(GammaTarget(2.0), 0), DomainError);
  CHECK_THROWS_AS(GammaTarget(0.0), DomainError);
  CHECK_THROWS_AS(GammaTarget(-1.0), DomainError);
}

TEST_CASE("cumulant_spectral oracles") {
  CHECK(cumulant_spectral(SpectralForm({1.0, 1.0}), 3) == doctest::Approx(16.0).epsilon(1e-15));
  const double h = std::sqrt(0.5);
  CHECK(std::fabs(cumulant_spectral(SpectralForm({h, -h}), 3)) < 1e-14);
  const SpectralForm naive({std::sqrt(1.1), std::sqrt(0.9)});
  CHECK(cumulant_spectral(naive, 4) == doctest::Approx(96.96).epsilon(1e-13));
  CHECK_THROWS_AS(cumulant_spectral(naive, 1), DomainError);
}

TEST_CASE("spectral form validation") {
  CHECK_THROWS_AS(SpectralForm(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(SpectralForm({0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(SpectralForm({1.0, NAN}), ValidationError);
  CHECK_THROWS_AS(KernelMatrix(2, {0.0, 1.0, 0.5, 0.0}), ValidationError);
  CHECK_THROWS_AS(KernelMatrix(2, {0.0, 1.0, 1.0}), ValidationError);
}

TEST_CASE("spectral_from_kernel oracles") {
  auto sorted = [](const SpectralForm& f) {
    std::vector<double> v(f.eigenvalues().begin(), f.eigenvalues().end());
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto id = sorted(spectral_from_kernel(KernelMatrix(2, {1, 0, 0, 1})));
  REQUIRE(id.size() == 2);
  CHECK(id[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(id[1] == doctest::Approx(1.0).epsilon(1e-14));

  const double h = std::sqrt(0.5);
  const auto u = sorted(spectral_from_kernel(KernelMatrix(2, {0, h, h, 0})));
  REQUIRE(u.size() == 2);
  CHECK(u[0] == doctest::Approx(-h).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(h).epsilon(1e-14));

  CHECK_THROWS_AS(spectral_from_kernel(KernelMatrix(3, std::vector<double>(9, 0.0))),
                  ValidationError);
}

TEST_CASE("diagonal kernels return their diagonal") {
  const auto forms = testing::random_spectra(20, 11);
  for (const auto& f : forms) {
    const std::size_t n = f.size();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = f.eigenvalue(i);
    auto got = spectral_from_kernel(KernelMatrix(n, a));
    std::vector<double> g(got.eigenvalues().begin(), got.eigenvalues().end());
    std::vector<double> e(f.eigenvalues().begin(), f.eigenvalues().end());
    std::sort(g.begin(), g.end());
    std::sort(e.begin(), e.end());
    REQUIRE(g.size() == e.size());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(g[i] - e[i]) < 1e-12);
  }
}

TEST_CASE("second cumulant is twice the sum of squares") {
  for (const auto& f : testing::random_spectra(50, 3)) {
    const double direct = 2.0 * f.power_sum(2);
    CHECK(std::fabs(cumulant_spectral(f, 2) - direct) <= 1e-14 * direct);
  }
}

TEST_CASE("cumulants scale homogeneously") {
  for (const auto& f : testing::random_spectra(20, 5)) {
    for (double alpha : {-1.7, 0.3, 2.5}) {
      for (int p = 2; p <= 8; ++p) {
        const double lhs = cumulant_spectral(f.scaled(alpha), p);
        const double rhs = std::pow(alpha, p) * cumulant_spectral(f, p);
        CHECK(std::fabs(lhs - rhs) <= 1e-12 * (std::fabs(rhs) + 1e-300) + 1e-12);
      }
    }
  }
}

TEST_CASE("sample oracles") {
  const auto b = sample(SpectralForm({1.0}), 1000000, 42);
  double mean = 0.0;
  for (double d : b.draws) mean += d;
  mean /= static_cast<double>(b.count());
  CHECK(std::fabs(mean) <= 5.0 * std::sqrt(2.0 / 1e6));

  const auto g2 = sample(SpectralForm({1.0, 1.0}), 1000000, 42);
  const auto est = estimate_cumulants(g2.draws, 3);
  CHECK(std::fabs(est.value[3] - 16.0) <= 5.0 * est.standard_error[3]);

  const auto a = sample(SpectralForm({3.0}), 1, 7);
  const auto c = sample(SpectralForm({3.0}), 1, 7);
  CHECK(a.draws == c.draws);
  CHECK(a.count() == 1);
}

TEST_CASE("serial and parallel sampling agree bit for bit") {
  const SpectralForm f({1.3, -0.4, 0.9});
  const auto s = sample(f, 100003, 9, Execution::serial);
  const auto p = sample(f, 100003, 9, Execution::parallel);
  CHECK(s.draws == p.draws);
}

TEST_CASE("sample cumulants match exact cumulants for orders 2..8") {
  // Higher orders are checked on a smaller corpus; each spectrum is 10^6 draws.
  const auto forms = testing::random_spectra(4, 21, 10, 3.0);
  std::uint64_t seed = 100;
  for (const auto& f : forms) {
    const auto b = sample(f, 1000000, seed++);
    const auto est = estimate_cumulants(b.draws, 8);
    for (int p = 2; p <= 8; ++p) {
      INFO("p = " << p);
      CHECK(std::fabs(est.value[p] - cumulant_spectral(f, p)) <= 5.0 * est.standard_error[p]);
    }
  }
}

TEST_CASE("char_function oracles") {
  for (int nu : {1, 2, 5}) {
    const SpectralForm g(std::vector<double>(nu, 1.0));
    for (double t : {-3.0, -0.2, 0.7, 4.0}) {
      const std::complex<double> i(0.0, 1.0);
      const double lhs = std::norm(char_function(g, t)) *
                         std::pow(std::abs(std::exp(2.0 * i * t) * (1.0 - 2.0 * i * t)), nu);
      CHECK(lhs == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(char_function(SpectralForm({0.3, -2.0}), 0.0) == std::complex<double>(1.0, 0.0));

  const auto b = sample(SpectralForm({1.0}), 1000000, 5);
  double re = 0, im = 0, re2 = 0, im2 = 0;
  for (double x : b.draws) {
    re += std::cos(0.5 * x);
    im += std::sin(0.5 * x);
    re2 += std::cos(0.5 * x) * std::cos(0.5 * x);
    im2 += std::sin(0.5 * x) * std::sin(0.5 * x);
  }
  const double n = static_cast<double>(b.count());
  re /= n;
  im /= n;
  const double se_re = std::sqrt((re2 / n - re * re) / n);
  const double se_im = std::sqrt((im2 / n - im * im) / n);
  const auto phi = char_function(SpectralForm({1.0}), 0.5);
  CHECK(std::fabs(phi.real() - re) <= 3.0 * se_re);
  CHECK(std::fabs(phi.imag() - im) <= 3.0 * se_im);
}

TEST_CASE("char_function is conjugate symmetric") {
  for (const auto& f : testing::random_spectra(20, 8)) {
    for (double t : {0.01, 0.3, 2.0, 17.0}) {
      const auto a = char_function(f, -t);
      const auto b = std::conj(char_function(f, t));
      CHECK(std::abs(a - b) <= 1e-14);
    }
  }
}

TEST_CASE("density inversion recovers G(2)") {
  const GammaTarget g(2.0);
  const auto r = density_cf_inversion(SpectralForm({1.0, 1.0}), GridSpec(-4.0, 40.0, 4097));
  CHECK(r.edge_singular);
  double err = 0.0;
  const auto& d = r.density;
  for (std::size_t i = 0; i < d.grid().n_points; ++i) {
    const double x = d.grid().node(i);
    if (x > -2.0) err = std::max(err, std::fabs(d.value(i) - g.density(x)));
  }
  CHECK(err <= 1e-3);
}

TEST_CASE("density of a symmetric spectrum is symmetric") {
  const auto r = density_cf_inversion(SpectralForm({1.0, -1.0}), GridSpec(-30.0, 30.0, 4001));
  const auto& d = r.density;
  const std::size_t n = d.grid().n_points;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(d.value(i) - d.value(n - 1 - i)));
  CHECK(err <= 1e-6);
}

TEST_CASE("density CDF lies in the DKW band of the empirical CDF") {
  const SpectralForm f({std::sqrt(1.1), std::sqrt(0.9)});
  const auto r = density_cf_inversion(f, GridSpec(-4.0, 40.0, 4097));
  auto b = sample(f, 1000000, 77);
  std::sort(b.draws.begin(), b.draws.end());
  const double n = static_cast<double>(b.count());
  const double eps = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * n));
  auto ecdf = [&](double x) {
    return static_cast<double>(std::upper_bound(b.draws.begin(), b.draws.end(), x) - b.draws.begin()) / n;
  };
  const auto& d = r.density;
  const double h = d.grid().spacing();
  const double x0 = d.grid().node(0);
  double integral = 0.0, worst = 0.0;
  for (std::size_t i = 1; i < d.grid().n_points; ++i) {
    integral += 0.5 * h * (d.value(i - 1) + d.value(i));
    const double x = d.grid().node(i);
    worst = std::max(worst, std::fabs(integral - (ecdf(x) - ecdf(x0))));
  }
  CHECK(worst <= 2.0 * eps);
}

TEST_CASE("Gamma target density integrates and matches its cdf") {
  for (double nu : {0.5, 1.0, 2.0, 7.3}) {
    const GammaTarget g(nu);
    CHECK(g.cdf(-nu) == 0.0);
    CHECK(g.cdf(3.0) + g.survival(3.0) == doctest::Approx(1.0).epsilon(1e-14));
    const double a = -nu + 0.5, b = -nu + 1.5;
    double s = 0.0;
    const int m = 20000;
    for (int i = 0; i < m; ++i) s += g.density(a + (b - a) * (i + 0.5) / m);
    s *= (b - a) / m;
    CHECK(s == doctest::Approx(g.cdf(b) - g.cdf(a)).epsilon(1e-7));
  }
}
