#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wgl/errors.hpp"
#include "wgl/experiments.hpp"

using namespace wgl;

namespace {

std::vector<double> sorted(const SpectralForm& f) {
  std::vector<double> v(f.eigenvalues().begin(), f.eigenvalues().end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("naive example") {
  const auto f = gen_naive(10);
  CHECK(f.eigenvalue(0) == doctest::Approx(1.048808848).epsilon(1e-9));
  CHECK(f.eigenvalue(1) == doctest::Approx(0.948683298).epsilon(1e-9));
  for (int n : {2, 3, 10, 1000}) {
    const auto g = gen_naive(n);
    CHECK(g.power_sum(2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cumulant_spectral(g, 4) - 96.0 == doctest::Approx(96.0 / (n * n)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(gen_naive(1), DomainError);
}

TEST_CASE("U-statistic example") {
  const auto u2 = sorted(gen_ustat(2));
  CHECK(u2[0] == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-14));
  CHECK(u2[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  for (int n : {2, 5, 50, 300}) CHECK(gen_ustat(n).power_sum(2) == doctest::Approx(1.0).epsilon(1e-13));

  const auto direct = sorted(spectral_from_kernel(ustat_kernel(50)));
  REQUIRE(direct.size() == 50);
  for (std::size_t i = 0; i < 49; ++i) CHECK(std::fabs(direct[i] + 1.0 / std::sqrt(50.0 * 49.0)) <= 1e-10);
  CHECK(std::fabs(direct[49] - std::sqrt(49.0 / 50.0)) <= 1e-10);
}

TEST_CASE("AR(1) generator") {
  for (int n : {2, 7, 30}) {
    const auto a = gen_ar1(n, 0.0);
    const auto u = ustat_kernel(n);
    CHECK(std::equal(a.entries().begin(), a.entries().end(), u.entries().begin()));
  }
  const auto k = gen_ar1(10, 1.0);
  const auto f = spectral_from_kernel(k);
  CHECK(f.power_sum(2) == doctest::Approx(k.frobenius_squared()).epsilon(1e-12));
}

TEST_CASE("AR(2) variance and limits") {
  for (double theta : {std::numbers::pi / 4, 1.0}) {
    for (int n : {3, 10, 57, 200}) {
      const auto inst = gen_ar2(n, theta);
      CHECK(std::fabs(inst.variance - inst.variance_brute) <= 1e-9 * inst.variance_brute);
      CHECK(ar2_variance_closed_form(n, theta) == inst.variance);
    }
  }
  const auto w = spectral_from_kernel(gen_ar2(400, 1.0).matrix);
  CHECK(w.variance() == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(std::fabs(cumulant_spectral(w, 3) - 16.0) <= 0.5);

  std::vector<double> n, d2, d3, d4;
  for (int k : {25, 50, 100, 200, 400}) {
    const auto inst = gen_ar2(k, 1.0);
    const auto f = spectral_from_kernel(inst.matrix);
    n.push_back(k);
    d2.push_back(std::fabs(inst.variance - 4.0));
    d3.push_back(std::fabs(cumulant_spectral(f, 3) - 16.0));
    d4.push_back(std::fabs(cumulant_spectral(f, 4) - 96.0));
  }
  CHECK(numeric::fit_loglog(n, d2).slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(numeric::fit_loglog(n, d3).slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(numeric::fit_loglog(n, d4).slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK_THROWS_AS(gen_ar2(10, 0.0), DomainError);
}

TEST_CASE("generated kernels round-trip through the eigensolver") {
  std::vector<KernelMatrix> ks{ustat_kernel(40), gen_ar1(40, 0.0), gen_ar1(40, 2.0), gen_ar2(40, 1.0).matrix,
                               gen_holder_qf(40, 2, 1.0, HolderBasis::trig),
                               gen_holder_qf(40, 3, 0.5, HolderBasis::holder)};
  for (const auto& k : ks) {
    const auto f = spectral_from_kernel(k);
    CHECK(f.power_sum(2) + f.discarded_mass() == doctest::Approx(k.frobenius_squared()).epsilon(1e-10));
  }
}

TEST_CASE("Holder quadratic forms") {
  for (auto [nu, alpha, basis] : {std::tuple{2, 1.0, HolderBasis::trig}, std::tuple{3, 0.5, HolderBasis::holder},
                                  std::tuple{1, 0.8, HolderBasis::holder}}) {
    const HolderBasisFunctions e(nu, alpha, basis);
    CHECK(e.orthonormality_defect() <= 1e-8);
    const auto k = gen_holder_qf(60, nu, alpha, basis);
    CHECK(k.frobenius_squared() == doctest::Approx(nu).epsilon(1e-12));
    auto a = sorted(spectral_from_kernel(k));
    auto b = sorted(holder_qf_spectrum(60, nu, alpha, basis));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-10);
  }
  CHECK_THROWS_AS(gen_holder_qf(1, 1, 1.0, HolderBasis::trig), DomainError);
  CHECK_THROWS_AS(holder_qf_spectrum(2, 2, 1.0, HolderBasis::trig), DomainError);
  CHECK_THROWS_AS(HolderBasisFunctions(2, 0.5, HolderBasis::trig), ValidationError);
  CHECK_THROWS_AS(HolderBasisFunctions(2, 1.5, HolderBasis::holder), DomainError);
}

TEST_CASE("experiment specs validate") {
  ExperimentSpec s;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.n_list = {10, 10};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.n_list = {1, 10};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.n_list = {10, 20};
  s.validate();
  s.draws = 1000;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.draws = 0;
  s.name = ExperimentName::ar1;
  s.params["beta"] = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK(parse_experiment_name("holder_qf") == ExperimentName::holder_qf);
  CHECK(to_string(ExperimentName::ustat) == "ustat");
  CHECK_THROWS_AS(parse_experiment_name("nope"), ValidationError);
}

TEST_CASE("analytic rates") {
  ExperimentSpec naive;
  naive.n_list = {10, 20, 40, 80, 160, 320};
  const auto r = run_experiment(naive);
  CHECK(r.slopes.at("M").fit.slope == doctest::Approx(-2.0).epsilon(0.005));
  CHECK(r.slopes.at("d2_upper_shape").fit.slope == doctest::Approx(-2.0).epsilon(0.005));
  CHECK(r.slopes.at("tv").fit.slope == doctest::Approx(-2.0).epsilon(0.025));
  CHECK(r.slopes.at("term_unsplit").fit.slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(r.slopes.at("M").n_used == std::vector<int>{40, 80, 160, 320});
  for (const auto& p : r.points) CHECK(std::fabs(p.bound.kappa2 - 4.0) <= 1e-12);

  ExperimentSpec u;
  u.name = ExperimentName::ustat;
  u.nu = 1.0;
  u.n_list = {10, 20, 50, 100, 200, 500, 1000};
  const auto ur = run_experiment(u);
  CHECK(ur.slopes.at("M").fit.slope == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(ur.slopes.at("kappa3_diff").fit.slope == doctest::Approx(-1.0).epsilon(0.05));

  naive.include_small_n = true;
  CHECK(run_experiment(naive).slopes.at("M").n_used.size() == 6);
}

TEST_CASE("experiment output and determinism") {
  ExperimentSpec s;
  s.n_list = {10, 20, 40};
  s.draws = 100000;
  s.family_size = 16;
  s.seed = 3;
  const auto a = run_experiment(s, Execution::serial);
  const auto b = run_experiment(s, Execution::parallel);
  REQUIRE(a.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(a.points[i].d2.has_value());
    CHECK(a.points[i].d2->value == b.points[i].d2->value);
  }
  std::ostringstream csv, plot;
  write_rate_csv(a, csv);
  write_rate_gnuplot(a, plot);
  const std::string text = csv.str();
  CHECK(text.rfind("n,kappa3_diff,kappa4_diff,M,d2_upper_shape,d2_empirical,tv\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(plot.str().front() == '#');
  for (int n : {2, 10}) {
    const auto f = experiment_form(s, n);
    CHECK(std::fabs(2 * f.power_sum(2) - 2 * s.nu) <= 1e-12);
  }
}
