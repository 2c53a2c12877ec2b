#include <doctest.h>

#include "wgl/experiments.hpp"

using namespace wgl;

// Trigonometric basis, alpha = 1, nu = 2: both cumulant differences are
// expected to decay like 1/n.
TEST_CASE("Holder quadratic form cumulant rates") {
  ExperimentSpec s;
  s.name = ExperimentName::holder_qf;
  s.nu = 2.0;
  s.params = {{"alpha", 1.0}, {"basis_size", 2.0}, {"holder_basis", 0.0}};
  s.n_list = {10, 20, 40, 80, 160, 320, 640, 1280};
  const auto r = run_experiment(s);
  const double k3 = r.slopes.at("kappa3_diff").fit.slope;
  const double k4 = r.slopes.at("kappa4_diff").fit.slope;
  MESSAGE("kappa3 slope " << k3 << ", kappa4 slope " << k4);
  CHECK(k3 == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(k4 == doctest::Approx(-1.0).epsilon(0.1));
}
