// Acceptance run: one PASS/FAIL line per criterion.
//
//   wgl_acceptance            all criteria
//   wgl_acceptance 5 12       selected criteria
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "support.hpp"
#include "wgl/bounds.hpp"
#include "wgl/chaos.hpp"
#include "wgl/distance.hpp"
#include "wgl/experiments.hpp"
#include "wgl/gamma_ops.hpp"
#include "wgl/stein.hpp"

using namespace wgl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string payload;  // exact results of seeded Monte Carlo work, for the rerun check
};

// Hex-float record of values, so that "identical" means bit-identical.
struct Payload {
  std::ostringstream s;
  void add(double v) { s << std::hexfloat << v << ';'; }
  std::string str() const { return s.str(); }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ----------------------------------------------------------------------
Outcome cumulant_engine() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  Payload pl;
  const auto corpus = testing::random_spectra(20, 2024, 10, 3.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto b = sample(corpus[i], 1000000, 1000 + i);
    const auto est = estimate_cumulants(b.draws, 4);
    for (int p = 2; p <= 4; ++p) {
      const double z = std::fabs(est.value[p] - cumulant_spectral(corpus[i], p)) / est.standard_error[p];
      worst = std::max(worst, z);
      pl.add(est.value[p]);
      pl.add(est.standard_error[p]);
    }
  }
  const double secs = seconds_since(t0);
  o.pass = worst <= 5.0 && secs < 60.0;
  o.detail = fmt("20 spectra x 1e6 draws, worst |z| = %.2f (limit 5), %.1f s (limit 60)", worst, secs);
  o.payload = pl.str();
  return o;
}

// ---- 2 ----------------------------------------------------------------------
Outcome variance_routes() {
  Outcome o;
  double worst = 0.0;
  for (const auto& f : testing::random_spectra(20, 2024, 10, 3.0)) {
    for (int r = 1; r <= 4; ++r) {
      const double a = var_gamma_diff_trace(f, r);
      const double b = var_gamma_diff_cumulant(f, r);
      worst = std::max(worst, std::fabs(a - b) / std::max(a, 1e-300));
    }
  }
  bool zero = true;
  for (int m : {1, 2, 5, 10}) {
    const SpectralForm ones(std::vector<double>(m, 1.0));
    for (int r = 1; r <= 4; ++r) {
      zero = zero && var_gamma_diff_trace(ones, r) == 0.0 && var_gamma_diff_cumulant(ones, r) == 0.0;
    }
  }
  o.pass = worst <= 1e-10 && zero;
  o.detail = fmt("worst relative gap %.2e (limit 1e-10); unit spectra exactly zero: %s", worst,
                 zero ? "yes" : "no");
  return o;
}

// ---- 3 ----------------------------------------------------------------------
Outcome variance_chain() {
  Outcome o;
  double worst1 = INFINITY, worst2 = INFINITY;
  for (const auto& f : testing::random_spectra(20, 2024, 10, 3.0)) {
    const double nu = f.power_sum(2);
    const double v1 = var_gamma_diff_trace(f, 1);
    const double v2 = var_gamma_diff_trace(f, 2);
    const double rhs1 = 4.0 * nu * v1;
    const double rhs2 = 2.0 * v1 * v1;
    worst1 = std::min(worst1, (rhs1 - v2) / std::max(rhs1, 1e-300));
    worst2 = std::min(worst2, (rhs2 - var_combined(f)) / std::max(rhs2, 1e-300));
  }
  o.pass = worst1 >= -1e-10 && worst2 >= -1e-10;
  o.detail = fmt("min relative slack: 4nu factor %.3g, squared-variance bound %.3g (limit -1e-10)", worst1,
                 worst2);
  return o;
}

// ---- 4 ----------------------------------------------------------------------
Outcome constants() {
  Outcome o;
  std::size_t tuples = 0;
  bool equal = true;
  for (int s = 1; s <= 5; ++s) {
    for (const auto& k : admissible_keys(2, s)) {
      ++tuples;
      equal = equal && gamma_constants(k, ConstantVariant::new_recursion) ==
                           gamma_constants(k, ConstantVariant::classical);
    }
  }
  const GammaConstantKey k3(3, {1, 1});
  const Rational ratio = gamma_constants(k3, ConstantVariant::new_recursion) /
                         gamma_constants(k3, ConstantVariant::classical);
  o.pass = equal && tuples > 0 && ratio == Rational(4, 3);
  std::ostringstream r;
  r << ratio;
  o.detail = fmt("q = 2: %zu tuples (s <= 5) %s; q = 3 (1,1) ratio %s (expected 4/3)", tuples,
                 equal ? "all equal" : "MISMATCH", r.str().c_str());
  return o;
}

// ---- 5 ----------------------------------------------------------------------
Outcome stein_solver() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  double id_err = 0, bv_err = 0, b1 = -INFINITY, b2 = -INFINITY, ode = 0;
  for (double nu : {0.5, 1.0, 2.0, 5.0}) {
    const GammaTarget t(nu);
    const auto grid = GridSpec::centered_gamma_default(nu);
    const auto id = solve_stein(GridFunction::sample(grid, [](double x) { return x; }), t);
    for (double v : id.solution.values()) id_err = std::max(id_err, std::fabs(v + 1.0));

    for (const auto& h : testing::lipschitz_corpus(grid, 50, 500 + static_cast<int>(10 * nu))) {
      const auto s = solve_stein(h, t);
      const double expected = (h(-nu) - s.expectation) / nu;
      bv_err = std::max(bv_err, std::fabs(s.value_at(-nu) - expected) / std::max(1.0, std::fabs(expected)));
      b1 = std::max(b1, s.solution.sup_norm() - h.lip_norm());
      b2 = std::max(b2, s.derivative.sup_norm() - testing::c_nu(nu) * h.lip_norm());
      // Residual at cell midpoints, with S' from central differences of the
      // continuous solution rather than from the solver's own derivative.
      const double d = 1e-4;
      double worst = 0.0;
      for (std::size_t k = 0; k + 1 < grid.n_points; ++k) {
        const double x = 0.5 * (grid.node(k) + grid.node(k + 1));
        if (std::fabs(x + nu) < 2 * d) continue;
        const double ds = (s.value_at(x + d) - s.value_at(x - d)) / (2 * d);
        const double r = 2 * (x + nu) * ds - x * s.value_at(x) - (h(x) - s.expectation);
        worst = std::max(worst, std::fabs(r));
      }
      ode = std::max(ode, worst / (1.0 + h.lipschitz_space_norm()));
    }
  }
  const double secs = seconds_since(t0);
  o.pass = id_err <= 1e-6 && bv_err <= 1e-12 && b1 <= 1e-6 && b2 <= 1e-6 && ode <= 1e-6 && secs < 120;
  o.detail = fmt("S(x) = -1 err %.1e; boundary err %.1e; sup excess %.1e, derivative excess %.1e; "
                 "ODE residual %.1e; %.1f s",
                 id_err, bv_err, b1, b2, ode, secs);
  return o;
}

// ---- 6 ----------------------------------------------------------------------
Outcome fredholm() {
  Outcome o;
  const double nu = 2.0;
  const GammaTarget t(nu);
  const auto grid = GridSpec::centered_gamma_default(nu, 1024);
  const FredholmSolver solver(grid, t, 2.0);
  double worst = 0.0;
  for (const auto& h : testing::lipschitz_corpus(grid, 50, 66)) {
    worst = std::max(worst, solver.residual(solver.solve(h), h));
  }
  const auto zero = GridFunction::sample(grid, [](double) { return 0.0; });
  double gmax = 0.0, cond = 0.0;
  for (double lambda : {-10.0, -2.0, -0.5, 0.5, 2.0, 10.0}) {
    const FredholmSolver s(grid, t, lambda);
    gmax = std::max(gmax, s.solve(zero).sup_norm());
    cond = std::max(cond, s.condition_estimate());
  }
  o.pass = worst <= 1e-6 && gmax <= 1e-8 && cond < 1e12;
  o.detail = fmt("residual %.1e (limit 1e-6); homogeneous |g| %.1e, worst condition %.2e", worst, gmax, cond);
  return o;
}

// ---- 7 ----------------------------------------------------------------------
Outcome identities() {
  Outcome o;
  Payload pl;
  const GammaTarget t(2.0);
  const auto grid = GridSpec::centered_gamma_default(2.0);
  auto g = [&](auto f) { return GridFunction::sample(grid, f); };
  const std::vector<std::pair<SpectralForm, GridFunction>> pairs{
      {SpectralForm({1.0, 1.0}), g([](double x) { return std::sin(x); })},
      {SpectralForm({std::sqrt(1.5), std::sqrt(0.5)}), g([](double x) { return std::sin(x); })},
      {gen_naive(10), g([](double x) { return std::cos(0.5 * x); })},
      {SpectralForm({1.2, 0.6, -std::sqrt(2.0 - 1.44 - 0.36)}), g([](double x) { return std::tanh(x - 1.0); })},
      {SpectralForm({0.8, 0.8, 0.6, 0.6, std::sqrt(2.0 - 1.28 - 0.72)}), g([](double x) { return 0.25 * std::sin(2 * x + 1); })},
  };
  double worst = 0.0;
  int passed = 0;
  std::uint64_t seed = 70;
  for (const auto& [f, fn] : pairs) {
    for (auto part : {IdentityPart::a, IdentityPart::b}) {
      const auto c = verify_komaki_identity(f, t, fn, 1000000, seed++, part);
      worst = std::max(worst, std::fabs(c.lhs - c.rhs) / c.combined_se);
      passed += c.pass;
      pl.add(c.lhs);
      pl.add(c.rhs);
    }
  }
  bool vanish = true;
  for (double nu : {0.5, 1.0, 2.0, 7.3}) {
    const auto [ka, kb] = target_cumulant_combinations(nu);
    vanish = vanish && ka == 0 && kb == 0;
  }
  o.pass = passed == 10 && worst <= 5.0 && vanish;
  o.detail = fmt("%d/10 identity checks within 5 SE (worst %.2f SE); target combinations exactly 0: %s", passed,
                 worst, vanish ? "yes" : "no");
  o.payload = pl.str();
  return o;
}

// ---- 8 ----------------------------------------------------------------------
Outcome naive_rates() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  ExperimentSpec s;
  s.n_list = {10, 20, 40, 80, 160, 320};
  s.include_small_n = true;
  const auto r = run_experiment(s);
  const double m = r.slopes.at("M").fit.slope;
  const double tv = r.slopes.at("tv").fit.slope;
  const double unsplit = r.slopes.at("term_unsplit").fit.slope;
  const double whole = r.slopes.at("d2_upper_unsplit").fit.slope;
  const double split = r.slopes.at("d2_upper_shape").fit.slope;
  const double secs = seconds_since(t0);
  o.pass = std::fabs(m + 2) <= 0.01 && std::fabs(tv + 2) <= 0.05 && std::fabs(unsplit + 1) <= 0.1 && secs < 300;
  o.detail = fmt("slopes: M %.4f, TV %.4f, unsplit term %.4f (split bound %.4f, whole unsplit bound %.4f); %.1f s",
                 m, tv, unsplit, split, whole, secs);
  return o;
}

// ---- 9 ----------------------------------------------------------------------
Outcome ustat() {
  Outcome o;
  ExperimentSpec s;
  s.name = ExperimentName::ustat;
  s.nu = 1.0;
  s.n_list = {10, 20, 50, 100, 200, 500, 1000};
  s.include_small_n = true;
  const double slope = run_experiment(s).slopes.at("M").fit.slope;
  auto e = spectral_from_kernel(ustat_kernel(50));
  std::vector<double> v(e.eigenvalues().begin(), e.eigenvalues().end());
  std::sort(v.begin(), v.end());
  double err = std::fabs(v.back() - std::sqrt(49.0 / 50.0));
  for (std::size_t i = 0; i + 1 < v.size(); ++i) err = std::max(err, std::fabs(v[i] + 1.0 / std::sqrt(50.0 * 49.0)));
  o.pass = std::fabs(slope + 1) <= 0.05 && v.size() == 50 && err <= 1e-10;
  o.detail = fmt("M slope %.4f (target -1 +- 0.05); kernel eigenvalues at n = 50 err %.1e", slope, err);
  return o;
}

// ---- 10 ---------------------------------------------------------------------
Outcome ar2() {
  Outcome o;
  double worst = 0.0;
  for (double theta : {std::numbers::pi / 4, 1.0}) {
    for (int n = 3; n <= 200; ++n) {
      const auto inst = gen_ar2(n, theta);
      worst = std::max(worst, std::fabs(inst.variance - inst.variance_brute) / inst.variance_brute);
    }
  }
  ExperimentSpec s;
  s.name = ExperimentName::ar2;
  s.params["theta"] = 1.0;
  s.n_list = {25, 50, 100, 200, 400};
  s.include_small_n = true;
  const auto r = run_experiment(s);
  const double k3 = r.slopes.at("kappa3_diff").fit.slope;
  const double k4 = r.slopes.at("kappa4_diff").fit.slope;
  const double k3_last = r.points.back().bound.kappa3;
  o.pass = worst <= 1e-9 && std::fabs(k3 + 1) <= 0.1 && std::fabs(k4 + 1) <= 0.1 && std::fabs(k3_last - 16) <= 0.5;
  o.detail = fmt("variance rel err %.1e; kappa3(400) = %.3f; slopes |k3-16| %.3f, |k4-96| %.3f", worst, k3_last, k3, k4);
  return o;
}

// ---- 11 ---------------------------------------------------------------------
Outcome holder() {
  Outcome o;
  ExperimentSpec s;
  s.name = ExperimentName::holder_qf;
  s.nu = 2.0;
  s.params = {{"alpha", 1.0}, {"basis_size", 2.0}, {"holder_basis", 0.0}};
  s.n_list = {10, 20, 40, 80, 160, 320, 640, 1280};
  const auto r = run_experiment(s);
  const double k3 = r.slopes.at("kappa3_diff").fit.slope;
  const double k4 = r.slopes.at("kappa4_diff").fit.slope;
  o.pass = std::fabs(k3 + 1) <= 0.1 && std::fabs(k4 + 1) <= 0.1;
  o.detail = fmt("cumulant-difference slopes %.3f, %.3f (target -1 +- 0.1)", k3, k4);
  return o;
}

// ---- 12 ---------------------------------------------------------------------
Outcome sandwich() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  Payload pl;
  ExperimentSpec s;
  s.n_list = {10, 20, 40, 80, 160};
  s.draws = 1000000;
  s.family_size = 64;
  s.seed = 12;
  s.include_small_n = true;
  s.tv = false;
  const auto r = run_experiment(s);
  double lo = INFINITY, hi = 0.0;
  std::string ratios;
  bool resolved = true;
  for (const auto& p : r.points) {
    const double ratio = p.d2->value / p.bound.M;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ratios += fmt("%s%.2e", ratios.empty() ? "" : ", ", ratio);
    resolved = resolved && p.d2->value > 3.0 * p.d2->standard_error;
    pl.add(p.d2->value);
    pl.add(p.d2->standard_error);
  }
  const double secs = seconds_since(t0);
  o.pass = hi / lo <= 4.0 && resolved && secs < 600;
  o.detail = fmt("d2/M = [%s], band %.2f (limit 4), all above 3 SE: %s; %.1f s", ratios.c_str(), hi / lo,
                 resolved ? "yes" : "no", secs);
  o.payload = pl.str();
  return o;
}

using Criterion = Outcome (*)();
const std::map<int, std::pair<const char*, Criterion>>& criteria() {
  static const std::map<int, std::pair<const char*, Criterion>> c{
      {1, {"cumulant engine", cumulant_engine}},
      {2, {"Gamma variance routes", variance_routes}},
      {3, {"variance chain inequalities", variance_chain}},
      {4, {"contraction constants", constants}},
      {5, {"Stein solver", stein_solver}},
      {6, {"functional equation", fredholm}},
      {7, {"integration-by-parts identities", identities}},
      {8, {"naive example rates", naive_rates}},
      {9, {"U-statistic", ustat}},
      {10, {"AR(2)", ar2}},
      {11, {"Holder quadratic form", holder}},
      {12, {"d2 / M sandwich", sandwich}},
  };
  return c;
}

constexpr int kMonteCarlo[] = {1, 7, 12};

// ---- 13 ---------------------------------------------------------------------
// Reruns the Monte Carlo criteria with a different thread count and compares
// digests of their exact outputs against the first run.
Outcome determinism(std::map<int, std::string>& first) {
  Outcome o;
  const int threads = omp_get_max_threads();
  std::string detail;
  for (int k : kMonteCarlo) {
    if (!first.count(k)) first[k] = criteria().at(k).second().payload;
    omp_set_num_threads(threads == 1 ? 3 : 1);
    const std::string again = criteria().at(k).second().payload;
    omp_set_num_threads(threads);
    const bool same = again == first[k] && !again.empty();
    o.pass = o.pass && same;
    detail += fmt("%s#%d %016llx %s", detail.empty() ? "" : ", ", k,
                  static_cast<unsigned long long>(fnv1a(first[k])), same ? "identical" : "DIFFERS");
  }
  o.detail = detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long k = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || k < 1 || k > 13) {
      std::fprintf(stderr, "usage: %s [criterion 1..13 ...]\n", argv[0]);
      return 2;
    }
    selected.push_back(static_cast<int>(k));
  }
  if (selected.empty()) {
    for (int k = 1; k <= 13; ++k) selected.push_back(k);
  }
  std::map<int, std::string> payloads;
  int failures = 0;
  for (int k : selected) {
    Outcome o;
    const char* name = "determinism";
    try {
      if (k == 13) {
        o = determinism(payloads);
      } else {
        name = criteria().at(k).first;
        o = criteria().at(k).second();
        if (!o.payload.empty()) payloads[k] = o.payload;
      }
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s: %s\n", k, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
