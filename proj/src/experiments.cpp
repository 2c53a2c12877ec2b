#include "wgl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "wgl/errors.hpp"

namespace wgl {

SpectralForm gen_naive(int n) {
  if (n < 2) throw DomainError("naive example requires n >= 2");
  const double e = 1.0 / n;
  return SpectralForm({std::sqrt(1.0 + e), std::sqrt(1.0 - e)});
}

KernelMatrix ustat_kernel(int n) {
  if (n < 2) throw DomainError("U-statistic example requires n >= 2");
  const auto m = static_cast<std::size_t>(n);
  const double a = 1.0 / std::sqrt(static_cast<double>(n) * (n - 1));
  std::vector<double> entries(m * m, a);
  for (std::size_t i = 0; i < m; ++i) entries[i * m + i] = 0.0;
  return KernelMatrix(m, std::move(entries));
}

SpectralForm gen_ustat(int n) {
  if (n < 2) throw DomainError("U-statistic example requires n >= 2");
  const double dn = n;
  std::vector<double> c(static_cast<std::size_t>(n), -1.0 / std::sqrt(dn * (dn - 1.0)));
  c[0] = std::sqrt((dn - 1.0) / dn);
  SpectralForm exact(std::move(c));
  if (n <= 200) {
    const auto kernel = spectral_from_kernel(ustat_kernel(n), 1e-300);
    const auto got = kernel.eigenvalues();
    const auto want = exact.eigenvalues();
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = std::fabs(got[i] - want[i]) <= 1e-10;
    if (!ok) {
      throw NumericalError("U-statistic kernel spectrum disagrees with the exact eigenvalues at n = " +
                           std::to_string(n));
    }
  }
  return exact;
}

KernelMatrix gen_ar1(int n, double beta) {
  if (n < 2) throw DomainError("AR(1) example requires n >= 2");
  if (!std::isfinite(beta)) throw ValidationError("AR(1) beta must be finite");
  const auto m = static_cast<std::size_t>(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * (n - 1));
  const double bn = 1.0 - beta / n;
  std::vector<double> entries(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = beta == 0.0 ? scale : scale * std::pow(bn, static_cast<double>(i - j));
      entries[i * m + j] = v;
      entries[j * m + i] = v;
    }
  }
  return KernelMatrix(m, std::move(entries));
}

double ar2_variance_closed_form(int n, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double dn = n;
  const double osc = std::cos(2.0 * theta * (dn - 1.0)) - 2.0 * c * std::cos(theta * (2.0 * dn - 1.0)) +
                     c * c * std::cos(2.0 * dn * theta);
  const double brace = osc / (8.0 * s * s * s * s) +
                       (dn * std::cos(2.0 * theta) + 1.0 - dn) / (8.0 * s * s) + dn * (dn - 1.0) / 4.0;
  return 16.0 / (dn * dn) * brace;
}

Ar2Instance gen_ar2(int n, double theta) {
  if (n < 3) throw DomainError("AR(2) example requires n >= 3");
  if (!(theta > 0.0 && theta < std::numbers::pi)) throw DomainError("AR(2) theta must lie in (0, pi)");
  const double s = std::sin(theta);
  if (std::fabs(s) < 1e-6) throw DomainError("AR(2) requires |sin(theta)| >= 1e-6");
  const double c = std::cos(theta);
  const auto m = static_cast<std::size_t>(n);
  std::vector<double> b(m);
  for (std::size_t k = 1; k < m; ++k) {
    const double dk = static_cast<double>(k);
    b[k] = (c * std::sin(dk * theta) - std::sin((dk - 1.0) * theta)) / s;
  }
  std::vector<double> entries(m * m, 0.0);
  CompensatedSum sq;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 2.0 / n * b[i - j];
      entries[i * m + j] = v;
      entries[j * m + i] = v;
      sq.add(2.0 * v * v);
    }
  }
  Ar2Instance out{KernelMatrix(m, std::move(entries)), ar2_variance_closed_form(n, theta),
                  2.0 * sq.value()};
  if (n <= 200 && std::fabs(out.variance - out.variance_brute) > 1e-9 * out.variance_brute) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "AR(2) closed-form variance " << out.variance
        << " disagrees with the direct sum " << out.variance_brute << " at n = " << n;
    throw NumericalError(msg.str());
  }
  out.matrix = out.matrix.scaled(std::sqrt(4.0 / out.variance_brute));
  return out;
}

namespace {
constexpr int kHolderPoints = 10000;

double holder_seed(int k, double alpha, double x) {
  return std::pow(std::fabs(std::sin(2.0 * std::numbers::pi * (k + 1) * x)), alpha);
}
}  // namespace

HolderBasisFunctions::HolderBasisFunctions(int nu, double alpha, HolderBasis basis)
    : nu_(nu), alpha_(alpha), basis_(basis) {
  if (nu < 1) throw DomainError("basis size must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Holder exponent must lie in (0, 1]");
  if (basis == HolderBasis::trig && alpha != 1.0) {
    throw ValidationError("the trigonometric basis is only used with alpha = 1");
  }
  std::vector<std::vector<double>> values(static_cast<std::size_t>(nu),
                                          std::vector<double>(kHolderPoints));
  auto inner = [](const std::vector<double>& a, const std::vector<double>& b) {
    CompensatedSum s;
    for (int i = 0; i < kHolderPoints; ++i) s.add(a[i] * b[i]);
    return s.value() / kHolderPoints;
  };
  for (int m = 0; m < nu; ++m) {
    for (int i = 0; i < kHolderPoints; ++i) {
      values[m][i] = (*this)(m, (i + 0.5) / kHolderPoints);
    }
  }
  if (basis == HolderBasis::holder) {
    // values currently hold raw seeds; orthonormalize while tracking coefficients.
    coeff_.assign(static_cast<std::size_t>(nu), std::vector<double>(static_cast<std::size_t>(nu), 0.0));
    for (int m = 0; m < nu; ++m) {
      coeff_[m][m] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < m; ++k) {
          const double p = inner(values[m], values[k]);
          for (int i = 0; i < kHolderPoints; ++i) values[m][i] -= p * values[k][i];
          for (int j = 0; j <= k; ++j) coeff_[m][j] -= p * coeff_[k][j];
        }
      }
      const double norm = std::sqrt(inner(values[m], values[m]));
      if (!(norm > 1e-8)) {
        throw ValidationError("Gram-Schmidt on the Holder seeds is rank deficient at m = " +
                              std::to_string(m + 1));
      }
      for (double& v : values[m]) v /= norm;
      for (double& v : coeff_[m]) v /= norm;
    }
    for (int m = 0; m < nu; ++m) {
      for (int i = 0; i < kHolderPoints; ++i) values[m][i] = (*this)(m, (i + 0.5) / kHolderPoints);
    }
  }
  for (int a = 0; a < nu; ++a) {
    for (int b = 0; b <= a; ++b) {
      defect_ = std::max(defect_, std::fabs(inner(values[a], values[b]) - (a == b ? 1.0 : 0.0)));
    }
  }
  if (basis == HolderBasis::holder && defect_ > 1e-8) {
    throw NumericalError("Holder basis fails orthonormality to 1e-8");
  }
}

double HolderBasisFunctions::operator()(int m, double x) const {
  if (basis_ == HolderBasis::trig) return std::numbers::sqrt2 * std::cos((m + 1) * std::numbers::pi * x);
  if (coeff_.empty()) return holder_seed(m, alpha_, x);
  double v = 0.0;
  for (int k = 0; k <= m; ++k) v += coeff_[m][k] * holder_seed(k, alpha_, x);
  return v;
}

namespace {

void check_holder_args(int n, int nu) {
  if (nu < 1) throw DomainError("basis size must be >= 1");
  if (n <= nu) throw DomainError("quadratic form needs n > nu (degenerate size)");
}

// E(i, m) = e_m((i+1)/n).
std::vector<double> holder_design(int n, const HolderBasisFunctions& e) {
  const int nu = e.size();
  std::vector<double> design(static_cast<std::size_t>(n) * nu);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < nu; ++m) design[static_cast<std::size_t>(i) * nu + m] = e(m, (i + 1.0) / n);
  }
  return design;
}

}  // namespace

KernelMatrix gen_holder_qf(int n, int nu, double alpha, HolderBasis basis) {
  check_holder_args(n, nu);
  const HolderBasisFunctions e(nu, alpha, basis);
  const auto design = holder_design(n, e);
  const auto m = static_cast<std::size_t>(n);
  std::vector<double> d(m * m, 0.0);
  CompensatedSum sq;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      for (int k = 0; k < nu; ++k) v += design[i * nu + k] * design[j * nu + k];
      d[i * m + j] = v / n;
      sq.add(d[i * m + j] * d[i * m + j]);
    }
  }
  return KernelMatrix(m, std::move(d)).scaled(std::sqrt(nu / sq.value()));
}

SpectralForm holder_qf_spectrum(int n, int nu, double alpha, HolderBasis basis) {
  check_holder_args(n, nu);
  const HolderBasisFunctions e(nu, alpha, basis);
  const auto design = holder_design(n, e);
  // The nonzero spectrum of (1/n) E E^T is that of the nu x nu Gram matrix (1/n) E^T E.
  const auto k = static_cast<std::size_t>(nu);
  std::vector<double> gram(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      CompensatedSum s;
      for (int i = 0; i < n; ++i) s.add(design[i * k + a] * design[i * k + b]);
      gram[a * k + b] = s.value() / n;
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < a; ++b) gram[a * k + b] = gram[b * k + a];
  }
  const auto form = spectral_from_kernel(KernelMatrix(k, std::move(gram)), 1e-300, Execution::serial);
  return form.scaled(std::sqrt(nu / form.power_sum(2)));
}

ExperimentName parse_experiment_name(const std::string& s) {
  if (s == "naive") return ExperimentName::naive;
  if (s == "ustat") return ExperimentName::ustat;
  if (s == "ar1") return ExperimentName::ar1;
  if (s == "ar2") return ExperimentName::ar2;
  if (s == "holder_qf") return ExperimentName::holder_qf;
  throw ValidationError("unknown experiment '" + s + "' (naive, ustat, ar1, ar2, holder_qf)");
}

std::string to_string(ExperimentName name) {
  switch (name) {
    case ExperimentName::naive: return "naive";
    case ExperimentName::ustat: return "ustat";
    case ExperimentName::ar1: return "ar1";
    case ExperimentName::ar2: return "ar2";
    case ExperimentName::holder_qf: return "holder_qf";
  }
  return "?";
}

namespace {

double param(const ExperimentSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (n_list.empty()) throw ValidationError("experiment needs at least one n");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 2) throw ValidationError("every n must be >= 2");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw ValidationError("n list must be strictly increasing");
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu must be positive");
  if (name == ExperimentName::ar1 && param(*this, "beta", 0.0) != 0.0) {
    throw ValidationError("ar1 with beta != 0 has a non-Gamma limit; only beta = 0 runs");
  }
  if (name == ExperimentName::holder_qf) {
    const double size = param(*this, "basis_size", nu);
    if (size != std::round(size) || size != nu) {
      throw ValidationError("holder_qf needs an integer basis size equal to nu");
    }
  }
  if (draws > 0 && draws < 100000) throw ValidationError("Monte Carlo d2 needs draws >= 1e5 (or 0)");
  if (family_size < 8) throw ValidationError("family size must be >= 8");
}

SpectralForm experiment_form(const ExperimentSpec& spec, int n) {
  switch (spec.name) {
    case ExperimentName::naive: return gen_naive(n);
    case ExperimentName::ustat: return gen_ustat(n);
    case ExperimentName::ar1: return spectral_from_kernel(gen_ar1(n, param(spec, "beta", 0.0)));
    case ExperimentName::ar2:
      return spectral_from_kernel(gen_ar2(n, param(spec, "theta", 1.0)).matrix);
    case ExperimentName::holder_qf: {
      const auto basis = param(spec, "holder_basis", 0.0) != 0.0 ? HolderBasis::holder : HolderBasis::trig;
      return holder_qf_spectrum(n, static_cast<int>(spec.nu), param(spec, "alpha", 1.0), basis);
    }
  }
  throw ValidationError("unknown experiment");
}

namespace {

RatePoint run_point(const ExperimentSpec& spec, int n, const GammaTarget& target,
                    const std::optional<TestFamily>& family) {
  RatePoint pt;
  pt.n = n;
  auto form = experiment_form(spec, n);
  pt.rescale = std::sqrt(spec.nu / form.power_sum(2));
  form = form.scaled(pt.rescale);
  pt.rank = form.size();
  pt.bound = malliavin_stein_upper(form, target);
  if (family) {
    const auto method = spec.d2_method.value_or(DistanceMethod::mc);
    // Nested inside the per-n loop: the inner reductions run on this thread.
    pt.d2 = d2_lower_estimate(form, target, *family, spec.draws, spec.seed, method, Execution::serial);
    pt.bound.empirical_d2 = pt.d2->value;
    pt.bound.empirical_d2_se = pt.d2->standard_error;
  }
  const auto c = form.eigenvalues();
  if (spec.tv && spec.nu == 2.0 && c.size() == 2 && c[0] > 0.0 && c[1] > 0.0) {
    pt.bound.tv_estimate = tv_distance_two_eig(c[0], c[1], target);
  }
  return pt;
}

void add_fit(RateReport& report, const std::string& key, std::size_t skip,
             const std::function<std::optional<double>(const RatePoint&)>& value,
             const std::function<double(const RatePoint&)>& floor) {
  std::vector<double> xs, ys;
  std::vector<int> used;
  for (std::size_t i = skip; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    const auto v = value(p);
    if (!v || !(*v > 10.0 * floor(p))) continue;
    xs.push_back(p.n);
    ys.push_back(*v);
    used.push_back(p.n);
  }
  if (xs.size() < 2) return;
  report.slopes[key] = RateFit{numeric::fit_loglog(xs, ys), used};
}

}  // namespace

RateReport run_experiment(const ExperimentSpec& spec, Execution exec) {
  spec.validate();
  const GammaTarget target(spec.nu);
  std::optional<TestFamily> family;
  const bool want_d2 = spec.draws > 0 || spec.d2_method == DistanceMethod::quadrature;
  if (want_d2) family = build_test_family(GridSpec::centered_gamma_default(spec.nu), spec.family_size);

  RateReport report;
  report.spec = spec;
  const auto count = static_cast<std::int64_t>(spec.n_list.size());
  report.points.resize(spec.n_list.size());
  std::vector<std::exception_ptr> errors(spec.n_list.size());
  auto body = [&](std::int64_t i) {
    try {
      report.points[i] = run_point(spec, spec.n_list[i], target, family);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < count; ++i) body(i);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "[" + to_string(spec.name) + ", n = " + std::to_string(spec.n_list[i]) + "] ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const DomainError& e) {
      throw DomainError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(where + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }

  const std::size_t skip = spec.include_small_n || report.points.size() < 4 ? 0 : 2;
  const double analytic_floor = 1e-13 * 48.0 * spec.nu;
  auto none = [&](const RatePoint&) { return analytic_floor; };
  add_fit(report, "M", skip, [](const RatePoint& p) { return std::optional(p.bound.M); }, none);
  add_fit(report, "sqrtM", skip, [](const RatePoint& p) { return std::optional(p.bound.sqrtM); }, none);
  add_fit(report, "kappa3_diff", skip, [](const RatePoint& p) { return std::optional(p.bound.term_kappa3); }, none);
  add_fit(report, "kappa4_diff", skip, [](const RatePoint& p) { return std::optional(p.bound.term_kappa4); }, none);
  add_fit(report, "d2_upper_shape", skip,
          [](const RatePoint& p) { return std::optional(p.bound.d2_upper_shape); }, none);
  add_fit(report, "d2_upper_unsplit", skip,
          [](const RatePoint& p) { return std::optional(p.bound.d2_upper_unsplit); }, none);
  add_fit(report, "term_unsplit", skip,
          [](const RatePoint& p) { return std::optional(p.bound.term_unsplit); }, none);
  add_fit(report, "tv", skip, [](const RatePoint& p) { return p.bound.tv_estimate; }, none);
  add_fit(report, "d2_empirical", skip, [](const RatePoint& p) { return p.bound.empirical_d2; },
          [](const RatePoint& p) { return p.d2 ? p.d2->noise_floor : 0.0; });
  return report;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(17) << *v;
  return s.str();
}

}  // namespace

void write_rate_csv(const RateReport& report, std::ostream& out) {
  out << "n,kappa3_diff,kappa4_diff,M,d2_upper_shape,d2_empirical,tv\n";
  out << std::setprecision(17);
  for (const auto& p : report.points) {
    out << p.n << ',' << p.bound.term_kappa3 << ',' << p.bound.term_kappa4 << ',' << p.bound.M << ','
        << p.bound.d2_upper_shape << ',' << opt_str(p.bound.empirical_d2) << ','
        << opt_str(p.bound.tv_estimate) << '\n';
  }
}

void write_rate_gnuplot(const RateReport& report, std::ostream& out) {
  out << "# n kappa3_diff kappa4_diff M d2_upper_shape d2_empirical tv\n";
  out << std::setprecision(17);
  for (const auto& p : report.points) {
    auto na = [](const std::optional<double>& v) { return v ? opt_str(v) : std::string("NaN"); };
    out << p.n << ' ' << p.bound.term_kappa3 << ' ' << p.bound.term_kappa4 << ' ' << p.bound.M << ' '
        << p.bound.d2_upper_shape << ' ' << na(p.bound.empirical_d2) << ' ' << na(p.bound.tv_estimate)
        << '\n';
  }
}

}  // namespace wgl
