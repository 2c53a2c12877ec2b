#include "wgl/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wgl/errors.hpp"
#include "wgl/io.hpp"

namespace wgl::cli {

namespace {

using io::json;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ValidationError("cannot parse number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_list(s)) {
    if (v != std::round(v)) throw ValidationError("expected integers in '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// key=value tokens, e.g. from "--param alpha=0.5,holder_basis=1".
std::map<std::string, double> parse_params(const std::vector<std::string>& tokens) {
  std::map<std::string, double> out;
  for (const auto& tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--param expects key=value, got '" + tok + "'");
    const auto v = parse_list(tok.substr(eq + 1));
    if (v.size() != 1) throw ValidationError("--param " + tok.substr(0, eq) + " needs one number");
    out[tok.substr(0, eq)] = v[0];
  }
  return out;
}

// h spec: identity | sin:omega | ramp:a,b | path to a grid-function JSON file.
GridFunction parse_h(const std::string& spec, const GridSpec& grid) {
  if (spec == "identity") return GridFunction::sample(grid, [](double x) { return x; });
  if (spec.rfind("sin:", 0) == 0) {
    const auto w = parse_list(spec.substr(4));
    if (w.size() != 1) throw ValidationError("sin:<omega> takes one number");
    const double omega = w[0];
    return GridFunction::sample(grid, [omega](double x) { return std::sin(omega * x); });
  }
  if (spec.rfind("ramp:", 0) == 0) {
    const auto ab = parse_list(spec.substr(5));
    if (ab.size() != 2 || !(ab[0] < ab[1])) throw ValidationError("ramp:<a>,<b> needs a < b");
    const double a = ab[0], b = ab[1];
    return GridFunction::sample(grid, [a, b](double x) { return std::clamp(x, a, b); });
  }
  const auto f = io::grid_function_from_json(io::read_json_file(spec));
  if (!(f.grid() == grid)) return GridFunction::sample(grid, [&f](double x) { return f(x); });
  return f;
}

struct Common {
  std::string out_path;
  bool no_timestamp = false;
  int threads = 0;
  std::string format = "json";
};

// Records every option given to a subcommand, in declaration order.
json config_of(const CLI::App* app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    const auto res = opt->results();
    if (opt->get_type_size() == 0) {
      cfg[name] = true;
    } else if (res.size() == 1) {
      cfg[name] = res.front();
    } else {
      cfg[name] = res;
    }
  }
  return cfg;
}

// Expands --config file.json into --key value tokens for keys not already given.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--config") continue;
    if (i + 1 >= args.size()) throw ValidationError("--config needs a file");
    const auto cfg = io::read_json_file(args[i + 1]);
    if (!cfg.is_object()) throw ValidationError("--config file must hold a JSON object");
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    for (const auto& [key, value] : cfg.items()) {
      const std::string flag = "--" + key;
      if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
      if (value.is_boolean()) {
        if (value.get<bool>()) args.push_back(flag);
        continue;
      }
      args.push_back(flag);
      auto scalar = [](const json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
      };
      if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
        args.push_back(joined);
      } else {
        args.push_back(scalar(value));
      }
    }
    break;
  }
  return args;
}

std::string timestamp_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void emit(const Common& common, const CLI::App* sub, const std::string& command,
          std::optional<std::uint64_t> seed, json result, const std::string& plain,
          std::ostream& out) {
  std::string text;
  if (common.format == "plain" && !plain.empty()) {
    text = plain + "\n";
  } else {
    json doc;
    doc["tool"] = "wgl";
    doc["version"] = WGL_VERSION;
    doc["command"] = command;
    doc["config"] = config_of(sub);
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    if (!common.no_timestamp) doc["timestamp"] = timestamp_now();
    doc["result"] = std::move(result);
    text = doc.dump(2) + "\n";
  }
  if (common.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(common.out_path);
    if (!f) throw ValidationError("cannot open " + common.out_path + " for writing");
    f << text;
  }
}

std::string plain_number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

struct FormArgs {
  std::string eigenvalues;
  std::string kernel;
  std::string form_file;
  std::string spec_file;
  std::string example;
  int n = 0;
  std::vector<std::string> params;
  bool normalize = false;
};

void add_form_options(CLI::App* sub, FormArgs& f) {
  sub->add_option("--eigenvalues", f.eigenvalues, "Comma-separated eigenvalues c_i");
  sub->add_option("--kernel", f.kernel, "Kernel matrix JSON file {n, entries}");
  sub->add_option("--form", f.form_file, "Spectral form JSON file {eigenvalues}");
  sub->add_option("--spec", f.spec_file, "JSON file holding either a spectral form or a kernel matrix");
  sub->add_option("--example", f.example, "naive | ustat | ar1 | ar2 | holder_qf");
  sub->add_option("--n", f.n, "Example size n");
  sub->add_option("--param", f.params, "Example parameter key=value (beta, theta, alpha, holder_basis)")
      ->delimiter(',');
  sub->add_flag("--normalize", f.normalize, "Rescale eigenvalues so that E F^2 = 2 nu");
}

SpectralForm build_form(const FormArgs& f, double nu) {
  const int sources = !f.eigenvalues.empty() + !f.kernel.empty() + !f.form_file.empty() +
                      !f.spec_file.empty() + !f.example.empty();
  if (sources != 1) {
    throw ValidationError("give exactly one of --eigenvalues, --kernel, --form, --spec, --example");
  }
  std::optional<SpectralForm> form;
  bool normalize = f.normalize;
  if (!f.eigenvalues.empty()) form.emplace(parse_list(f.eigenvalues));
  if (!f.kernel.empty()) {
    form.emplace(spectral_from_kernel(io::kernel_matrix_from_json(io::read_json_file(f.kernel))));
  }
  if (!f.form_file.empty()) form.emplace(io::spectral_form_from_json(io::read_json_file(f.form_file)));
  if (!f.spec_file.empty()) {
    const auto j = io::read_json_file(f.spec_file);
    if (j.is_object() && j.contains("entries")) {
      form.emplace(spectral_from_kernel(io::kernel_matrix_from_json(j)));
    } else {
      form.emplace(io::spectral_form_from_json(j));
    }
  }
  if (!f.example.empty()) {
    if (f.n < 2) throw ValidationError("--example needs --n >= 2");
    ExperimentSpec spec;
    spec.name = parse_experiment_name(f.example);
    spec.nu = nu;
    spec.params = parse_params(f.params);
    form.emplace(experiment_form(spec, f.n));
    normalize = true;  // examples always run at variance 2 nu
  }
  if (normalize) return form->scaled(std::sqrt(nu / form->power_sum(2)));
  return *form;
}

DistanceMethod parse_method(const std::string& s) {
  if (s == "mc") return DistanceMethod::mc;
  if (s == "quadrature") return DistanceMethod::quadrature;
  throw ValidationError("unknown distance method '" + s + "' (mc, quadrature)");
}

GridSpec parse_grid(const std::string& s, double nu) {
  if (s.empty()) return GridSpec::centered_gamma_default(nu);
  const auto v = parse_list(s);
  if (v.size() != 3 || v[2] != std::round(v[2]) || v[2] < 0) {
    throw ValidationError("--grid takes lo,hi,n_points");
  }
  return GridSpec(v[0], v[1], static_cast<std::size_t>(v[2]));
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Common common;
  CLI::App app{"Gamma approximation on the second Wiener chaos", "wgl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WGL_VERSION));
  app.add_option("--out", common.out_path, "Write results to this file instead of stdout");
  app.add_flag("--no-timestamp", common.no_timestamp, "Omit the timestamp from JSON output");
  app.add_option("--threads", common.threads, "Worker threads (default: WGL_THREADS or runtime)");
  app.add_option("--format", common.format, "json | plain")->check(CLI::IsMember({"json", "plain"}));
  std::string config_path;  // consumed by expand_config; declared for --help
  app.add_option("--config", config_path, "JSON file of option defaults");
  app.fallthrough();

  // cumulants
  auto* cum = app.add_subcommand("cumulants", "Exact (and optionally sampled) cumulants");
  FormArgs cum_form;
  double cum_nu = 1.0;
  int cum_p = 0;
  int cum_pmax = 4;
  std::size_t cum_draws = 0;
  std::uint64_t cum_seed = 1;
  std::string cum_save;
  add_form_options(cum, cum_form);
  cum->add_option("--nu", cum_nu, "Target nu (for the G(nu) comparison)");
  cum->add_option("--p", cum_p, "Print only cumulant p");
  cum->add_option("--p-max", cum_pmax, "Highest order listed (2..8)");
  cum->add_option("--draws", cum_draws, "Also estimate sample cumulants from this many draws");
  cum->add_option("--seed", cum_seed, "Sampling seed");
  cum->add_option("--save-samples", cum_save, "Write the draws as a binary sample batch");

  // bound report
  auto* bound = app.add_subcommand("bound", "Cumulant distance and Malliavin-Stein upper bound");
  auto* bound_report = bound->add_subcommand("report", "Full bound report");
  bound->require_subcommand(1);
  FormArgs bound_form;
  double bound_nu = 1.0;
  std::size_t bound_draws = 0;
  std::uint64_t bound_seed = 1;
  std::size_t bound_family = 64;
  std::string bound_method = "mc";
  add_form_options(bound_report, bound_form);
  bound_report->add_option("--nu", bound_nu, "Target nu");
  bound_report->add_option("--draws", bound_draws, "Monte Carlo draws for the empirical d2 (0: none)");
  bound_report->add_option("--seed", bound_seed, "Sampling seed");
  bound_report->add_option("--family-size", bound_family, "Test-family size");
  bound_report->add_option("--method", bound_method, "mc | quadrature");

  // stein solve
  auto* stein = app.add_subcommand("stein", "Stein equation solver");
  auto* stein_solve = stein->add_subcommand("solve", "Solve the Stein equation (or (I + lambda S) g = h)");
  stein->require_subcommand(1);
  double stein_nu = 1.0;
  std::string stein_h = "identity";
  std::string stein_grid;
  std::optional<double> stein_lambda;
  stein_solve->set_help_flag("--help", "Print this help message and exit");
  stein_solve->add_option("--nu", stein_nu, "Target nu");
  stein_solve->add_option("--h", stein_h, "identity | sin:<omega> | ramp:<a>,<b> | <grid-function.json>");
  stein_solve->add_option("--grid", stein_grid, "lo,hi,n_points (default covers G(nu))");
  stein_solve->add_option("--lambda", stein_lambda, "Solve (I + lambda S) g = h instead");

  // distance
  auto* dist = app.add_subcommand("distance", "Distance estimates to G(nu)");
  dist->require_subcommand(1);
  auto* dist_d2 = dist->add_subcommand("d2", "Lower estimate of d2 over a smooth test family");
  FormArgs d2_form;
  double d2_nu = 1.0;
  std::size_t d2_draws = 1000000;
  std::uint64_t d2_seed = 1;
  std::size_t d2_family = 64;
  std::string d2_method = "mc";
  add_form_options(dist_d2, d2_form);
  dist_d2->add_option("--nu", d2_nu, "Target nu");
  dist_d2->add_option("--draws", d2_draws, "Monte Carlo draws");
  dist_d2->add_option("--seed", d2_seed, "Sampling seed");
  dist_d2->add_option("--family-size", d2_family, "Test-family size");
  dist_d2->add_option("--method", d2_method, "mc | quadrature");
  auto* dist_tv = dist->add_subcommand("tv", "Total variation for two positive eigenvalues vs G(2)");
  std::string tv_eigs;
  dist_tv->add_option("--eigenvalues", tv_eigs, "c1,c2")->required();

  // experiment run
  auto* exp = app.add_subcommand("experiment", "Rate experiments across n");
  exp->require_subcommand(1);
  auto* exp_run = exp->add_subcommand("run", "Run one example sequence");
  std::string exp_name;
  std::string exp_n;
  ExperimentSpec exp_spec;
  std::string exp_method;
  std::string exp_csv;
  std::string exp_gnuplot;
  exp_run->add_option("--name", exp_name, "naive | ustat | ar1 | ar2 | holder_qf")->required();
  exp_run->add_option("--n", exp_n, "Comma-separated, strictly increasing sizes")->required();
  exp_run->add_option("--nu", exp_spec.nu, "Target nu");
  std::vector<std::string> exp_params;
  exp_run->add_option("--param", exp_params, "key=value (beta, theta, alpha, basis_size, holder_basis)")
      ->delimiter(',');
  exp_run->add_option("--draws", exp_spec.draws, "Monte Carlo draws per n for d2 (0: none)");
  exp_run->add_option("--seed", exp_spec.seed, "Sampling seed");
  exp_run->add_option("--family-size", exp_spec.family_size, "Test-family size");
  exp_run->add_option("--method", exp_method, "mc | quadrature");
  exp_run->add_flag("--include-small-n", exp_spec.include_small_n, "Keep the two smallest n in fits");
  exp_run->add_option("--csv", exp_csv, "Also write the per-n table as CSV");
  exp_run->add_option("--gnuplot", exp_gnuplot, "Also write gnuplot-ready columns");

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? 0 : 1;
  }

  try {
    int threads = common.threads;
    if (threads == 0) {
      if (const char* env = std::getenv("WGL_THREADS")) threads = std::atoi(env);
    }
    set_thread_count(threads);

    if (cum->parsed()) {
      const auto form = build_form(cum_form, cum_nu);
      const GammaTarget target(cum_nu);
      if (cum_p != 0) {
        if (cum_p < 2) throw DomainError("cumulant order p must be >= 2");
        const double v = cumulant_spectral(form, cum_p);
        emit(common, cum, "cumulants", std::nullopt,
             json{{"p", cum_p}, {"value", v}, {"target", cumulant_target(target, cum_p)}},
             plain_number(v), out);
        return 0;
      }
      if (cum_pmax < 2 || cum_pmax > 8) throw DomainError("--p-max must lie in 2..8");
      json rows = json::array();
      std::string plain;
      for (int p = 2; p <= cum_pmax; ++p) {
        const double v = cumulant_spectral(form, p);
        rows.push_back(json{{"p", p}, {"value", v}, {"target", cumulant_target(target, p)}});
        plain += (plain.empty() ? "" : " ") + plain_number(v);
      }
      json result{{"form", io::to_json(form)}, {"cumulants", rows}};
      std::optional<std::uint64_t> seed;
      if (cum_draws > 0) {
        seed = cum_seed;
        const auto batch = sample(form, cum_draws, cum_seed);
        result["sample_cumulants"] = io::to_json(estimate_cumulants(batch.draws, cum_pmax));
        if (!cum_save.empty()) io::write_sample_batch(batch, std::filesystem::path(cum_save));
      }
      emit(common, cum, "cumulants", seed, result, plain, out);
      return 0;
    }

    if (bound_report->parsed()) {
      const auto form = build_form(bound_form, bound_nu);
      const GammaTarget target(bound_nu);
      auto report = malliavin_stein_upper(form, target);
      std::optional<std::uint64_t> seed;
      json extra = json::object();
      const auto method = parse_method(bound_method);
      if (bound_draws > 0 || method == DistanceMethod::quadrature) {
        const auto family = build_test_family(GridSpec::centered_gamma_default(bound_nu), bound_family);
        if (method == DistanceMethod::mc) seed = bound_seed;
        const auto d2 = d2_lower_estimate(form, target, family, bound_draws, bound_seed, method);
        report.empirical_d2 = d2.value;
        report.empirical_d2_se = d2.standard_error;
        extra = io::to_json(d2, &family);
      }
      const auto c = form.eigenvalues();
      if (bound_nu == 2.0 && c.size() == 2 && c[0] > 0.0 && c[1] > 0.0) {
        report.tv_estimate = tv_distance_two_eig(c[0], c[1], target);
      }
      json result = io::to_json(report);
      if (!extra.empty()) result["d2_detail"] = extra;
      emit(common, bound_report, "bound report", seed, result, plain_number(report.M), out);
      return 0;
    }

    if (stein_solve->parsed()) {
      // Plain output: one "value" per grid node.
      auto columns = [](const GridFunction& f) {
        std::string text;
        for (double v : f.values()) text += (text.empty() ? "" : "\n") + plain_number(v);
        return text;
      };
      const GammaTarget target(stein_nu);
      const auto grid = parse_grid(stein_grid, stein_nu);
      const auto h = parse_h(stein_h, grid);
      if (stein_lambda) {
        const FredholmSolver solver(grid, target, *stein_lambda);
        const auto g = solver.solve(h);
        json result{{"nu", stein_nu},
                    {"lambda", *stein_lambda},
                    {"condition_estimate", solver.condition_estimate()},
                    {"residual", solver.residual(g, h)},
                    {"solution", io::to_json(g)}};
        emit(common, stein_solve, "stein solve", std::nullopt, result, columns(g), out);
        return 0;
      }
      const auto sol = solve_stein(h, target);
      emit(common, stein_solve, "stein solve", std::nullopt, io::to_json(sol), columns(sol.solution), out);
      return 0;
    }

    if (dist_d2->parsed()) {
      const auto form = build_form(d2_form, d2_nu);
      const GammaTarget target(d2_nu);
      const auto method = parse_method(d2_method);
      const auto family = build_test_family(GridSpec::centered_gamma_default(d2_nu), d2_family);
      const auto est = d2_lower_estimate(form, target, family, d2_draws, d2_seed, method);
      emit(common, dist_d2, "distance d2",
           method == DistanceMethod::mc ? std::optional<std::uint64_t>(d2_seed) : std::nullopt,
           io::to_json(est, &family), plain_number(est.value), out);
      return 0;
    }

    if (dist_tv->parsed()) {
      const auto c = parse_list(tv_eigs);
      if (c.size() != 2) throw ValidationError("--eigenvalues takes exactly two values");
      const double tv = tv_distance_two_eig(c[0], c[1], GammaTarget(2.0));
      emit(common, dist_tv, "distance tv", std::nullopt, json{{"tv", tv}}, plain_number(tv), out);
      return 0;
    }

    if (exp_run->parsed()) {
      exp_spec.name = parse_experiment_name(exp_name);
      exp_spec.n_list = parse_int_list(exp_n);
      exp_spec.params = parse_params(exp_params);
      if (!exp_method.empty()) exp_spec.d2_method = parse_method(exp_method);
      const auto report = run_experiment(exp_spec);
      if (!exp_csv.empty()) {
        std::ofstream f(exp_csv);
        if (!f) throw ValidationError("cannot open " + exp_csv);
        write_rate_csv(report, f);
      }
      if (!exp_gnuplot.empty()) {
        std::ofstream f(exp_gnuplot);
        if (!f) throw ValidationError("cannot open " + exp_gnuplot);
        write_rate_gnuplot(report, f);
      }
      std::ostringstream table;
      write_rate_csv(report, table);
      std::string plain = table.str();
      if (!plain.empty() && plain.back() == '\n') plain.pop_back();
      emit(common, exp_run, "experiment run",
           exp_spec.draws > 0 ? std::optional<std::uint64_t>(exp_spec.seed) : std::nullopt,
           io::to_json(report), plain, out);
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace wgl::cli
