#include "wgl/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "wgl/errors.hpp"

namespace wgl::io {

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("JSON input is missing '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("JSON field '") + key + "': " + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const SpectralForm& form) {
  json j;
  j["eigenvalues"] = std::vector<double>(form.eigenvalues().begin(), form.eigenvalues().end());
  if (form.discarded_mass() != 0.0) j["discarded_mass"] = form.discarded_mass();
  return j;
}

SpectralForm spectral_form_from_json(const json& j) {
  const double dropped = j.is_object() && j.contains("discarded_mass") ? field<double>(j, "discarded_mass") : 0.0;
  return SpectralForm(field<std::vector<double>>(j, "eigenvalues"), dropped);
}

json to_json(const KernelMatrix& matrix) {
  json rows = json::array();
  for (std::size_t i = 0; i < matrix.n(); ++i) {
    std::vector<double> row(matrix.n());
    for (std::size_t k = 0; k < matrix.n(); ++k) row[k] = matrix(i, k);
    rows.push_back(row);
  }
  return json{{"n", matrix.n()}, {"entries", rows}};
}

KernelMatrix kernel_matrix_from_json(const json& j) {
  const auto n = field<std::size_t>(j, "n");
  const auto rows = field<std::vector<std::vector<double>>>(j, "entries");
  if (rows.size() != n) throw ValidationError("kernel matrix: row count does not match n");
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw ValidationError("kernel matrix: row length does not match n");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return KernelMatrix(n, std::move(flat));
}

json to_json(const GridSpec& grid) {
  return json{{"lo", grid.lo}, {"hi", grid.hi}, {"n_points", grid.n_points}};
}

GridSpec grid_from_json(const json& j) {
  return GridSpec(field<double>(j, "lo"), field<double>(j, "hi"), field<std::size_t>(j, "n_points"));
}

json to_json(const GridFunction& f) {
  return json{{"lo", f.grid().lo},
              {"hi", f.grid().hi},
              {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridFunction grid_function_from_json(const json& j) {
  auto values = field<std::vector<double>>(j, "values");
  const GridSpec grid(field<double>(j, "lo"), field<double>(j, "hi"), values.size());
  return GridFunction(grid, std::move(values));
}

json to_json(const GammaVarianceTable& table) {
  // Index 0 is unused.
  auto from_one = [](const std::vector<double>& v) {
    return v.size() > 1 ? std::vector<double>(v.begin() + 1, v.end()) : std::vector<double>{};
  };
  json j;
  j["r_max"] = table.r_max;
  j["var_diff"] = from_one(table.var_diff);
  j["var_diff_cumulant"] = from_one(table.var_diff_cumulant);
  j["var_combined"] = table.var_combined;
  return j;
}

json to_json(const BoundReport& r) {
  json j;
  j["nu"] = r.nu;
  j["kappa2"] = r.kappa2;
  j["kappa3"] = r.kappa3;
  j["kappa4"] = r.kappa4;
  j["M"] = r.M;
  j["sqrtM"] = r.sqrtM;
  j["term_var1"] = r.term_var1;
  j["term_cross"] = r.term_cross;
  j["term_combined"] = r.term_combined;
  j["term_kappa3"] = r.term_kappa3;
  j["term_kappa4"] = r.term_kappa4;
  j["d2_upper_shape"] = r.d2_upper_shape;
  j["term_unsplit"] = r.term_unsplit;
  j["d2_upper_unsplit"] = r.d2_upper_unsplit;
  j["discarded_mass"] = r.discarded_mass;
  j["variances"] = to_json(r.variances);
  j["empirical_d2"] = optional_number(r.empirical_d2);
  j["empirical_d2_se"] = optional_number(r.empirical_d2_se);
  j["tv_estimate"] = optional_number(r.tv_estimate);
  return j;
}

json to_json(const IdentityCheck& c) {
  return json{{"part", c.part == IdentityPart::a ? "a" : "b"},
              {"lhs", c.lhs},
              {"rhs", c.rhs},
              {"lhs_se", c.lhs_se},
              {"rhs_se", c.rhs_se},
              {"combined_se", c.combined_se},
              {"draws", c.draws},
              {"pass", c.pass}};
}

json to_json(const CumulantEstimate& e) {
  json j = json::array();
  for (std::size_t p = 2; p < e.value.size(); ++p) {
    j.push_back(json{{"p", p}, {"value", e.value[p]}, {"standard_error", e.standard_error[p]}});
  }
  return j;
}

json to_json(const DistanceEstimate& e, const TestFamily* family) {
  json j;
  j["value"] = e.value;
  j["standard_error"] = e.standard_error;
  j["method"] = e.method == DistanceMethod::mc ? "mc" : "quadrature";
  j["family_size"] = e.family_size;
  j["argmax"] = e.argmax;
  if (family && e.argmax < family->members.size()) j["argmax_member"] = family->members[e.argmax].describe();
  j["noise_floor"] = e.noise_floor;
  j["plain_noise_floor"] = e.plain_noise_floor;
  j["coupled"] = e.coupled;
  j["member_differences"] = e.member_differences;
  j["member_se"] = e.member_se;
  return j;
}

json to_json(const SteinSolution& s) {
  json j;
  j["nu"] = s.target.nu();
  j["expectation"] = s.expectation;
  j["quadrature_error_estimate"] = s.quadrature_error_estimate;
  j["grid"] = to_json(s.solution.grid());
  j["solution"] = std::vector<double>(s.solution.values().begin(), s.solution.values().end());
  j["derivative"] = std::vector<double>(s.derivative.values().begin(), s.derivative.values().end());
  return j;
}

json to_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = to_string(spec.name);
  j["n_list"] = spec.n_list;
  j["nu"] = spec.nu;
  json params = json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  j["params"] = params;
  j["draws"] = spec.draws;
  j["seed"] = spec.seed;
  j["family_size"] = spec.family_size;
  j["d2_method"] = spec.d2_method ? json(*spec.d2_method == DistanceMethod::mc ? "mc" : "quadrature")
                                  : json(nullptr);
  j["include_small_n"] = spec.include_small_n;
  j["tv"] = spec.tv;
  return j;
}

json to_json(const RateReport& report) {
  json j;
  j["spec"] = to_json(report.spec);
  json points = json::array();
  for (const auto& p : report.points) {
    json q;
    q["n"] = p.n;
    q["rescale"] = p.rescale;
    q["rank"] = p.rank;
    q["bound"] = to_json(p.bound);
    if (p.d2) {
      q["d2_noise_floor"] = p.d2->noise_floor;
      q["d2_coupled"] = p.d2->coupled;
      q["d2_argmax"] = p.d2->argmax;
    }
    points.push_back(q);
  }
  j["points"] = points;
  json slopes = json::object();
  for (const auto& [key, f] : report.slopes) {
    slopes[key] = json{{"slope", f.fit.slope},
                       {"slope_se", f.fit.slope_se},
                       {"intercept", f.fit.intercept},
                       {"n_used", f.n_used}};
  }
  j["slopes"] = slopes;
  return j;
}

namespace {

constexpr char kMagic[4] = {'W', 'G', 'L', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("sample batch: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_sample_batch(const SampleBatch& batch, std::ostream& out) {
  out.write(kMagic, 4);
  const char zeros[4] = {0, 0, 0, 0};
  out.write(zeros, 4);
  put_u64(out, batch.draws.size());
  for (double d : batch.draws) put_u64(out, std::bit_cast<std::uint64_t>(d));
  if (!out) throw ValidationError("sample batch: write failed");
}

SampleBatch read_sample_batch(std::istream& in) {
  char head[8];
  if (!in.read(head, 8) || std::memcmp(head, kMagic, 4) != 0) {
    throw ValidationError("sample batch: bad magic (expected WGL1)");
  }
  const std::uint64_t count = get_u64(in);
  SampleBatch batch;
  batch.draws.resize(count);
  for (auto& d : batch.draws) d = std::bit_cast<double>(get_u64(in));
  return batch;
}

void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  write_sample_batch(batch, out);
}

SampleBatch read_sample_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_sample_batch(in);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace wgl::io
