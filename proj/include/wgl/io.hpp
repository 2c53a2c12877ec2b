#pragma once

// JSON views of the library types and the binary SampleBatch format.
// Doubles are written in shortest round-trip form, so a parse reproduces
// every bit.

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "wgl/bounds.hpp"
#include "wgl/chaos.hpp"
#include "wgl/distance.hpp"
#include "wgl/experiments.hpp"
#include "wgl/stein.hpp"

namespace wgl::io {

using json = nlohmann::ordered_json;

json to_json(const SpectralForm& form);
SpectralForm spectral_form_from_json(const json& j);

// {"n": n, "entries": [[...], ...]}
json to_json(const KernelMatrix& matrix);
KernelMatrix kernel_matrix_from_json(const json& j);

// {"lo", "hi", "n_points"}
json to_json(const GridSpec& grid);
GridSpec grid_from_json(const json& j);
// {"lo", "hi", "values"}; n_points is the number of values.
json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const json& j);

json to_json(const GammaVarianceTable& table);
json to_json(const BoundReport& report);
json to_json(const IdentityCheck& check);
json to_json(const CumulantEstimate& estimate);
json to_json(const DistanceEstimate& estimate, const TestFamily* family = nullptr);
json to_json(const SteinSolution& solution);
json to_json(const ExperimentSpec& spec);
json to_json(const RateReport& report);

// 16-byte header: "WGL1", four zero bytes, little-endian u64 count; then
// count little-endian f64 values.
void write_sample_batch(const SampleBatch& batch, std::ostream& out);
SampleBatch read_sample_batch(std::istream& in);
void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& path);
SampleBatch read_sample_batch(const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);

}  // namespace wgl::io
