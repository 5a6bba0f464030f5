#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "afmap/bench.hpp"
#include "afmap/fmap.hpp"
#include "afmap/learn.hpp"
#include "afmap/pointwise.hpp"
#include "afmap/spectral.hpp"

namespace afmap {

// Binary containers are little-endian and start with a 5-byte magic.
//   SPEC1: u64 mesh_hash, u32 k, u32 n, f64 tolerance, f64 λ[k], f64 Φ[n*k] row-major, f64 mass[n]
//   FMAP1: u32 k, u8 direction, f64 C[k*k] row-major
//   PMAP1: u32 rows, u32 cols, f64 P[rows*cols] row-major
// Readers throw ParseError on a bad magic, truncation or trailing bytes.

void write_spectrum(const Spectrum& spec, const std::filesystem::path& path);
Spectrum read_spectrum(const std::filesystem::path& path);

void write_fmap(const FunctionalMap& c, const std::filesystem::path& path);
FunctionalMap read_fmap(const std::filesystem::path& path);

void write_soft_map(const PointwiseMap& pi, const std::filesystem::path& path);
PointwiseMap read_soft_map(const std::filesystem::path& path);

/// One index per line, per Y-vertex. 0-based unless `one_based`.
void write_correspondence(const PointwiseMap& pi, const std::filesystem::path& path, bool one_based = false);
PointwiseMap read_correspondence(const std::filesystem::path& path, int source_count, bool one_based = false);

/// {"k", "T", "gains", "transform": {"rows", "cols", "data"}, "iterations", "spectrum_hash"}
nlohmann::json state_to_json(const TrainState& state, const std::string& spectrum_hash = "");
/// Restores filter, transform and iteration; moments and history are not stored.
TrainState state_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EvalReport& report);

/// "iteration,loss"
std::string loss_csv(const std::vector<double>& history);
/// "index,gain"
std::string profile_csv(const std::vector<std::pair<int, double>>& profile);
/// "threshold,pck"
std::string pck_csv(const EvalReport& report);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace afmap
