#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "afmap/bench.hpp"
#include "afmap/learn.hpp"

namespace afmap::cli {

namespace fs = std::filesystem;

struct ProjectConfig {
  fs::path workspace = "workspace";
  std::vector<fs::path> meshes;
  int k = 40;
  /// Index pairs into `meshes`; empty means every (i, j) with i < j.
  std::vector<std::pair<int, int>> pairs;
  Variant variant;
  PipelineOptions pipeline;  // pipeline.train holds the TrainConfig
  fs::path output = "out";

  /// Relative mesh paths resolve against this directory.
  fs::path base_dir = ".";

  /// Throws InvalidRangeError.
  void validate() const;
};

/// Missing keys take defaults; unknown keys are rejected with ParseError.
ProjectConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = ".");
nlohmann::json config_to_json(const ProjectConfig& config);
ProjectConfig load_config(const fs::path& path);

/// Maps an exception to the documented exit code (1 input/config, 2 numerical)
/// after printing it to `err`.
int exit_code_for(const std::exception& e, std::ostream& err);

/// Runs `fn`, returning 0 or the mapped exit code.
int guarded(const std::function<void()>& fn, std::ostream& err);

fs::path cache_path(const ProjectConfig& config, const fs::path& mesh_path, std::uint64_t mesh_hash);

struct PrecomputeSummary {
  int computed = 0;
  int reused = 0;
};

/// SPEC1 cache per mesh, keyed by mesh content hash and k. Existing caches are
/// left untouched.
PrecomputeSummary cmd_precompute(const ProjectConfig& config, std::ostream& log);

/// Writes <workspace>/train/filter.json and loss.csv. Throws
/// InvalidRangeError naming the mesh when a cache is missing.
TrainState cmd_train(const ProjectConfig& config, std::ostream& log);

struct MatchRequest {
  std::string x;  // mesh name (file stem) or index into the mesh list
  std::string y;
  std::optional<fs::path> ground_truth;
  bool one_based = false;
  bool refine = false;
};

/// Writes <output>/<x>__<y>.map (index per Y-vertex) and the JSON report.
PipelineResult cmd_match(const ProjectConfig& config, const MatchRequest& request, std::ostream& log);

/// G-ZoomOut on an existing correspondence file; writes <x>__<y>.refined.map.
PointwiseMap cmd_refine(const ProjectConfig& config, const MatchRequest& request, const fs::path& map_file,
                        std::ostream& log);

/// Geodesic report of `map_file` against request.ground_truth.
EvalReport cmd_eval(const ProjectConfig& config, const MatchRequest& request, const fs::path& map_file,
                    std::ostream& log);

/// profile.csv, loss.csv and pck.csv under <workspace>/plots. Throws
/// InvalidRangeError listing missing artifacts.
std::vector<fs::path> cmd_export_plots(const ProjectConfig& config, std::ostream& log);

struct SynthRequest {
  fs::path base;
  Deformation deformation;
  std::uint64_t seed = 0;
  fs::path out_dir;
};

/// Writes x.off, y.off and gt.map.
SyntheticPair cmd_synth(const SynthRequest& request, std::ostream& log);

}  // namespace afmap::cli
