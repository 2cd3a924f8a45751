#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "viewscale/control_proxy.hpp"
#include "viewscale/coverage.hpp"
#include "viewscale/gating.hpp"
#include "viewscale/geometry.hpp"
#include "viewscale/io.hpp"
#include "viewscale/sampling.hpp"
#include "viewscale/selection.hpp"

namespace viewscale {

/// Scene: an OBJ mesh, an inline procedural shape list, or (neither) the
/// built-in demo room.
struct SceneSource {
  std::string id = "demo_room";
  std::string obj;              // path
  nlohmann::json procedural;    // null when unused
};

/// Training trajectory: a TUM file, or a demo orbit when no path is given.
struct TrajectorySource {
  std::string tum;  // path
  std::array<double, 2> orbit_center{3.0, 2.5};
  double orbit_radius = 1.2;
  double orbit_height = 1.3;
  int orbit_count = 60;
};

struct EstimatorConfig {
  std::string kind = "oracle";  // oracle | additive_noise | multiplicative_bias | scripted
  double sigma = 0.0;
  double offset = 0.0;
  double factor = 1.0;
  std::string script;  // CSV path for kind = scripted
};

struct ReportConfig {
  std::string records;  // RunRecord CSV path
  std::string frames;   // optional per-frame novelty/error CSV path
  std::string target;   // method tested against the rest; empty skips paired tests
  std::size_t stability_floor = 200;
  int bins = 5;
};

struct RunConfig {
  SceneSource scene;
  TrajectorySource trajectory;
  Intrinsicsd intrinsics = Intrinsicsd::tum_freiburg1();
  CoverageParams coverage;
  SamplerParams sampler;
  SelectionParams selection;  // knobs; budget, policy and seed come per run
  std::vector<Policy> policies{Policy::random, Policy::robot, Policy::coverage,
                               Policy::cn_coverage, Policy::stoch_greedy_coverage};
  std::vector<std::size_t> budgets{0, 25, 50, 100, 200, 500, 1000, 2000};
  GateParams gate;
  std::string quality;  // scene-quality CSV path
  EpisodeConfig episodes;
  EstimatorConfig estimator;
  bool per_episode_csv = true;
  ReportConfig report;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  unsigned threads = 0;  // 0: hardware concurrency

  /// Relative paths resolve against this directory (the config file's).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  unsigned worker_count() const;

  /// Checks every parameter block; the message names the failing field.
  /// `command` limits file checks to what that command reads ("" checks all
  /// referenced files).
  void validate(const std::string& command = "") const;
};

RunConfig config_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir = {});
ojson config_to_json(const RunConfig& config);

/// Loads .toml or .json (decided by extension).
RunConfig load_config(const std::filesystem::path& path);

/// TOML document to the equivalent JSON tree.
nlohmann::json parse_toml(const std::string& text, const std::string& source = "config");

ClearanceEstimator make_estimator(const RunConfig& config);

}  // namespace viewscale
