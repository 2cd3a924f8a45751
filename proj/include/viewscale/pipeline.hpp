#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "viewscale/config.hpp"

namespace viewscale {

Scene load_scene(const RunConfig& config);
std::vector<Posed> load_train_poses(const RunConfig& config);

/// Runs fn(0..n-1) on at most `threads` workers. The first exception (by
/// index) is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

/// Visibility set of every candidate, extracted in parallel.
std::vector<VisibilitySet> extract_visibility(const Scene& scene,
                                              const Intrinsicsd& intrinsics,
                                              std::span<const Posed> candidates,
                                              const CoverageParams& params,
                                              unsigned threads);

/// "{policy}_{N}_{seed}".
std::string run_key(const std::string& policy, std::size_t budget, std::uint64_t seed);

struct SelectTiming {
  double voxel_extract_s = 0;
  double greedy_select_s = 0;  // summed over greedy runs
  double total_s = 0;
  std::size_t candidates = 0;
  std::size_t greedy_runs = 0;

  /// Total selection time per candidate, in milliseconds.
  double per_candidate_ms() const;
};

struct CommandOutcome {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> failed;  // "run_key: reason"
  std::vector<std::string> warnings;
  bool ok() const { return failed.empty(); }
};

struct SelectOutcome : CommandOutcome {
  SelectTiming timing;
};

/// Pool -> visibility -> every (policy, budget) selection. Writes
/// select/{key}.json, select/{key}_trace.csv and select/summary.csv.
SelectOutcome cmd_select(const RunConfig& config);

/// Writes pool/pool_{seed}.json.
CommandOutcome cmd_pool(const RunConfig& config);

/// Writes simulate/{estimator}_{n_episodes}_{seed}.json and, if enabled, the
/// per-episode CSV next to it.
CommandOutcome cmd_simulate(const RunConfig& config);

/// Reads the run-record CSV and writes the diagnostics tables to report/.
CommandOutcome cmd_report(const RunConfig& config);

/// Reads the scene-quality CSV and writes gate/gate_report.json.
CommandOutcome cmd_gate(const RunConfig& config);

/// Timing lines for stdout.
void print_timing(std::ostream& out, const SelectTiming& timing);

}  // namespace viewscale
