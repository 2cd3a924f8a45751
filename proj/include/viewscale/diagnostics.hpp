#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace viewscale {

struct StabilitySummary {
  double mean = 0;
  double worst = 0;  // max over the window (errors: higher is worse)
  double range = 0;  // worst - best
  std::size_t budgets = 0;
};

/// Summary over values whose budget is >= floor.
StabilitySummary stability_summary(const std::map<std::size_t, double>& by_budget,
                                   std::size_t floor = 200);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Product-moment correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of average ranks.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

/// Equal-mass bins 1..k per value: bin = floor(k (r - 1) / n) + 1 with r the
/// lowest rank among tied values, so ties land in the lower bin.
std::vector<int> novelty_bins(std::span<const double> values, int k = 5);

struct WilcoxonResult {
  double median_delta = 0;
  double mean_delta = 0;
  double p_value = 1;
  double w_plus = 0;      // sum of ranks of positive deltas
  std::size_t n_used = 0; // nonzero deltas
  std::size_t wins = 0, losses = 0, ties = 0;  // delta > 0, < 0, == 0
  bool exact = false;
  bool degenerate = false;  // no nonzero deltas
};

/// Two-sided signed-rank test. Zero deltas are dropped; exact null
/// distribution for n <= 25 (average ranks for ties), otherwise the normal
/// approximation with tie and continuity corrections.
WilcoxonResult paired_wilcoxon(std::span<const double> deltas);

inline constexpr std::size_t kWilcoxonExactLimit = 25;

// ---------------------------------------------------------------------------
// Run-record tables

struct RunRecord {
  std::string method;
  std::size_t budget = 0;
  std::string scene_id;
  double metric_value = 0;
  double coverage_fraction = 0;
  std::vector<double> novelty_values;  // per frame, optional
  std::vector<double> frame_errors;    // aligned with novelty_values, optional
};

struct ScalingRow {
  std::string method;
  std::size_t budget = 0;
  std::size_t scenes = 0;
  double mean = 0;
  double ci95 = 0;
  double coverage_mean = 0;
};

struct StabilityRow {
  std::string method;
  StabilitySummary summary;
};

struct CorrelationRow {
  std::string method;
  std::size_t points = 0;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

struct TailRow {
  std::string method;
  std::size_t budget = 0;
  std::size_t scenes = 0;
  double mean = 0;
  double ci95 = 0;
};

struct PairedRow {
  std::size_t budget = 0;
  std::string target;
  std::string comparator;  // "best_other" for the per-scene minimum
  WilcoxonResult test;
};

struct NoveltyBinPoint {
  std::string method;
  std::size_t budget = 0;
  std::string scene_id;
  int bin = 0;
  double mean_error = 0;
};

/// Mean +- 95% CI across scenes for every (method, budget).
std::vector<ScalingRow> scaling_table(std::span<const RunRecord> records);

std::vector<StabilityRow> stability_table(std::span<const RunRecord> records,
                                          std::size_t floor = 200);

/// Per method, correlation of mean coverage vs mean metric across budgets.
std::vector<CorrelationRow> correlation_table(std::span<const RunRecord> records);

/// Per-scene, per-bin mean frame error (records with novelty data only).
std::vector<NoveltyBinPoint> novelty_bin_points(std::span<const RunRecord> records,
                                                int k = 5);

/// Mean +- CI across scenes of the highest-bin error per (method, budget).
std::vector<TailRow> tail_table(std::span<const RunRecord> records, int k = 5);

/// Paired signed-rank tests of `target` minus every other method on shared
/// scenes, plus target minus the per-scene best of the other methods.
std::vector<PairedRow> paired_table(std::span<const RunRecord> records,
                                    const std::string& target);

}  // namespace viewscale
