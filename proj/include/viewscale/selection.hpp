#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "viewscale/coverage.hpp"
#include "viewscale/random.hpp"
#include "viewscale/sampling.hpp"

namespace viewscale {

enum class Policy { random, robot, coverage, cn_coverage, stoch_greedy_coverage };

const char* to_string(Policy policy);
Policy policy_from_string(std::string_view name);

struct SelectionParams {
  double sigma = 0.35;       // meters
  double lambda_yaw = 0.20;  // meters per radian
  std::size_t unique_cap = 500;
  std::size_t budget = 0;
  Policy policy = Policy::cn_coverage;
  double stoch_subsample_eps = 0.1;
  std::uint64_t seed = 0;  // stochastic greedy subsampling and resampling

  void validate() const;
  /// N_sel = min(N, unique_cap).
  std::size_t unique_count() const { return budget < unique_cap ? budget : unique_cap; }
};

struct SelectionStep {
  std::size_t pool_index = 0;
  std::size_t gain = 0;         // newly covered voxels
  double novelty_weight = 1.0;  // exp(-d / sigma) of the candidate
  double score = 0.0;           // objective value at selection
  std::size_t covered = 0;      // |union| after this step
};

struct SelectionResult {
  SelectionParams params;
  std::vector<SelectionStep> steps;
  VisibilitySet covered_union;
  std::size_t scene_union_size = 0;
  std::vector<std::size_t> training_stream;

  std::vector<std::size_t> selected_indices() const;
  /// |union after step k| / |scene union| for every step.
  std::vector<double> coverage_fraction_trace() const;
};

/// min over train poses of ||t - t'|| + lambda_yaw * |wrap(yaw - yaw')|.
double novelty_distance(const Posed& pose, std::span<const Posed> train_poses,
                        double lambda_yaw);

/// exp(-novelty_distance / sigma).
double novelty_weight(const Posed& pose, std::span<const Posed> train_poses,
                      const SelectionParams& params);

std::vector<double> novelty_weights(const CandidatePool& pool,
                                    std::span<const Posed> train_poses,
                                    const SelectionParams& params);

// Selection kernels over dense voxel sets. `weights` multiplies each
// candidate's coverage gain; ties go to the lowest index and zero-score
// candidates fill the tail in index order.

/// Lazy greedy with a max-heap of stale scores. Exact: returns the same
/// steps as naive_greedy whenever weights are fixed per candidate.
std::vector<SelectionStep> lazy_greedy(const VoxelUniverse& sets,
                                       std::span<const double> weights,
                                       std::size_t count);

/// Rescores every remaining candidate each round.
std::vector<SelectionStep> naive_greedy(const VoxelUniverse& sets,
                                        std::span<const double> weights,
                                        std::size_t count);

/// Each round scores a uniform subsample (without replacement) of
/// `subsample_size` remaining candidates.
std::vector<SelectionStep> stochastic_greedy(const VoxelUniverse& sets,
                                             std::span<const double> weights,
                                             std::size_t count,
                                             std::size_t subsample_size,
                                             RandomStream& rng);

/// Steps for a fixed selection order (gains accumulate along the order).
std::vector<SelectionStep> ordered_selection(const VoxelUniverse& sets,
                                             std::span<const double> weights,
                                             std::span<const std::size_t> order);

/// ceil((pool_size / unique_count) * ln(1 / eps)).
std::size_t stochastic_subsample_size(std::size_t pool_size,
                                      std::size_t unique_count, double eps);

/// Coverage / CN-Coverage greedy (lazy evaluation). For Policy::coverage the
/// objective weight is 1.
SelectionResult greedy_select(const CandidatePool& pool, const VoxelUniverse& sets,
                              std::span<const Posed> train_poses,
                              const SelectionParams& params);

SelectionResult stochastic_greedy_select(const CandidatePool& pool,
                                         const VoxelUniverse& sets,
                                         std::span<const Posed> train_poses,
                                         const SelectionParams& params);

/// Dispatches on params.policy. Random and robot policies take the first
/// N_sel candidates of matching provenance in pool order. Fills the
/// training stream.
SelectionResult select_views(const CandidatePool& pool, const VoxelUniverse& sets,
                             std::span<const Posed> train_poses,
                             const SelectionParams& params);

/// First N selections when N <= |selected|; otherwise all selections followed
/// by N - |selected| uniform draws with replacement.
std::vector<std::size_t> resample_to_budget(std::span<const std::size_t> selected,
                                            std::size_t budget, std::uint64_t seed);

/// |covered| / |scene union|.
double coverage_fraction(const SelectionResult& result,
                         const VisibilitySet& scene_union);

}  // namespace viewscale
