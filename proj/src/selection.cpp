#include "viewscale/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

namespace viewscale {

namespace {

struct Scored {
  double score;
  std::size_t index;
};

// Strict "a ranks below b": lower score, or equal score and higher index.
bool ranks_below(const Scored& a, const Scored& b) {
  return a.score < b.score || (a.score == b.score && a.index > b.index);
}

struct HeapOrder {
  bool operator()(const Scored& a, const Scored& b) const { return ranks_below(a, b); }
};

class CoverState {
 public:
  explicit CoverState(const VoxelUniverse& sets)
      : sets_(sets), covered_(sets.universe_size(), 0) {}

  std::size_t gain(std::size_t candidate) const {
    std::size_t g = 0;
    for (const auto id : sets_.members(candidate)) g += covered_[id] == 0;
    return g;
  }

  SelectionStep take(std::size_t candidate, double weight) {
    const std::size_t g = gain(candidate);
    for (const auto id : sets_.members(candidate)) covered_[id] = 1;
    count_ += g;
    return {candidate, g, weight, static_cast<double>(g) * weight, count_};
  }

 private:
  const VoxelUniverse& sets_;
  std::vector<std::uint8_t> covered_;
  std::size_t count_ = 0;
};

void check_kernel_inputs(const VoxelUniverse& sets, std::span<const double> weights,
                         std::size_t count) {
  require(weights.size() == sets.set_count(),
          "selection: one weight per candidate is required");
  require(count <= sets.set_count(),
          "selection: N_sel (" + std::to_string(count) +
              ") exceeds the candidate pool size (" +
              std::to_string(sets.set_count()) + ")");
}

void check_pool_inputs(const CandidatePool& pool, const VoxelUniverse& sets,
                       const SelectionParams& params) {
  params.validate();
  require(sets.set_count() == pool.size(),
          "selection: visibility sets must align 1:1 with pool candidates");
  require(params.unique_count() <= pool.size(),
          "selection: N_sel exceeds the candidate pool size");
}

SelectionResult finish(const VoxelUniverse& sets, const SelectionParams& params,
                       std::vector<SelectionStep> steps) {
  SelectionResult result;
  result.params = params;
  result.scene_union_size = sets.universe_size();
  std::vector<std::uint32_t> covered;
  for (const auto& s : steps) {
    const auto m = sets.members(s.pool_index);
    covered.insert(covered.end(), m.begin(), m.end());
  }
  result.covered_union = sets.to_set(covered);
  result.steps = std::move(steps);
  result.training_stream =
      resample_to_budget(result.selected_indices(), params.budget,
                         derive_key(params.seed, fnv1a64("resample")));
  return result;
}

}  // namespace

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::random: return "random";
    case Policy::robot: return "robot";
    case Policy::coverage: return "coverage";
    case Policy::cn_coverage: return "cn_coverage";
    case Policy::stoch_greedy_coverage: return "stoch_greedy_coverage";
  }
  return "unknown";
}

Policy policy_from_string(std::string_view name) {
  for (auto p : {Policy::random, Policy::robot, Policy::coverage,
                 Policy::cn_coverage, Policy::stoch_greedy_coverage})
    if (name == to_string(p)) return p;
  throw InputError("unknown policy '" + std::string(name) + "'");
}

void SelectionParams::validate() const {
  require(sigma > 0 && !std::isnan(sigma), "selection: sigma must be positive");
  require(lambda_yaw >= 0 && std::isfinite(lambda_yaw),
          "selection: lambda_yaw must be nonnegative");
  require(unique_cap >= 1, "selection: unique_cap must be >= 1");
  require(stoch_subsample_eps > 0 && stoch_subsample_eps < 1,
          "selection: stoch_subsample_eps must lie in (0, 1)");
}

std::vector<std::size_t> SelectionResult::selected_indices() const {
  std::vector<std::size_t> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.pool_index);
  return out;
}

std::vector<double> SelectionResult::coverage_fraction_trace() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps)
    out.push_back(scene_union_size == 0
                      ? 0.0
                      : static_cast<double>(s.covered) /
                            static_cast<double>(scene_union_size));
  return out;
}

double novelty_distance(const Posed& pose, std::span<const Posed> train_poses,
                        double lambda_yaw) {
  require(!train_poses.empty(), "novelty_distance: train poses are empty");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& train : train_poses) {
    const double d = (pose.position() - train.position()).norm() +
                     lambda_yaw * std::abs(wrap_angle(pose.yaw() - train.yaw()));
    best = std::min(best, d);
  }
  return best;
}

double novelty_weight(const Posed& pose, std::span<const Posed> train_poses,
                      const SelectionParams& params) {
  return std::exp(-novelty_distance(pose, train_poses, params.lambda_yaw) /
                  params.sigma);
}

std::vector<double> novelty_weights(const CandidatePool& pool,
                                    std::span<const Posed> train_poses,
                                    const SelectionParams& params) {
  std::vector<double> out;
  out.reserve(pool.size());
  for (const auto& c : pool.candidates)
    out.push_back(novelty_weight(c, train_poses, params));
  return out;
}

std::vector<SelectionStep> lazy_greedy(const VoxelUniverse& sets,
                                       std::span<const double> weights,
                                       std::size_t count) {
  check_kernel_inputs(sets, weights, count);
  CoverState state(sets);
  std::vector<Scored> initial;
  initial.reserve(sets.set_count());
  for (std::size_t i = 0; i < sets.set_count(); ++i)
    initial.push_back({static_cast<double>(sets.members(i).size()) * weights[i], i});
  std::priority_queue<Scored, std::vector<Scored>, HeapOrder> heap(
      HeapOrder{}, std::move(initial));

  std::vector<SelectionStep> steps;
  steps.reserve(count);
  while (steps.size() < count) {
    Scored top = heap.top();
    heap.pop();
    // Stale scores upper-bound fresh ones, so a refreshed entry that still
    // ranks at or above the next stale bound is the true argmax.
    top.score = static_cast<double>(state.gain(top.index)) * weights[top.index];
    if (heap.empty() || !ranks_below(top, heap.top())) {
      steps.push_back(state.take(top.index, weights[top.index]));
    } else {
      heap.push(top);
    }
  }
  return steps;
}

std::vector<SelectionStep> naive_greedy(const VoxelUniverse& sets,
                                        std::span<const double> weights,
                                        std::size_t count) {
  check_kernel_inputs(sets, weights, count);
  CoverState state(sets);
  std::vector<bool> taken(sets.set_count(), false);
  std::vector<SelectionStep> steps;
  steps.reserve(count);
  while (steps.size() < count) {
    Scored best{-1.0, 0};
    for (std::size_t i = 0; i < sets.set_count(); ++i) {
      if (taken[i]) continue;
      const Scored s{static_cast<double>(state.gain(i)) * weights[i], i};
      if (best.score < 0 || ranks_below(best, s)) best = s;
    }
    taken[best.index] = true;
    steps.push_back(state.take(best.index, weights[best.index]));
  }
  return steps;
}

std::vector<SelectionStep> stochastic_greedy(const VoxelUniverse& sets,
                                             std::span<const double> weights,
                                             std::size_t count,
                                             std::size_t subsample_size,
                                             RandomStream& rng) {
  check_kernel_inputs(sets, weights, count);
  require(subsample_size >= 1, "stochastic_greedy: subsample size must be >= 1");
  CoverState state(sets);
  std::vector<std::size_t> remaining(sets.set_count());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<SelectionStep> steps;
  steps.reserve(count);
  while (steps.size() < count) {
    const std::size_t m = std::min(subsample_size, remaining.size());
    // Partial Fisher-Yates: the first m slots become the subsample.
    if (m < remaining.size()) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.index(remaining.size() - i);
        std::swap(remaining[i], remaining[j]);
      }
    }
    Scored best{-1.0, 0};
    std::size_t best_slot = 0;
    for (std::size_t slot = 0; slot < m; ++slot) {
      const std::size_t i = remaining[slot];
      const Scored s{static_cast<double>(state.gain(i)) * weights[i], i};
      if (best.score < 0 || ranks_below(best, s)) {
        best = s;
        best_slot = slot;
      }
    }
    steps.push_back(state.take(best.index, weights[best.index]));
    // The argmax is order-independent, so swap-remove is enough.
    remaining[best_slot] = remaining.back();
    remaining.pop_back();
  }
  return steps;
}

std::vector<SelectionStep> ordered_selection(const VoxelUniverse& sets,
                                             std::span<const double> weights,
                                             std::span<const std::size_t> order) {
  check_kernel_inputs(sets, weights, order.size());
  CoverState state(sets);
  std::vector<SelectionStep> steps;
  steps.reserve(order.size());
  for (const auto i : order) {
    require(i < sets.set_count(), "ordered_selection: index out of range");
    steps.push_back(state.take(i, weights[i]));
  }
  return steps;
}

std::size_t stochastic_subsample_size(std::size_t pool_size,
                                      std::size_t unique_count, double eps) {
  if (unique_count == 0) return pool_size;
  const double s = static_cast<double>(pool_size) /
                   static_cast<double>(unique_count) * std::log(1.0 / eps);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(s)));
}

SelectionResult greedy_select(const CandidatePool& pool, const VoxelUniverse& sets,
                              std::span<const Posed> train_poses,
                              const SelectionParams& params) {
  check_pool_inputs(pool, sets, params);
  require(params.policy == Policy::coverage || params.policy == Policy::cn_coverage,
          "greedy_select: policy must be coverage or cn_coverage");
  const auto pi = novelty_weights(pool, train_poses, params);
  std::vector<SelectionStep> steps;
  if (params.policy == Policy::cn_coverage) {
    steps = lazy_greedy(sets, pi, params.unique_count());
  } else {
    const std::vector<double> ones(pool.size(), 1.0);
    steps = lazy_greedy(sets, ones, params.unique_count());
    for (auto& s : steps) s.novelty_weight = pi[s.pool_index];
  }
  return finish(sets, params, std::move(steps));
}

SelectionResult stochastic_greedy_select(const CandidatePool& pool,
                                         const VoxelUniverse& sets,
                                         std::span<const Posed> train_poses,
                                         const SelectionParams& params) {
  check_pool_inputs(pool, sets, params);
  const auto pi = novelty_weights(pool, train_poses, params);
  const std::vector<double> ones(pool.size(), 1.0);
  RandomStream rng(derive_key(params.seed, fnv1a64("stoch_greedy")));
  auto steps = stochastic_greedy(
      sets, ones, params.unique_count(),
      stochastic_subsample_size(pool.size(), params.unique_count(),
                                params.stoch_subsample_eps),
      rng);
  for (auto& s : steps) s.novelty_weight = pi[s.pool_index];
  return finish(sets, params, std::move(steps));
}

SelectionResult select_views(const CandidatePool& pool, const VoxelUniverse& sets,
                             std::span<const Posed> train_poses,
                             const SelectionParams& params) {
  switch (params.policy) {
    case Policy::coverage:
    case Policy::cn_coverage:
      return greedy_select(pool, sets, train_poses, params);
    case Policy::stoch_greedy_coverage:
      return stochastic_greedy_select(pool, sets, train_poses, params);
    case Policy::random:
    case Policy::robot: {
      check_pool_inputs(pool, sets, params);
      const Provenance wanted =
          params.policy == Policy::random ? Provenance::random : Provenance::robot;
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < pool.size() && order.size() < params.unique_count(); ++i)
        if (pool.provenance[i] == wanted) order.push_back(i);
      require(order.size() == params.unique_count(),
              std::string("selection: pool has fewer ") + to_string(wanted) +
                  " candidates than N_sel");
      const auto pi = novelty_weights(pool, train_poses, params);
      auto steps = ordered_selection(sets, pi, order);
      return finish(sets, params, std::move(steps));
    }
  }
  throw InputError("select_views: unknown policy");
}

std::vector<std::size_t> resample_to_budget(std::span<const std::size_t> selected,
                                            std::size_t budget, std::uint64_t seed) {
  if (budget <= selected.size())
    return {selected.begin(), selected.begin() + static_cast<std::ptrdiff_t>(budget)};
  require(!selected.empty(), "resample_to_budget: nothing selected for a positive budget");
  std::vector<std::size_t> stream(selected.begin(), selected.end());
  stream.reserve(budget);
  RandomStream rng(seed);
  while (stream.size() < budget) stream.push_back(selected[rng.index(selected.size())]);
  return stream;
}

double coverage_fraction(const SelectionResult& result,
                         const VisibilitySet& scene_union) {
  require(!scene_union.empty(), "coverage_fraction: scene union is empty");
  return static_cast<double>(result.covered_union.size()) /
         static_cast<double>(scene_union.size());
}

}  // namespace viewscale
