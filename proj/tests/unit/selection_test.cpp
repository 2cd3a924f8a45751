#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "test_support.hpp"
#include "viewscale/error.hpp"
#include "viewscale/selection.hpp"

using namespace viewscale;
using fixtures::ids;
using fixtures::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

// A pool whose candidates sit on a line; provenance alternates in blocks.
CandidatePool line_pool(std::size_t n, std::size_t n_random) {
  CandidatePool pool;
  pool.scene_id = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    pool.candidates.push_back(Posed::looking(Vec3d(0.1 * static_cast<double>(i), 0, 1), 0.0));
    pool.provenance.push_back(i < n_random ? Provenance::random : Provenance::robot);
  }
  return pool;
}

std::size_t union_size(const std::vector<VisibilitySet>& family,
                       const std::vector<std::size_t>& chosen) {
  std::set<VoxelId> u;
  for (auto i : chosen) u.insert(family[i].begin(), family[i].end());
  return u.size();
}

std::vector<std::size_t> indices(const std::vector<SelectionStep>& steps) {
  std::vector<std::size_t> out;
  for (const auto& s : steps) out.push_back(s.pool_index);
  return out;
}

void expect_same_steps(const std::vector<SelectionStep>& a, const std::vector<SelectionStep>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pool_index, b[i].pool_index) << "step " << i;
    EXPECT_EQ(a[i].gain, b[i].gain) << "step " << i;
    EXPECT_EQ(a[i].score, b[i].score) << "step " << i;
    EXPECT_EQ(a[i].covered, b[i].covered) << "step " << i;
  }
}

void expect_same_result(const SelectionResult& a, const SelectionResult& b) {
  expect_same_steps(a.steps, b.steps);
  EXPECT_EQ(a.training_stream, b.training_stream);
  EXPECT_EQ(a.covered_union, b.covered_union);
}

}  // namespace

TEST(NoveltyDistance, Examples) {
  const auto train = Posed::looking(Vec3d(1, 1, 1), 0.2);
  const std::vector<Posed> one{train};
  EXPECT_EQ(novelty_distance(train, one, 0.2), 0.0);
  const auto moved = Posed::looking(Vec3d(1.3, 1.4, 1), 0.7);
  EXPECT_NEAR(novelty_distance(moved, one, 0.20), 0.6, 1e-12);
}

TEST(NoveltyDistance, WrapsYawDifference) {
  // Raw difference 3*pi/2 wraps to -pi/2.
  const std::vector<Posed> train{Posed::looking(Vec3d::Zero(), -0.75 * kPi)};
  const auto pose = Posed::looking(Vec3d::Zero(), 0.75 * kPi);
  EXPECT_NEAR(novelty_distance(pose, train, 0.20), 0.20 * kPi / 2, 1e-12);
  EXPECT_NEAR(novelty_distance(pose, train, 0.20), 0.31416, 1e-5);
}

TEST(NoveltyDistance, TakesMinimumOverTrainPoses) {
  const std::vector<Posed> train{Posed::looking(Vec3d(5, 0, 0), 0.0),
                                 Posed::looking(Vec3d(0.5, 0, 0), 0.0),
                                 Posed::looking(Vec3d(0, 0, 0), 1.0)};
  EXPECT_NEAR(novelty_distance(Posed::looking(Vec3d::Zero(), 0.0), train, 0.2), 0.2, 1e-12);
  EXPECT_THROW(novelty_distance(train[0], {}, 0.2), InputError);
}

TEST(NoveltyWeight, Examples) {
  SelectionParams p;
  const std::vector<Posed> train{Posed::looking(Vec3d::Zero(), 0.0)};
  EXPECT_EQ(novelty_weight(train[0], train, p), 1.0);
  EXPECT_NEAR(novelty_weight(Posed::looking(Vec3d(0.35, 0, 0), 0.0), train, p),
              0.36787944117144233, 1e-15);
  EXPECT_NEAR(novelty_weight(Posed::looking(Vec3d(0.7, 0, 0), 0.0), train, p),
              0.1353352832366127, 1e-15);
  p.sigma = std::numeric_limits<double>::infinity();
  EXPECT_EQ(novelty_weight(Posed::looking(Vec3d(9, 0, 0), 2.0), train, p), 1.0);
}

TEST(SelectionParams, Validate) {
  SelectionParams p;
  EXPECT_NO_THROW(p.validate());
  p.sigma = 0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.lambda_yaw = -1;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.unique_cap = 0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.budget = 2000;
  EXPECT_EQ(p.unique_count(), 500u);
  p.budget = 25;
  EXPECT_EQ(p.unique_count(), 25u);
  EXPECT_EQ(policy_from_string("cn_coverage"), Policy::cn_coverage);
  EXPECT_THROW(policy_from_string("best"), InputError);
}

TEST(GreedyKernel, SingleStepArgmax) {
  const std::vector<VisibilitySet> family{ids({1, 2, 3, 4, 5}),
                                          ids({10, 11, 12, 13, 14, 15, 16, 17, 18}),
                                          ids({20, 21, 22, 23, 24, 25, 26})};
  const VoxelUniverse u(family);
  const std::vector<double> ones(3, 1.0);
  const auto steps = lazy_greedy(u, ones, 1);
  ASSERT_EQ(steps.size(), 1u);
  EXPECT_EQ(steps[0].pool_index, 1u);
  EXPECT_EQ(steps[0].gain, 9u);
}

TEST(GreedyKernel, NoveltyWeightChangesTheChoice) {
  const std::vector<VisibilitySet> family{ids({1, 2, 3}), ids({4, 5, 6, 7})};
  const VoxelUniverse u(family);
  const std::vector<double> pi{1.0, 0.4};
  const auto steps = lazy_greedy(u, pi, 1);
  EXPECT_EQ(steps[0].pool_index, 0u);
  EXPECT_DOUBLE_EQ(steps[0].score, 3.0);
  const auto both = naive_greedy(u, pi, 2);
  EXPECT_NEAR(both[1].score, 1.6, 1e-15);
}

TEST(GreedyKernel, TiesGoToLowestIndexAndZeroGainFillsInOrder) {
  const std::vector<VisibilitySet> family{ids({1}), ids({2, 3}), ids({4, 5}), ids({1}), {}};
  const VoxelUniverse u(family);
  const std::vector<double> ones(5, 1.0);
  const auto steps = lazy_greedy(u, ones, 5);
  EXPECT_EQ(indices(steps), (std::vector<std::size_t>{1, 2, 0, 3, 4}));
  EXPECT_EQ(steps[3].gain, 0u);
  EXPECT_EQ(steps[4].gain, 0u);
  expect_same_steps(steps, naive_greedy(u, ones, 5));
}

TEST(GreedyKernel, RejectsOversizedBudget) {
  const std::vector<VisibilitySet> family{ids({1}), ids({2})};
  const VoxelUniverse u(family);
  const std::vector<double> ones(2, 1.0);
  EXPECT_THROW(lazy_greedy(u, ones, 3), InputError);
  EXPECT_THROW(lazy_greedy(u, std::vector<double>(1, 1.0), 1), InputError);
}

TEST(GreedyKernel, WithinOneMinusInverseEOfExhaustiveOptimum) {
  Rng rng(99);
  const double bound = 1.0 - std::exp(-1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto family = fixtures::random_family(rng, 12, 40, 0.15);
    const VoxelUniverse u(family);
    const std::vector<double> ones(12, 1.0);
    const auto greedy = union_size(family, indices(lazy_greedy(u, ones, 3)));
    std::size_t best = 0;
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = a + 1; b < 12; ++b)
        for (std::size_t c = b + 1; c < 12; ++c)
          best = std::max(best, union_size(family, {a, b, c}));
    EXPECT_GE(static_cast<double>(greedy), bound * static_cast<double>(best));
  }
}

TEST(GreedyKernel, LazyEqualsNaiveOnRandomInstances) {
  Rng rng(123);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
    const auto family = fixtures::random_family(rng, n, 80, 0.08);
    const VoxelUniverse u(family);
    std::vector<double> pi(n);
    for (auto& x : pi) x = trial % 3 == 0 ? 1.0 : w(rng);
    const std::size_t count = n / 2 + 1;
    expect_same_steps(lazy_greedy(u, pi, count), naive_greedy(u, pi, count));
  }
}

TEST(GreedyKernel, GainsNonincreasingForUnitWeights) {
  Rng rng(5);
  const auto family = fixtures::random_family(rng, 40, 100, 0.1);
  const VoxelUniverse u(family);
  const auto steps = lazy_greedy(u, std::vector<double>(40, 1.0), 40);
  for (std::size_t i = 1; i < steps.size(); ++i) EXPECT_LE(steps[i].gain, steps[i - 1].gain);
}

TEST(GreedyKernel, PermutationEquivariantWithDistinctScores) {
  // Sets of distinct sizes over disjoint supports have distinct scores.
  std::vector<VisibilitySet> family;
  int next = 0;
  for (int size : {3, 7, 1, 5, 6, 2}) {
    std::vector<VoxelId> v;
    for (int k = 0; k < size; ++k) v.push_back({next++, 0, 0});
    family.emplace_back(std::move(v));
  }
  const std::vector<std::size_t> perm{4, 0, 5, 2, 1, 3};  // new i holds old perm[i]
  std::vector<VisibilitySet> permuted;
  for (auto i : perm) permuted.push_back(family[i]);
  const auto a = indices(lazy_greedy(VoxelUniverse(family), std::vector<double>(6, 1.0), 4));
  const auto b = indices(lazy_greedy(VoxelUniverse(permuted), std::vector<double>(6, 1.0), 4));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(perm[b[i]], a[i]);
}

TEST(StochasticGreedy, SubsampleSizeFormula) {
  EXPECT_EQ(stochastic_subsample_size(1000, 500, 0.1),
            static_cast<std::size_t>(std::ceil(2.0 * std::log(10.0))));
  EXPECT_EQ(stochastic_subsample_size(1000, 0, 0.1), 1000u);
}

TEST(StochasticGreedy, FullSubsampleMatchesGreedy) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto family = fixtures::random_family(rng, 30, 60, 0.1);
    const VoxelUniverse u(family);
    const std::vector<double> ones(30, 1.0);
    RandomStream stream(static_cast<std::uint64_t>(trial));
    expect_same_steps(stochastic_greedy(u, ones, 12, 30, stream), naive_greedy(u, ones, 12));
  }
}

TEST(StochasticGreedy, MonteCarloCoverageNearGreedy) {
  Rng rng(31);
  const auto family = fixtures::random_family(rng, 12, 40, 0.2);
  const VoxelUniverse u(family);
  const std::vector<double> ones(12, 1.0);
  const double greedy = static_cast<double>(lazy_greedy(u, ones, 4).back().covered);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomStream stream(derive_key(seed, 1));
    const auto steps = stochastic_greedy(u, ones, 4, stochastic_subsample_size(12, 4, 0.1), stream);
    total += static_cast<double>(steps.back().covered);
  }
  EXPECT_GE(total / 50.0, 0.9 * greedy);
}

TEST(ResampleToBudget, CapBoundaryAndPrefix) {
  std::vector<std::size_t> selected(500);
  std::iota(selected.begin(), selected.end(), 100);
  EXPECT_EQ(resample_to_budget(selected, 500, 1), selected);
  const auto prefix = resample_to_budget(selected, 25, 1);
  EXPECT_EQ(prefix, std::vector<std::size_t>(selected.begin(), selected.begin() + 25));
  EXPECT_TRUE(resample_to_budget({}, 0, 1).empty());
  EXPECT_THROW(resample_to_budget({}, 3, 1), InputError);
}

TEST(ResampleToBudget, TailIsUniformWithReplacement) {
  std::vector<std::size_t> selected(500);
  std::iota(selected.begin(), selected.end(), 0);
  const auto stream = resample_to_budget(selected, 2000, 77);
  ASSERT_EQ(stream.size(), 2000u);
  EXPECT_TRUE(std::equal(selected.begin(), selected.end(), stream.begin()));
  std::vector<int> counts(500, 0);
  for (std::size_t i = 500; i < 2000; ++i) {
    ASSERT_LT(stream[i], 500u);
    ++counts[stream[i]];
  }
  // Pearson chi-square against 3 expected draws per index, 499 dof.
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 3.0) * (c - 3.0) / 3.0;
  EXPECT_LT(chi2, 575.4);  // chi-square(499) upper 1% point
  EXPECT_EQ(stream, resample_to_budget(selected, 2000, 77));
}

TEST(SelectViews, InvariantsAcrossPolicies) {
  Rng rng(44);
  const auto family = fixtures::random_family(rng, 60, 200, 0.05);
  const VoxelUniverse u(family);
  const auto pool = line_pool(60, 30);
  const std::vector<Posed> train{Posed::looking(Vec3d(0, 0, 1), 0.0)};
  for (auto policy : {Policy::random, Policy::robot, Policy::coverage, Policy::cn_coverage,
                      Policy::stoch_greedy_coverage}) {
    for (std::size_t budget : {0u, 1u, 10u, 20u, 45u}) {
      SelectionParams p;
      p.policy = policy;
      p.budget = budget;
      p.unique_cap = 20;
      p.seed = 3;
      const auto r = select_views(pool, u, train, p);
      ASSERT_EQ(r.steps.size(), std::min<std::size_t>(budget, 20));
      auto sel = r.selected_indices();
      std::set<std::size_t> unique(sel.begin(), sel.end());
      EXPECT_EQ(unique.size(), sel.size());
      EXPECT_EQ(r.training_stream.size(), budget);
      for (auto i : r.training_stream) EXPECT_TRUE(unique.count(i));
      const auto trace = r.coverage_fraction_trace();
      for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i - 1], trace[i]);
      EXPECT_LE(coverage_fraction(r, u.universe()), 1.0);
      expect_same_result(r, select_views(pool, u, train, p));
    }
  }
}

TEST(SelectViews, RandomAndRobotTakePoolOrderByProvenance) {
  Rng rng(4);
  const auto family = fixtures::random_family(rng, 10, 30, 0.2);
  const VoxelUniverse u(family);
  auto pool = line_pool(10, 4);
  const std::vector<Posed> train{pool.candidates[0]};
  SelectionParams p;
  p.budget = 3;
  p.policy = Policy::random;
  EXPECT_EQ(select_views(pool, u, train, p).selected_indices(),
            (std::vector<std::size_t>{0, 1, 2}));
  p.policy = Policy::robot;
  EXPECT_EQ(select_views(pool, u, train, p).selected_indices(),
            (std::vector<std::size_t>{4, 5, 6}));
  p.policy = Policy::random;
  p.budget = 5;
  EXPECT_THROW(select_views(pool, u, train, p), InputError);
}

TEST(SelectViews, CoveragePolicyIgnoresNoveltyButRecordsIt) {
  const std::vector<VisibilitySet> family{ids({1, 2, 3}), ids({4, 5, 6, 7})};
  const VoxelUniverse u(family);
  auto pool = line_pool(2, 1);
  pool.candidates[1] = Posed::looking(Vec3d(5, 0, 1), 0.0);
  const std::vector<Posed> train{pool.candidates[0]};
  SelectionParams p;
  p.budget = 1;
  p.policy = Policy::coverage;
  const auto cov = select_views(pool, u, train, p);
  EXPECT_EQ(cov.steps[0].pool_index, 1u);
  EXPECT_LT(cov.steps[0].novelty_weight, 1e-5);
  p.policy = Policy::cn_coverage;
  EXPECT_EQ(select_views(pool, u, train, p).steps[0].pool_index, 0u);
}

TEST(SelectViews, InfiniteSigmaMakesCnCoverageEqualCoverage) {
  Rng rng(12);
  std::uniform_real_distribution<double> x(-2, 2), yaw(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const auto family = fixtures::random_family(rng, 40, 120, 0.06);
    const VoxelUniverse u(family);
    CandidatePool pool = line_pool(40, 20);
    for (auto& c : pool.candidates) c = Posed::looking(Vec3d(x(rng), x(rng), 1), yaw(rng));
    const std::vector<Posed> train{Posed::looking(Vec3d::Zero(), 0.0)};
    SelectionParams p;
    p.budget = 15;
    p.sigma = std::numeric_limits<double>::infinity();
    p.policy = Policy::coverage;
    const auto a = select_views(pool, u, train, p);
    p.policy = Policy::cn_coverage;
    const auto b = select_views(pool, u, train, p);
    expect_same_result(a, b);
  }
}

TEST(SelectViews, RejectsMisalignedOrOversizedInputs) {
  const std::vector<VisibilitySet> family{ids({1}), ids({2})};
  const VoxelUniverse u(family);
  const auto pool = line_pool(3, 1);
  const std::vector<Posed> train{pool.candidates[0]};
  SelectionParams p;
  p.budget = 1;
  p.policy = Policy::coverage;
  EXPECT_THROW(select_views(pool, u, train, p), InputError);
  const auto pool2 = line_pool(2, 1);
  p.budget = 3;
  EXPECT_THROW(select_views(pool2, u, train, p), InputError);
}

TEST(CoverageFraction, Examples) {
  std::vector<VisibilitySet> family{ids({1, 2}), ids({3})};
  const VoxelUniverse u(family);
  const auto pool = line_pool(2, 1);
  const std::vector<Posed> train{pool.candidates[0]};
  SelectionParams p;
  p.policy = Policy::coverage;
  p.budget = 2;
  EXPECT_EQ(coverage_fraction(select_views(pool, u, train, p), u.universe()), 1.0);
  p.budget = 0;
  EXPECT_EQ(coverage_fraction(select_views(pool, u, train, p), u.universe()), 0.0);
  EXPECT_THROW(coverage_fraction(select_views(pool, u, train, p), VisibilitySet{}), InputError);

  SelectionResult r;
  std::vector<VoxelId> covered, all;
  for (int i = 0; i < 1000; ++i) {
    all.push_back({i, 0, 0});
    if (i < 771) covered.push_back({i, 0, 0});
  }
  r.covered_union = VisibilitySet(covered);
  EXPECT_DOUBLE_EQ(coverage_fraction(r, VisibilitySet(all)), 0.771);
}
