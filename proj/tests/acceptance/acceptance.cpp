// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "viewscale/config.hpp"
#include "viewscale/control_proxy.hpp"
#include "viewscale/diagnostics.hpp"
#include "viewscale/gating.hpp"
#include "viewscale/io.hpp"
#include "viewscale/pipeline.hpp"
#include "viewscale/sampling.hpp"
#include "viewscale/scene_io.hpp"
#include "viewscale/selection.hpp"

using namespace viewscale;

namespace {

using Clock = std::chrono::steady_clock;
using Rng = std::mt19937_64;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  if (!v.pass) ++failures;
  std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

std::vector<VisibilitySet> random_family(Rng& rng, std::size_t sets, int universe, double p) {
  std::bernoulli_distribution keep(p);
  std::vector<VisibilitySet> out;
  for (std::size_t i = 0; i < sets; ++i) {
    std::vector<VoxelId> ids;
    for (int v = 0; v < universe; ++v)
      if (keep(rng)) ids.push_back({v, 0, 0});
    out.emplace_back(std::move(ids));
  }
  return out;
}

std::vector<Posed> random_poses(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> xy(-1.5, 1.5), yaw(-std::numbers::pi, std::numbers::pi);
  std::vector<Posed> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(Posed::looking(Vec3d(xy(rng), xy(rng), 1.0), yaw(rng)));
  return out;
}

// Weighted coverage: each voxel counts the best weight among chosen sets that
// contain it. Equals the sum of gain * weight along the best ordering of S.
double weighted_value(const std::vector<VisibilitySet>& family, const std::vector<double>& w,
                      const std::vector<std::size_t>& chosen) {
  std::map<VoxelId, double> best;
  for (auto i : chosen)
    for (const auto& v : family[i]) best[v] = std::max(best[v], w[i]);
  double total = 0;
  for (const auto& [v, x] : best) total += x;
  return total;
}

// Exhaustive maximum over all subsets of exactly k sets.
double exhaustive_best(std::size_t n, std::size_t k,
                       const std::function<double(const std::vector<std::size_t>&)>& f) {
  double best = 0;
  std::vector<std::size_t> idx(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == k) {
      best = std::max(best, f(idx));
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

std::vector<std::size_t> picked(const std::vector<SelectionStep>& steps) {
  std::vector<std::size_t> out;
  for (const auto& s : steps) out.push_back(s.pool_index);
  return out;
}

bool same_steps(const std::vector<SelectionStep>& a, const std::vector<SelectionStep>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].pool_index != b[i].pool_index || a[i].gain != b[i].gain || a[i].score != b[i].score)
      return false;
  return true;
}

// Upper alpha point of chi-square(k) by the Wilson-Hilferty cube approximation.
double chi2_critical(double k, double z) {
  const double h = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - h + z * std::sqrt(h), 3.0);
}

double enumeration_p(const std::vector<double>& deltas) {
  std::vector<double> nz;
  for (double d : deltas)
    if (d != 0) nz.push_back(d);
  const std::size_t n = nz.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += std::abs(nz[j]) < std::abs(nz[i]);
      equal += std::abs(nz[j]) == std::abs(nz[i]);
    }
    ranks[i] = less + (equal + 1) / 2;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0) observed += ranks[i];
  std::size_t le = 0, ge = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) w += ranks[i];
    le += w <= observed + 1e-9;
    ge += w >= observed - 1e-9;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total));
}

// Demo-room pool shared by the throughput, resampling and sweep checks.
struct DemoPool {
  RunConfig config;
  Scene scene;
  std::vector<Posed> train;
  CandidatePool pool;
  std::vector<VisibilitySet> sets;
  double extract_s = 0;
};

DemoPool make_demo_pool() {
  DemoPool d;
  d.config.threads = 1;
  d.scene = load_scene(d.config);
  d.train = load_train_poses(d.config);
  const auto t0 = Clock::now();
  d.pool = build_candidate_pool(d.train, d.config.sampler, d.scene.id(), d.config.seed);
  d.sets = extract_visibility(d.scene, d.config.intrinsics, d.pool.candidates,
                              d.config.coverage, 1);
  d.extract_s = seconds_since(t0);
  return d;
}

}  // namespace

int main() {
  report(1, "greedy near-optimality", [] {
    Verdict v;
    const auto t0 = Clock::now();
    const double bound = 1.0 - std::exp(-1.0);
    double worst_plain = 1, worst_cn = 1;
    Rng rng(20240601);
    std::uniform_int_distribution<int> n_dist(6, 15), u_dist(16, 64), k_dist(2, 4);
    std::uniform_real_distribution<double> p_dist(0.05, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto n = static_cast<std::size_t>(n_dist(rng));
      const auto k = static_cast<std::size_t>(k_dist(rng));
      const auto family = random_family(rng, n, u_dist(rng), p_dist(rng));
      const VoxelUniverse u(family);
      const std::vector<double> ones(n, 1.0);
      const auto plain = picked(lazy_greedy(u, ones, k));
      const double opt = exhaustive_best(n, k, [&](const auto& s) {
        return weighted_value(family, ones, s);
      });
      if (opt > 0) worst_plain = std::min(worst_plain, weighted_value(family, ones, plain) / opt);

      // CN weights from real novelty distances to a small train set.
      const auto train = random_poses(rng, 3);
      CandidatePool pool;
      pool.candidates = random_poses(rng, n);
      pool.provenance.assign(n, Provenance::random);
      const auto pi = novelty_weights(pool, train, SelectionParams{});
      const auto cn = picked(lazy_greedy(u, pi, k));
      const double opt_w = exhaustive_best(n, k, [&](const auto& s) {
        return weighted_value(family, pi, s);
      });
      if (opt_w > 0) worst_cn = std::min(worst_cn, weighted_value(family, pi, cn) / opt_w);
    }
    const double elapsed = seconds_since(t0);
    v.check(worst_plain >= bound, "coverage ratio " + fmt(worst_plain) + " < 0.632");
    v.check(worst_cn >= bound, "weighted ratio " + fmt(worst_cn) + " < 0.632");
    v.check(elapsed < 10.0, "runtime " + fmt(elapsed) + " s >= 10 s");
    if (v.pass)
      v.detail = "worst coverage ratio " + fmt(worst_plain) + ", worst weighted ratio " +
                 fmt(worst_cn) + " over 50 instances, " + fmt(elapsed, 3) + " s";
    return v;
  });

  report(2, "lazy-greedy exactness", [] {
    Verdict v;
    const auto t0 = Clock::now();
    Rng rng(77);
    std::uniform_real_distribution<double> w(0.01, 1.0);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 10 + static_cast<std::size_t>(trial) * 10;  // up to 1000
      const auto family = random_family(rng, n, 3000, 60.0 / 3000.0);
      const VoxelUniverse u(family);
      std::vector<double> weights(n, 1.0);
      if (trial % 2 == 1)
        for (auto& x : weights) x = w(rng);
      const std::size_t count = std::min<std::size_t>(n, 500);
      if (!same_steps(lazy_greedy(u, weights, count), naive_greedy(u, weights, count)))
        ++mismatches;
    }
    const double elapsed = seconds_since(t0);
    v.check(mismatches == 0, std::to_string(mismatches) + " of 100 instances differ");
    v.check(elapsed < 60.0, "runtime " + fmt(elapsed) + " s >= 60 s");
    if (v.pass) v.detail = "100 instances identical, " + fmt(elapsed, 3) + " s";
    return v;
  });

  // Built once; criteria 3, 5 and 10 share it.
  const DemoPool demo = make_demo_pool();

  report(3, "selection throughput", [&] {
    Verdict v;
    const VoxelUniverse u(demo.sets);
    SelectionParams p;
    p.policy = Policy::cn_coverage;
    p.budget = 500;
    p.seed = demo.config.seed;
    auto t0 = Clock::now();
    const auto result = select_views(demo.pool, u, demo.train, p);
    const double lazy_s = seconds_since(t0);
    const double total_s = demo.extract_s + lazy_s;
    const auto pi = novelty_weights(demo.pool, demo.train, p);
    t0 = Clock::now();
    const auto naive = naive_greedy(u, pi, 500);
    const double naive_s = seconds_since(t0);
    t0 = Clock::now();
    const auto lazy = lazy_greedy(u, pi, 500);
    const double lazy_kernel_s = seconds_since(t0);
    v.check(result.steps.size() == 500, "selected " + std::to_string(result.steps.size()));
    v.check(same_steps(naive, lazy), "lazy and naive disagree");
    v.check(total_s <= 5.0, "total " + fmt(total_s) + " s > 5 s");
    const double speedup = naive_s / std::max(lazy_kernel_s, 1e-9);
    v.check(speedup >= 2.0, "lazy speedup " + fmt(speedup) + "x < 2x");
    if (v.pass)
      v.detail = "1000 candidates, voxel extract " + fmt(demo.extract_s, 3) + " s + select " +
                 fmt(lazy_s, 3) + " s = " + fmt(total_s, 3) + " s single-threaded; lazy " +
                 fmt(speedup, 3) + "x faster than naive";
    return v;
  });

  report(4, "gate exactness", [] {
    Verdict v;
    v.check(std::abs(gate_probability(1.0) - 0.5) <= 1e-12, "g(1) != 0.5");
    v.check(scene_quality_score(10.0, 0.20, 0.80) == 1.0, "q_s(10, 0.2, 0.8) != 1");
    Rng rng(4);
    std::uniform_real_distribution<double> q(-1.0, 4.0);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
      double a = q(rng), b = q(rng);
      if (a > b) std::swap(a, b);
      if (gate_probability(a) > gate_probability(b)) ++violations;
    }
    v.check(violations == 0, std::to_string(violations) + " monotonicity violations");
    if (v.pass) v.detail = "g(1) = 0.5, q_s = 1 exactly, 1000 monotone pairs";
    return v;
  });

  report(5, "resampling regime", [&] {
    Verdict v;
    const VoxelUniverse u(demo.sets);
    SelectionParams p;
    p.policy = Policy::cn_coverage;
    p.budget = 2000;
    p.unique_cap = 500;
    p.seed = demo.config.seed;
    const auto r = select_views(demo.pool, u, demo.train, p);
    const std::set<std::size_t> unique(r.training_stream.begin(), r.training_stream.end());
    v.check(r.training_stream.size() == 2000,
            "stream length " + std::to_string(r.training_stream.size()));
    v.check(unique.size() <= 500, std::to_string(unique.size()) + " unique indices");
    // Tail draws are positions into the 500 selections.
    const auto selected = r.selected_indices();
    std::map<std::size_t, std::size_t> slot;
    for (std::size_t i = 0; i < selected.size(); ++i) slot[selected[i]] = i;
    std::vector<double> counts(selected.size(), 0.0);
    for (std::size_t i = selected.size(); i < r.training_stream.size(); ++i)
      counts[slot.at(r.training_stream[i])] += 1;
    const double expected = 1500.0 / static_cast<double>(selected.size());
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double crit = chi2_critical(static_cast<double>(selected.size() - 1), 2.3263478740);
    v.check(chi2 < crit, "chi-square " + fmt(chi2) + " >= " + fmt(crit));
    if (v.pass)
      v.detail = "length 2000, " + std::to_string(unique.size()) + " unique, chi-square " +
                 fmt(chi2) + " < " + fmt(crit) + " (alpha 0.01)";
    return v;
  });

  report(6, "novelty distance", [] {
    Verdict v;
    const std::vector<Posed> train{Posed::looking(Vec3d::Zero(), -0.75 * std::numbers::pi)};
    const double d = novelty_distance(Posed::looking(Vec3d::Zero(), 0.75 * std::numbers::pi),
                                      train, 0.2);
    v.check(std::abs(d - 0.2 * std::numbers::pi / 2) <= 1e-12, "wrap case gives " + fmt(d, 17));
    const std::vector<Posed> one{Posed::looking(Vec3d(1, 1, 1), 0.2)};
    const double moved = novelty_distance(Posed::looking(Vec3d(1.3, 1.4, 1), 0.7), one, 0.2);
    v.check(std::abs(moved - 0.6) <= 1e-12, "translation case gives " + fmt(moved, 17));
    Rng rng(6);
    int differ = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto family = random_family(rng, 60, 200, 0.05);
      const VoxelUniverse u(family);
      CandidatePool pool;
      pool.candidates = random_poses(rng, 60);
      pool.provenance.assign(60, Provenance::random);
      const auto train_poses = random_poses(rng, 4);
      SelectionParams p;
      p.budget = 20;
      p.sigma = std::numeric_limits<double>::infinity();
      p.policy = Policy::coverage;
      const auto a = select_views(pool, u, train_poses, p);
      p.policy = Policy::cn_coverage;
      const auto b = select_views(pool, u, train_poses, p);
      if (!same_steps(a.steps, b.steps) || a.training_stream != b.training_stream) ++differ;
    }
    v.check(differ == 0, std::to_string(differ) + " of 20 sigma=inf instances differ");
    if (v.pass) v.detail = "wrap and translation cases to 1e-12, 20 sigma=inf instances equal";
    return v;
  });

  report(7, "control-proxy oracle property", [&] {
    Verdict v;
    const auto t0 = Clock::now();
    EpisodeConfig cfg = demo.config.episodes;
    cfg.n_episodes = 1000;
    const auto a = run_benchmark(demo.scene, ClearanceEstimator::oracle(), cfg);
    const auto b = run_benchmark(demo.scene, ClearanceEstimator::oracle(), cfg);
    const double elapsed = seconds_since(t0) / 2;
    int collisions = 0;
    for (const auto& e : a.episodes) collisions += e.collisions;
    v.check(collisions == 0, std::to_string(collisions) + " collisions");
    v.check(a.metrics.n_episodes + a.metrics.n_skipped == 1000, "episode count mismatch");
    v.check(dump(benchmark_to_json(a)) == dump(benchmark_to_json(b)), "rerun JSON differs");
    v.check(elapsed < 30.0, "runtime " + fmt(elapsed) + " s >= 30 s");
    if (v.pass)
      v.detail = std::to_string(a.metrics.n_episodes) + " episodes, 0 collisions, succ " +
                 fmt(a.metrics.succ.mean) + ", identical rerun JSON, " + fmt(elapsed, 3) +
                 " s per run";
    return v;
  });

  report(8, "stability-summary cross-check", [] {
    Verdict v;
    const auto s = stability_summary({{0, 0.31}, {25, 0.28}, {50, 0.40}, {100, 0.36},
                                      {200, 0.31}, {500, 0.31}, {1000, 0.33}, {2000, 0.32}});
    v.check(std::abs(s.mean - 0.317) <= 0.01, "mean " + fmt(s.mean));
    v.check(std::abs(s.worst - 0.328) <= 0.01, "worst " + fmt(s.worst));
    v.check(std::abs(s.range - 0.020) <= 0.01, "range " + fmt(s.range));
    if (v.pass)
      v.detail = "mean " + fmt(s.mean) + ", worst " + fmt(s.worst) + ", range " + fmt(s.range) +
                 " vs 0.317 / 0.328 / 0.020";
    return v;
  });

  report(9, "wilcoxon oracle", [] {
    Verdict v;
    Rng rng(9);
    std::uniform_int_distribution<int> len(1, 12), val(-8, 8);
    std::normal_distribution<double> cont(0.2, 1.0);
    int trials = 0, mismatches = 0;
    double worst = 0;
    for (int t = 0; t < 400; ++t) {
      std::vector<double> d(static_cast<std::size_t>(len(rng)));
      for (auto& x : d) x = t % 2 == 0 ? val(rng) * 0.25 : cont(rng);
      const auto r = paired_wilcoxon(d);
      if (r.degenerate) continue;
      ++trials;
      const double err = std::abs(r.p_value - enumeration_p(d));
      worst = std::max(worst, err);
      if (!r.exact || err > 1e-12) ++mismatches;
    }
    v.check(trials >= 200, "only " + std::to_string(trials) + " trials");
    v.check(mismatches == 0, std::to_string(mismatches) + " mismatches");
    if (v.pass)
      v.detail = std::to_string(trials) + " trials, max |p - oracle| " + fmt(worst, 3);
    return v;
  });

  report(10, "coverage-fraction sanity", [&] {
    Verdict v;
    const VoxelUniverse u(demo.sets);
    int sweeps = 0;
    for (auto policy : demo.config.policies) {
      double previous = -1;
      for (auto n : demo.config.budgets) {
        SelectionParams p = demo.config.selection;
        p.policy = policy;
        p.budget = n;
        p.seed = demo.config.seed;
        const double f = coverage_fraction(select_views(demo.pool, u, demo.train, p), u.universe());
        const std::string at = std::string(to_string(policy)) + " N=" + std::to_string(n);
        v.check(f >= previous, at + " decreased to " + fmt(f));
        v.check(f <= 1.0, at + " above 1");
        previous = f;
      }
      ++sweeps;
    }
    if (v.pass)
      v.detail = std::to_string(sweeps) + " policies nondecreasing and <= 1 over " +
                 std::to_string(demo.config.budgets.size()) + " budgets";
    return v;
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
