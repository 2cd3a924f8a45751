#include "viewscale/control_proxy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace viewscale {

namespace {

constexpr double kArrivalTolerance = 1e-9;

double planar_distance(const Vec3d& a, const Vec3d& b) {
  return std::hypot(b.x() - a.x(), b.y() - a.y());
}

}  // namespace

void EpisodeConfig::validate() const {
  require(n_episodes >= 1, "episodes: n_episodes must be >= 1");
  require(horizon >= 1, "episodes: horizon must be >= 1");
  require(step_length > 0, "episodes: step_length must be positive");
  require(clearance_threshold > 0, "episodes: clearance_threshold must be positive");
  require(min_start_goal_sep > 0, "episodes: min_start_goal_sep must be positive");
  require(progress_success_fraction > 0 && progress_success_fraction <= 1,
          "episodes: progress_success_fraction must lie in (0, 1]");
  require(sensor_max_range > 0, "episodes: sensor_max_range must be positive");
  require(free_margin >= 0, "episodes: free_margin must be nonnegative");
  require(max_sampling_retries >= 1, "episodes: max_sampling_retries must be >= 1");
  if (arena)
    require((*arena)[0] < (*arena)[2] && (*arena)[1] < (*arena)[3],
            "episodes: arena must be {xmin, ymin, xmax, ymax} with min < max");
}

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::oracle: return "oracle";
    case EstimatorKind::additive_noise: return "additive_noise";
    case EstimatorKind::multiplicative_bias: return "multiplicative_bias";
    case EstimatorKind::scripted: return "scripted";
  }
  return "unknown";
}

ClearanceEstimator ClearanceEstimator::oracle() { return {}; }

ClearanceEstimator ClearanceEstimator::additive_noise(double sigma, double offset) {
  require(sigma >= 0, "estimator: noise sigma must be nonnegative");
  ClearanceEstimator e;
  e.kind_ = EstimatorKind::additive_noise;
  e.sigma_ = sigma;
  e.offset_ = offset;
  return e;
}

ClearanceEstimator ClearanceEstimator::multiplicative_bias(double factor) {
  require(factor >= 0, "estimator: bias factor must be nonnegative");
  ClearanceEstimator e;
  e.kind_ = EstimatorKind::multiplicative_bias;
  e.factor_ = factor;
  return e;
}

ClearanceEstimator ClearanceEstimator::scripted(Script table) {
  ClearanceEstimator e;
  e.kind_ = EstimatorKind::scripted;
  e.script_ = std::move(table);
  return e;
}

double ClearanceEstimator::predict(double true_clearance, std::size_t episode,
                                   int step, RandomStream& rng) const {
  switch (kind_) {
    case EstimatorKind::oracle:
      return true_clearance;
    case EstimatorKind::additive_noise:
      return true_clearance + offset_ + rng.normal(0.0, sigma_);
    case EstimatorKind::multiplicative_bias:
      return true_clearance * factor_;
    case EstimatorKind::scripted: {
      const auto it = script_.find({episode, step});
      return it == script_.end() ? true_clearance : it->second;
    }
  }
  return true_clearance;
}

double EpisodeLog::path_ratio() const {
  return static_cast<double>(progress_moves) /
         static_cast<double>(std::max(oracle_safe_moves, 1));
}

double true_clearance(const Scene& scene, const Vec3d& position, double heading,
                      double max_range) {
  const Vec3d dir(std::cos(heading), std::sin(heading), 0.0);
  const auto hit = scene.intersect(position, dir, max_range);
  return hit ? hit->t : max_range;
}

bool is_free_position(const Scene& scene, const Vec3d& position, double margin,
                      double max_range) {
  constexpr int kDirections = 16;
  for (int i = 0; i < kDirections; ++i) {
    const double heading = 2.0 * std::numbers::pi * i / kDirections;
    const Vec3d dir(std::cos(heading), std::sin(heading), 0.0);
    const auto hit = scene.intersect(position, dir, max_range);
    if (!hit) continue;
    if (hit->t <= margin || !hit->front_facing) return false;
  }
  return true;
}

EpisodeLog rollout(const Scene& scene, const ClearanceEstimator& estimator,
                   const EpisodeConfig& cfg, const Vec3d& start, const Vec3d& goal,
                   std::size_t episode, RandomStream& rng) {
  EpisodeLog log;
  log.episode = episode;
  log.start = start;
  log.goal = goal;
  Vec3d position = start;
  for (int step = 0; step < cfg.horizon; ++step) {
    const double distance = planar_distance(position, goal);
    if (distance <= kArrivalTolerance) break;
    const double heading =
        std::atan2(goal.y() - position.y(), goal.x() - position.x());
    Move move;
    move.true_clearance = true_clearance(scene, position, heading, cfg.sensor_max_range);
    move.predicted_clearance =
        estimator.predict(move.true_clearance, episode, step, rng);
    if (move.true_clearance > cfg.clearance_threshold) ++log.oracle_safe_moves;
    move.taken = move.predicted_clearance > cfg.clearance_threshold;
    if (move.taken) {
      ++log.steps;
      move.collision = move.true_clearance <= cfg.clearance_threshold;
      if (move.collision) ++log.collisions;
      const double advance = std::min(cfg.step_length, distance);
      // The body moves only if the segment itself is unobstructed.
      if (move.true_clearance > advance) {
        if (advance == distance) {
          position.x() = goal.x();
          position.y() = goal.y();
        } else {
          position.x() += advance * std::cos(heading);
          position.y() += advance * std::sin(heading);
        }
        move.progress_gain = distance - planar_distance(position, goal);
        if (move.progress_gain > 0) ++log.progress_moves;
      }
    }
    log.moves.push_back(move);
  }
  log.reached_goal = planar_distance(position, goal) <= kArrivalTolerance;
  const bool progress_ok =
      log.path_ratio() >= cfg.progress_success_fraction;
  log.outcome = (log.collisions == 0 && progress_ok) ? Outcome::success : Outcome::fail;
  return log;
}

std::optional<EpisodeLog> run_episode(const Scene& scene,
                                      const ClearanceEstimator& estimator,
                                      const EpisodeConfig& cfg, std::size_t episode,
                                      RandomStream& rng, std::string* skip_reason) {
  std::array<double, 4> area{};
  if (cfg.arena) {
    area = *cfg.arena;
  } else if (!scene.empty()) {
    const auto& b = scene.bounds();
    area = {b.min().x(), b.min().y(), b.max().x(), b.max().y()};
  } else {
    if (skip_reason) *skip_reason = "empty scene and no arena to sample from";
    return std::nullopt;
  }
  const double m = cfg.free_margin;
  if (area[2] - area[0] <= 2 * m || area[3] - area[1] <= 2 * m) {
    if (skip_reason) *skip_reason = "sampling area smaller than the free margin";
    return std::nullopt;
  }
  auto draw = [&] {
    return Vec3d(rng.uniform(area[0] + m, area[2] - m),
                 rng.uniform(area[1] + m, area[3] - m), cfg.agent_height);
  };
  for (int attempt = 0; attempt < cfg.max_sampling_retries; ++attempt) {
    const Vec3d start = draw();
    const Vec3d goal = draw();
    if (planar_distance(start, goal) < cfg.min_start_goal_sep) continue;
    if (!is_free_position(scene, start, m, cfg.sensor_max_range)) continue;
    if (!is_free_position(scene, goal, m, cfg.sensor_max_range)) continue;
    return rollout(scene, estimator, cfg, start, goal, episode, rng);
  }
  if (skip_reason)
    *skip_reason = "no free start/goal pair after " +
                   std::to_string(cfg.max_sampling_retries) + " attempts";
  return std::nullopt;
}

MetricEstimate mean_with_ci(std::span<const double> samples) {
  MetricEstimate out;
  out.samples = samples.size();
  if (samples.empty()) return out;
  double sum = 0;
  for (double x : samples) sum += x;
  out.mean = sum / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    double ss = 0;
    for (double x : samples) ss += (x - out.mean) * (x - out.mean);
    const double n = static_cast<double>(samples.size());
    out.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    out.ci_defined = true;
  }
  return out;
}

BenchmarkMetrics aggregate_episodes(std::span<const EpisodeLog> logs,
                                    const EpisodeConfig& cfg) {
  std::vector<double> succ, col100, colfail, path;
  for (const auto& log : logs) {
    succ.push_back(log.outcome == Outcome::success ? 1.0 : 0.0);
    const int denom = cfg.count_attempted_steps ? log.attempts() : log.steps;
    col100.push_back(100.0 * log.collisions / std::max(denom, 1));
    path.push_back(log.path_ratio());
    if (log.outcome == Outcome::fail) colfail.push_back(log.collisions);
  }
  BenchmarkMetrics m;
  m.succ = mean_with_ci(succ);
  m.col_per_100 = mean_with_ci(col100);
  m.col_per_fail = mean_with_ci(colfail);
  m.path_ratio = mean_with_ci(path);
  m.n_episodes = logs.size();
  m.n_failed = colfail.size();
  return m;
}

BenchmarkRun run_benchmark(const Scene& scene, const ClearanceEstimator& estimator,
                           const EpisodeConfig& cfg) {
  cfg.validate();
  BenchmarkRun run;
  run.episodes.reserve(cfg.n_episodes);
  const std::uint64_t tag = fnv1a64("episode");
  for (std::size_t i = 0; i < cfg.n_episodes; ++i) {
    RandomStream rng(derive_key(cfg.seed, tag, i));
    std::string reason;
    if (auto log = run_episode(scene, estimator, cfg, i, rng, &reason)) {
      run.episodes.push_back(std::move(*log));
    } else {
      run.skipped.emplace_back(i, reason);
    }
  }
  run.metrics = aggregate_episodes(run.episodes, cfg);
  run.metrics.n_skipped = run.skipped.size();
  return run;
}

}  // namespace viewscale
