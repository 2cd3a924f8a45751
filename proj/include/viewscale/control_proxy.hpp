#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "viewscale/geometry.hpp"
#include "viewscale/random.hpp"

namespace viewscale {

struct EpisodeConfig {
  std::size_t n_episodes = 1000;
  int horizon = 12;                  // actions
  double step_length = 0.25;         // meters
  double clearance_threshold = 1.2;  // meters
  double min_start_goal_sep = 1.5;   // meters
  double progress_success_fraction = 0.8;
  std::uint64_t seed = 0;

  double agent_height = 1.0;       // z of the planar agent, meters
  double sensor_max_range = 10.0;  // clearance cap, meters
  double free_margin = 0.25;       // required clearance around start/goal
  int max_sampling_retries = 100;
  /// Col/100 denominator: attempted actions instead of taken moves.
  bool count_attempted_steps = false;
  /// Sampling rectangle {xmin, ymin, xmax, ymax}; scene bounds when unset.
  std::optional<std::array<double, 4>> arena;

  void validate() const;
};

enum class EstimatorKind { oracle, additive_noise, multiplicative_bias, scripted };

const char* to_string(EstimatorKind kind);

/// Stand-in for a depth model's clearance prediction.
class ClearanceEstimator {
 public:
  using Script = std::map<std::pair<std::size_t, int>, double>;

  static ClearanceEstimator oracle();
  /// true + offset + N(0, sigma).
  static ClearanceEstimator additive_noise(double sigma, double offset = 0.0);
  /// true * factor.
  static ClearanceEstimator multiplicative_bias(double factor);
  /// Predictions keyed by (episode, step); unscripted steps report the true
  /// clearance.
  static ClearanceEstimator scripted(Script table);

  double predict(double true_clearance, std::size_t episode, int step,
                 RandomStream& rng) const;

  EstimatorKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double offset() const { return offset_; }
  double factor() const { return factor_; }
  const Script& script() const { return script_; }

 private:
  EstimatorKind kind_ = EstimatorKind::oracle;
  double sigma_ = 0.0;
  double offset_ = 0.0;
  double factor_ = 1.0;
  Script script_;
};

struct Move {
  double predicted_clearance = 0;
  double true_clearance = 0;
  bool taken = false;
  bool collision = false;
  double progress_gain = 0;  // reduction of goal distance, meters
};

enum class Outcome { success, fail };

struct EpisodeLog {
  std::size_t episode = 0;
  Vec3d start = Vec3d::Zero();
  Vec3d goal = Vec3d::Zero();
  std::vector<Move> moves;
  Outcome outcome = Outcome::fail;
  int steps = 0;  // taken moves
  int collisions = 0;
  int progress_moves = 0;
  int oracle_safe_moves = 0;
  bool reached_goal = false;

  int attempts() const { return static_cast<int>(moves.size()); }
  double path_ratio() const;
};

/// Distance to the nearest surface along a horizontal ray, capped at max_range.
double true_clearance(const Scene& scene, const Vec3d& position, double heading,
                      double max_range);

/// True when 16 horizontal rays all clear `margin` and none of the nearest
/// hits is a back face (which would put the point inside a solid or behind a
/// wall).
bool is_free_position(const Scene& scene, const Vec3d& position, double margin,
                      double max_range);

/// Kinematic rollout from fixed endpoints: turn toward the goal, then attempt
/// one forward step if the predicted clearance exceeds the threshold.
EpisodeLog rollout(const Scene& scene, const ClearanceEstimator& estimator,
                   const EpisodeConfig& cfg, const Vec3d& start, const Vec3d& goal,
                   std::size_t episode, RandomStream& rng);

/// Samples a start/goal pair in free space, then rolls out. Returns nullopt
/// (and sets `skip_reason`) when no valid pair is found within the retry bound.
std::optional<EpisodeLog> run_episode(const Scene& scene,
                                      const ClearanceEstimator& estimator,
                                      const EpisodeConfig& cfg, std::size_t episode,
                                      RandomStream& rng,
                                      std::string* skip_reason = nullptr);

struct MetricEstimate {
  double mean = 0;
  double ci95 = 0;          // half-width, 1.96 * stderr
  bool ci_defined = false;  // needs at least two samples
  std::size_t samples = 0;
};

struct BenchmarkMetrics {
  MetricEstimate succ;
  MetricEstimate col_per_100;
  MetricEstimate col_per_fail;
  MetricEstimate path_ratio;
  std::size_t n_episodes = 0;  // completed episodes
  std::size_t n_failed = 0;
  std::size_t n_skipped = 0;
};

MetricEstimate mean_with_ci(std::span<const double> samples);

BenchmarkMetrics aggregate_episodes(std::span<const EpisodeLog> logs,
                                    const EpisodeConfig& cfg);

struct BenchmarkRun {
  BenchmarkMetrics metrics;
  std::vector<EpisodeLog> episodes;
  std::vector<std::pair<std::size_t, std::string>> skipped;
};

/// Episode i uses the substream derive_key(seed, "episode", i).
BenchmarkRun run_benchmark(const Scene& scene, const ClearanceEstimator& estimator,
                           const EpisodeConfig& cfg);

}  // namespace viewscale
