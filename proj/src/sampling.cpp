#include "viewscale/sampling.hpp"

#include <cmath>
#include <numbers>

namespace viewscale {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void SamplerParams::validate() const {
  require(pool_size >= 1, "sampler: pool_size must be >= 1");
  require(random_fraction >= 0.0 && random_fraction <= 1.0,
          "sampler: random_fraction must lie in [0, 1]");
  for (double s : trans_sigma)
    require(s >= 0.0 && std::isfinite(s), "sampler: trans_sigma must be nonnegative");
  require(yaw_sigma_deg >= 0.0 && std::isfinite(yaw_sigma_deg),
          "sampler: yaw_sigma must be nonnegative");
  require(arc_radius_range[0] <= arc_radius_range[1] && arc_radius_range[0] >= 0.0,
          "sampler: arc_radius_range must be a nonempty nonnegative range");
  require(arc_heading_range_deg[0] <= arc_heading_range_deg[1],
          "sampler: arc_heading_range must be nonempty");
  require(arc_z_jitter >= 0.0, "sampler: arc_z_jitter must be nonnegative");
}

std::size_t SamplerParams::random_count() const {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(pool_size) * random_fraction));
}

const char* to_string(Provenance p) {
  return p == Provenance::random ? "random" : "robot";
}

Posed sample_random_candidate(const Posed& anchor, const SamplerParams& params,
                              RandomStream& rng) {
  Vec3d offset;
  for (int axis = 0; axis < 3; ++axis)
    offset[axis] = rng.normal(0.0, params.trans_sigma[axis]);
  const double dyaw = rng.normal(0.0, params.yaw_sigma_deg * kDegToRad);
  return anchor.turned(anchor.position() + offset, dyaw);
}

Posed sample_robot_candidate(const Posed& anchor, const SamplerParams& params,
                             RandomStream& rng) {
  const double radius =
      rng.uniform(params.arc_radius_range[0], params.arc_radius_range[1]);
  const double heading = rng.uniform(params.arc_heading_range_deg[0],
                                     params.arc_heading_range_deg[1]) *
                         kDegToRad;
  const double dz = rng.uniform(-params.arc_z_jitter, params.arc_z_jitter);
  const double direction = anchor.yaw() + heading;
  const Vec3d position =
      anchor.position() +
      Vec3d(radius * std::cos(direction), radius * std::sin(direction), dz);
  return anchor.turned(position, heading);
}

std::uint64_t candidate_stream_key(const std::string& scene_id,
                                   std::uint64_t seed, std::uint64_t index) {
  return fnv1a64(scene_id) ^ seed ^ index;
}

CandidatePool build_candidate_pool(std::span<const Posed> train_poses,
                                   const SamplerParams& params,
                                   const std::string& scene_id,
                                   std::uint64_t seed) {
  require(!train_poses.empty(), "build_candidate_pool: train poses are empty");
  params.validate();
  CandidatePool pool{scene_id, seed, params, {}, {}};
  pool.candidates.reserve(params.pool_size);
  pool.provenance.reserve(params.pool_size);
  const std::size_t n_random = params.random_count();
  for (std::size_t i = 0; i < params.pool_size; ++i) {
    RandomStream rng(mix64(candidate_stream_key(scene_id, seed, i)));
    const Posed& anchor = train_poses[rng.index(train_poses.size())];
    if (i < n_random) {
      pool.candidates.push_back(sample_random_candidate(anchor, params, rng));
      pool.provenance.push_back(Provenance::random);
    } else {
      pool.candidates.push_back(sample_robot_candidate(anchor, params, rng));
      pool.provenance.push_back(Provenance::robot);
    }
  }
  return pool;
}

}  // namespace viewscale
