#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "viewscale/geometry.hpp"
#include "viewscale/random.hpp"

namespace viewscale {

struct SamplerParams {
  std::array<double, 3> trans_sigma{0.12, 0.12, 0.05};  // meters
  double yaw_sigma_deg = 10.0;
  std::array<double, 2> arc_radius_range{0.15, 0.35};      // meters
  std::array<double, 2> arc_heading_range_deg{-45.0, 45.0};
  double arc_z_jitter = 0.05;  // meters, uniform on [-z, z]
  std::size_t pool_size = 1000;
  double random_fraction = 0.5;

  void validate() const;
  /// Number of random-jitter candidates, round(pool_size * random_fraction).
  std::size_t random_count() const;
};

enum class Provenance { random, robot };

const char* to_string(Provenance p);

/// Train anchor + Gaussian translation jitter + Gaussian yaw jitter.
Posed sample_random_candidate(const Posed& anchor, const SamplerParams& params,
                              RandomStream& rng);

/// Planar arc offset of radius U[range] at heading anchor.yaw + U[range],
/// uniform z jitter; the result faces along the displaced heading.
Posed sample_robot_candidate(const Posed& anchor, const SamplerParams& params,
                             RandomStream& rng);

struct CandidatePool {
  std::string scene_id;
  std::uint64_t seed = 0;
  SamplerParams params;
  std::vector<Posed> candidates;
  std::vector<Provenance> provenance;

  std::size_t size() const { return candidates.size(); }
};

/// Stream key for candidate `index`: fnv1a64(scene_id) ^ seed ^ index.
std::uint64_t candidate_stream_key(const std::string& scene_id,
                                   std::uint64_t seed, std::uint64_t index);

/// The first random_count() candidates are random-jitter samples, the rest
/// robot-arc samples. Candidate i draws its anchor (uniform over train
/// poses) and its offsets from its own stream.
CandidatePool build_candidate_pool(std::span<const Posed> train_poses,
                                   const SamplerParams& params,
                                   const std::string& scene_id,
                                   std::uint64_t seed);

}  // namespace viewscale
