#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "viewscale/geometry.hpp"

namespace viewscale {

/// Camera-z depth map. depth(v, u) == 0 wherever the pixel is invalid.
struct DepthImage {
  Eigen::MatrixXd depth;  // rows = height, cols = width
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid;

  int width() const { return static_cast<int>(depth.cols()); }
  int height() const { return static_cast<int>(depth.rows()); }
  Eigen::Index valid_count() const { return valid.count(); }
};

/// Renders camera-z depth by casting one ray per pixel and keeping the nearest
/// surface. A pixel is valid when a surface lies within `max_range` meters of
/// the camera center along its ray.
DepthImage render_depth(const Scene& scene, const Intrinsicsd& intrinsics,
                        const Posed& pose, double max_range);

struct CoverageParams {
  double voxel_size = 0.10;  // meters
  int depth_stride = 12;     // pixels
  double max_range = 4.0;    // meters

  void validate() const;
};

struct VoxelId {
  std::int32_t x = 0, y = 0, z = 0;

  friend auto operator<=>(const VoxelId&, const VoxelId&) = default;
};

VoxelId voxel_of(const Vec3d& point, double voxel_size);

/// Sorted, duplicate-free set of voxel ids.
class VisibilitySet {
 public:
  VisibilitySet() = default;
  /// Sorts and deduplicates.
  explicit VisibilitySet(std::vector<VoxelId> voxels);

  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }
  bool contains(const VoxelId& id) const;
  const std::vector<VoxelId>& voxels() const { return voxels_; }
  auto begin() const { return voxels_.begin(); }
  auto end() const { return voxels_.end(); }

  void unite(const VisibilitySet& other);
  /// Number of ids in this set that are not in `other`.
  std::size_t count_not_in(const VisibilitySet& other) const;

  friend bool operator==(const VisibilitySet&, const VisibilitySet&) = default;

 private:
  std::vector<VoxelId> voxels_;
};

VisibilitySet set_union(std::span<const VisibilitySet> sets);

/// Backprojects valid pixels on the stride grid (phase 0 in both axes) and
/// quantizes the world points into voxels.
VisibilitySet visibility_set(const DepthImage& depth,
                             const Intrinsicsd& intrinsics, const Posed& pose,
                             const CoverageParams& params);

/// render_depth followed by visibility_set, casting rays only on the stride
/// grid. Produces the same set as the two-step path.
VisibilitySet visible_voxels(const Scene& scene, const Intrinsicsd& intrinsics,
                             const Posed& pose, const CoverageParams& params);

/// |union of sets|.
std::size_t coverage_value(std::span<const VisibilitySet> sets);

/// Voxel sets re-expressed as dense integer ids over the union of a family.
/// This is the working representation for the selection loops.
class VoxelUniverse {
 public:
  explicit VoxelUniverse(std::span<const VisibilitySet> sets);

  std::size_t universe_size() const { return universe_.size(); }
  std::size_t set_count() const { return members_.size(); }
  std::span<const std::uint32_t> members(std::size_t set) const {
    return members_[set];
  }
  const VisibilitySet& universe() const { return universe_; }
  VisibilitySet to_set(std::span<const std::uint32_t> dense_ids) const;

 private:
  VisibilitySet universe_;
  std::vector<std::vector<std::uint32_t>> members_;
};

}  // namespace viewscale
