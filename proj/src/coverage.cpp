#include "viewscale/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace viewscale {

namespace {

void check_pose_inputs(const Intrinsicsd& intrinsics, const Posed& pose,
                       double max_range) {
  intrinsics.validate();
  require(pose.position().allFinite() && pose.orientation().coeffs().allFinite(),
          "render: pose must be finite");
  require(max_range > 0 && !std::isnan(max_range), "render: max_range must be positive");
}

// Camera-z depth along the pixel ray, or 0 when nothing is hit in range.
double cast_pixel(const Scene& scene, const Intrinsicsd& intrinsics,
                  const Eigen::Matrix3d& rotation, const Vec3d& center, int u,
                  int v, double max_range) {
  const Vec3d ray_cam = intrinsics.ray(u, v);
  const Vec3d dir = rotation * ray_cam;
  // With unit camera-z, the ray parameter is the camera-z depth.
  const double t_max = max_range / ray_cam.norm();
  const auto hit = scene.intersect(center, dir, t_max);
  return hit ? hit->t : 0.0;
}

Vec3d backproject(const Intrinsicsd& intrinsics, const Eigen::Matrix3d& rotation,
                  const Vec3d& center, int u, int v, double depth) {
  return rotation * (intrinsics.ray(u, v) * depth) + center;
}

}  // namespace

DepthImage render_depth(const Scene& scene, const Intrinsicsd& intrinsics,
                        const Posed& pose, double max_range) {
  check_pose_inputs(intrinsics, pose, max_range);
  DepthImage image;
  image.depth = Eigen::MatrixXd::Zero(intrinsics.height, intrinsics.width);
  image.valid.setConstant(intrinsics.height, intrinsics.width, false);
  if (scene.empty()) return image;

  const Eigen::Matrix3d rotation = pose.rotation();
  for (int v = 0; v < intrinsics.height; ++v) {
    for (int u = 0; u < intrinsics.width; ++u) {
      const double d =
          cast_pixel(scene, intrinsics, rotation, pose.position(), u, v, max_range);
      if (d > 0.0) {
        image.depth(v, u) = d;
        image.valid(v, u) = true;
      }
    }
  }
  return image;
}

void CoverageParams::validate() const {
  require(voxel_size > 0 && std::isfinite(voxel_size),
          "coverage: voxel_size must be positive");
  require(depth_stride >= 1, "coverage: depth_stride must be >= 1");
  require(max_range > 0 && !std::isnan(max_range),
          "coverage: max_range must be positive");
}

VoxelId voxel_of(const Vec3d& point, double voxel_size) {
  return {static_cast<std::int32_t>(std::floor(point.x() / voxel_size)),
          static_cast<std::int32_t>(std::floor(point.y() / voxel_size)),
          static_cast<std::int32_t>(std::floor(point.z() / voxel_size))};
}

VisibilitySet::VisibilitySet(std::vector<VoxelId> voxels)
    : voxels_(std::move(voxels)) {
  std::sort(voxels_.begin(), voxels_.end());
  voxels_.erase(std::unique(voxels_.begin(), voxels_.end()), voxels_.end());
}

bool VisibilitySet::contains(const VoxelId& id) const {
  return std::binary_search(voxels_.begin(), voxels_.end(), id);
}

void VisibilitySet::unite(const VisibilitySet& other) {
  std::vector<VoxelId> merged;
  merged.reserve(voxels_.size() + other.voxels_.size());
  std::set_union(voxels_.begin(), voxels_.end(), other.voxels_.begin(),
                 other.voxels_.end(), std::back_inserter(merged));
  voxels_ = std::move(merged);
}

std::size_t VisibilitySet::count_not_in(const VisibilitySet& other) const {
  std::size_t count = 0;
  auto it = other.voxels_.begin();
  for (const auto& id : voxels_) {
    it = std::lower_bound(it, other.voxels_.end(), id);
    if (it == other.voxels_.end() || *it != id) ++count;
  }
  return count;
}

VisibilitySet set_union(std::span<const VisibilitySet> sets) {
  std::vector<VoxelId> all;
  for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
  return VisibilitySet(std::move(all));
}

VisibilitySet visibility_set(const DepthImage& depth,
                             const Intrinsicsd& intrinsics, const Posed& pose,
                             const CoverageParams& params) {
  params.validate();
  intrinsics.validate();
  require(depth.width() == intrinsics.width && depth.height() == intrinsics.height,
          "visibility_set: depth image does not match intrinsics");
  const Eigen::Matrix3d rotation = pose.rotation();
  std::vector<VoxelId> ids;
  for (int v = 0; v < depth.height(); v += params.depth_stride) {
    for (int u = 0; u < depth.width(); u += params.depth_stride) {
      if (!depth.valid(v, u)) continue;
      const Vec3d p =
          backproject(intrinsics, rotation, pose.position(), u, v, depth.depth(v, u));
      ids.push_back(voxel_of(p, params.voxel_size));
    }
  }
  return VisibilitySet(std::move(ids));
}

VisibilitySet visible_voxels(const Scene& scene, const Intrinsicsd& intrinsics,
                             const Posed& pose, const CoverageParams& params) {
  params.validate();
  check_pose_inputs(intrinsics, pose, params.max_range);
  if (scene.empty()) return {};
  const Eigen::Matrix3d rotation = pose.rotation();
  std::vector<VoxelId> ids;
  for (int v = 0; v < intrinsics.height; v += params.depth_stride) {
    for (int u = 0; u < intrinsics.width; u += params.depth_stride) {
      const double d = cast_pixel(scene, intrinsics, rotation, pose.position(),
                                  u, v, params.max_range);
      if (d <= 0.0) continue;
      const Vec3d p = backproject(intrinsics, rotation, pose.position(), u, v, d);
      ids.push_back(voxel_of(p, params.voxel_size));
    }
  }
  return VisibilitySet(std::move(ids));
}

std::size_t coverage_value(std::span<const VisibilitySet> sets) {
  return set_union(sets).size();
}

VoxelUniverse::VoxelUniverse(std::span<const VisibilitySet> sets)
    : universe_(set_union(sets)) {
  members_.reserve(sets.size());
  const auto& all = universe_.voxels();
  for (const auto& s : sets) {
    std::vector<std::uint32_t> dense;
    dense.reserve(s.size());
    auto it = all.begin();
    for (const auto& id : s) {
      it = std::lower_bound(it, all.end(), id);
      dense.push_back(static_cast<std::uint32_t>(it - all.begin()));
    }
    members_.push_back(std::move(dense));
  }
}

VisibilitySet VoxelUniverse::to_set(std::span<const std::uint32_t> dense_ids) const {
  std::vector<VoxelId> ids;
  ids.reserve(dense_ids.size());
  for (const auto i : dense_ids) ids.push_back(universe_.voxels()[i]);
  return VisibilitySet(std::move(ids));
}

}  // namespace viewscale
