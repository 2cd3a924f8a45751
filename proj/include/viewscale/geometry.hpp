#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "viewscale/error.hpp"

namespace viewscale {

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = std::remainder(angle, Scalar(2) * pi);
  if (r <= -pi) r += Scalar(2) * pi;
  return r;
}

/// Heading of the optical axis (camera +z) projected onto the world xy-plane,
/// measured from world +x about world +z. Zero when the axis is vertical.
template <typename Scalar>
Scalar yaw_of(const Eigen::Quaternion<Scalar>& q) {
  const Scalar fx = Scalar(2) * (q.x() * q.z() + q.w() * q.y());
  const Scalar fy = Scalar(2) * (q.y() * q.z() - q.w() * q.x());
  return wrap_angle(std::atan2(fy, fx));
}

/// Camera extrinsics: camera center in the world frame plus camera-to-world
/// orientation. Camera axes follow the RGB-D convention (x right, y down,
/// z forward).
template <typename Scalar>
class Pose {
 public:
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Quat = Eigen::Quaternion<Scalar>;

  Pose() : position_(Vec3::Zero()), orientation_(Quat::Identity()) {}

  Pose(const Vec3& position, const Quat& orientation)
      : position_(position), orientation_(orientation) {
    require(position_.allFinite(), "pose position must be finite");
    require(orientation_.coeffs().allFinite(), "pose orientation must be finite");
    const Scalar n2 = orientation_.squaredNorm();
    require(n2 > Scalar(0), "pose orientation must be a nonzero quaternion");
    if (std::abs(n2 - Scalar(1)) > Scalar(4) * Eigen::NumTraits<Scalar>::epsilon())
      orientation_.normalize();
    yaw_ = yaw_of(orientation_);
  }

  /// Upright camera (image y pointing down the world z axis) whose optical
  /// axis has heading `yaw` and elevation `pitch` (positive looks up).
  static Pose looking(const Vec3& position, Scalar yaw, Scalar pitch = 0) {
    const Vec3 forward(std::cos(pitch) * std::cos(yaw),
                       std::cos(pitch) * std::sin(yaw), std::sin(pitch));
    const Vec3 right(std::sin(yaw), -std::cos(yaw), Scalar(0));
    Mat3 r;
    r.col(0) = right;
    r.col(1) = forward.cross(right);
    r.col(2) = forward;
    return Pose(position, Quat(r));
  }

  const Vec3& position() const { return position_; }
  const Quat& orientation() const { return orientation_; }
  Scalar yaw() const { return yaw_; }
  Mat3 rotation() const { return orientation_.toRotationMatrix(); }

  /// Same pose rotated about the world up axis by `delta` radians and moved
  /// to `position`. Roll and pitch are unchanged.
  Pose turned(const Vec3& position, Scalar delta) const {
    const Quat rz(Eigen::AngleAxis<Scalar>(delta, Vec3::UnitZ()));
    return Pose(position, rz * orientation_);
  }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.position_ == b.position_ &&
           a.orientation_.coeffs() == b.orientation_.coeffs();
  }

 private:
  Vec3 position_;
  Quat orientation_;
  Scalar yaw_ = 0;
};

template <typename Scalar>
struct Intrinsics {
  Scalar fx = 0, fy = 0;
  Scalar cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    require(std::isfinite(fx) && std::isfinite(fy) && fx > 0 && fy > 0,
            "intrinsics: focal lengths must be positive");
    require(width > 0 && height > 0, "intrinsics: image size must be positive");
    require(cx >= 0 && cx < width && cy >= 0 && cy < height,
            "intrinsics: principal point must lie inside the image");
  }

  /// Camera-frame ray direction through pixel (u, v), with unit z.
  Eigen::Matrix<Scalar, 3, 1> ray(int u, int v) const {
    return {(Scalar(u) - cx) / fx, (Scalar(v) - cy) / fy, Scalar(1)};
  }

  /// TUM freiburg1 RGB-D defaults.
  static Intrinsics tum_freiburg1() {
    return {Scalar(517.3), Scalar(516.5), Scalar(318.6), Scalar(255.3), 640, 480};
  }
};

using Posed = Pose<double>;
using Intrinsicsd = Intrinsics<double>;
using Vec3d = Eigen::Vector3d;

struct Triangle {
  Vec3d a, b, c;
};

template <typename Scalar>
struct TriangleHit {
  Scalar t;
  bool front_facing;
};

/// Ray/triangle intersection for t in (t_min, t_max]. Barycentric inside test
/// follows Moller-Trumbore; t comes from the plane equation so that planes
/// aligned with the ray grid report exact distances. Both faces are hit.
template <typename Scalar>
std::optional<TriangleHit<Scalar>> intersect_triangle(
    const Eigen::Matrix<Scalar, 3, 1>& origin,
    const Eigen::Matrix<Scalar, 3, 1>& dir,
    const Eigen::Matrix<Scalar, 3, 1>& a, const Eigen::Matrix<Scalar, 3, 1>& b,
    const Eigen::Matrix<Scalar, 3, 1>& c, Scalar t_min, Scalar t_max) {
  const Eigen::Matrix<Scalar, 3, 1> e1 = b - a;
  const Eigen::Matrix<Scalar, 3, 1> e2 = c - a;
  const Eigen::Matrix<Scalar, 3, 1> p = dir.cross(e2);
  const Scalar det = e1.dot(p);
  if (det == Scalar(0)) return std::nullopt;
  const Scalar inv_det = Scalar(1) / det;
  const Eigen::Matrix<Scalar, 3, 1> s = origin - a;
  const Scalar u = s.dot(p) * inv_det;
  if (u < Scalar(0) || u > Scalar(1)) return std::nullopt;
  const Eigen::Matrix<Scalar, 3, 1> q = s.cross(e1);
  const Scalar v = dir.dot(q) * inv_det;
  if (v < Scalar(0) || u + v > Scalar(1)) return std::nullopt;

  const Eigen::Matrix<Scalar, 3, 1> n = e1.cross(e2);
  const Scalar denom = n.dot(dir);
  if (denom == Scalar(0)) return std::nullopt;
  const Scalar t = n.dot(a - origin) / denom;
  if (!(t > t_min) || t > t_max) return std::nullopt;
  return TriangleHit<Scalar>{t, denom < Scalar(0)};
}

struct RayHit {
  double t = 0;
  std::size_t triangle = 0;
  bool front_facing = true;
};

class MeshIndex;

/// Immutable triangle scene with a bounding-volume hierarchy built at
/// construction. Copies share the acceleration structure.
class Scene {
 public:
  Scene() = default;
  Scene(std::string id, std::vector<Triangle> triangles);

  const std::string& id() const { return id_; }
  const std::vector<Triangle>& triangles() const;
  const Eigen::AlignedBox3d& bounds() const { return bounds_; }
  bool empty() const { return triangles().empty(); }

  /// Nearest hit with t in (t_min, t_max]; equal t resolves to the lowest
  /// triangle index. Uses the BVH.
  std::optional<RayHit> intersect(const Vec3d& origin, const Vec3d& dir,
                                  double t_max, double t_min = 1e-12) const;

  /// Same contract as intersect(), testing every triangle.
  std::optional<RayHit> intersect_brute_force(const Vec3d& origin,
                                              const Vec3d& dir, double t_max,
                                              double t_min = 1e-12) const;

 private:
  std::string id_;
  Eigen::AlignedBox3d bounds_;
  std::shared_ptr<const MeshIndex> index_;
};

/// Appends the 12 outward-facing triangles of an oriented box.
void append_box(std::vector<Triangle>& out, const Vec3d& center,
                const Vec3d& size, const Eigen::Quaterniond& orientation);

/// Appends a rectangle in the local xy-plane, facing local +z.
void append_quad(std::vector<Triangle>& out, const Vec3d& center, double width,
                 double height, const Eigen::Quaterniond& orientation);

}  // namespace viewscale
