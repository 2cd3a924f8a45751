#include "viewscale/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

namespace viewscale {

namespace {

constexpr std::size_t kLeafSize = 4;

struct Node {
  Eigen::AlignedBox3d box;
  std::uint32_t first = 0;  // leaf: first entry in order; inner: left child
  std::uint32_t count = 0;  // leaf: triangle count; inner: 0
  std::uint32_t right = 0;
};

bool better(const RayHit& candidate, const std::optional<RayHit>& best) {
  return !best || candidate.t < best->t ||
         (candidate.t == best->t && candidate.triangle < best->triangle);
}

void test_triangle(const Triangle& tri, std::size_t index, const Vec3d& origin,
                   const Vec3d& dir, double t_min, double t_max,
                   std::optional<RayHit>& best) {
  if (auto hit = intersect_triangle<double>(origin, dir, tri.a, tri.b, tri.c,
                                            t_min, t_max)) {
    RayHit candidate{hit->t, index, hit->front_facing};
    if (better(candidate, best)) best = candidate;
  }
}

}  // namespace

class MeshIndex {
 public:
  explicit MeshIndex(std::vector<Triangle> triangles)
      : triangles_(std::move(triangles)) {
    order_.resize(triangles_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.reserve(triangles_.size());
    for (const auto& t : triangles_) centroids_.push_back((t.a + t.b + t.c) / 3.0);
    if (!triangles_.empty()) {
      nodes_.reserve(2 * triangles_.size() / kLeafSize + 1);
      build(0, static_cast<std::uint32_t>(triangles_.size()));
    }
  }

  const std::vector<Triangle>& triangles() const { return triangles_; }

  std::optional<RayHit> intersect(const Vec3d& origin, const Vec3d& dir,
                                  double t_min, double t_max) const {
    std::optional<RayHit> best;
    if (nodes_.empty()) return best;
    const Vec3d inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    std::array<std::uint32_t, 64> stack{};
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      const double limit = best ? best->t : t_max;
      if (!slab_hit(node.box, origin, inv, limit)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const std::uint32_t tri = order_[i];
          test_triangle(triangles_[tri], tri, origin, dir, t_min, t_max, best);
        }
      } else {
        stack[top++] = node.first;
        stack[top++] = node.right;
      }
    }
    return best;
  }

 private:
  // Conservative slab test: boxes are padded and the entry distance is
  // compared with slack so that rounding never culls a triangle that the
  // brute-force path would report.
  static bool slab_hit(const Eigen::AlignedBox3d& box, const Vec3d& origin,
                       const Vec3d& inv, double limit) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
      const double lo = box.min()[axis];
      const double hi = box.max()[axis];
      if (std::isinf(inv[axis])) {
        if (origin[axis] < lo || origin[axis] > hi) return false;
        continue;
      }
      double a = (lo - origin[axis]) * inv[axis];
      double b = (hi - origin[axis]) * inv[axis];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    const double slack = 1e-9 * (1.0 + std::abs(t0) + std::abs(limit));
    return t0 <= t1 + slack && t0 <= limit + slack && t1 >= -slack;
  }

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d centroid_box;
    for (std::uint32_t i = begin; i < end; ++i) {
      const Triangle& t = triangles_[order_[i]];
      box.extend(t.a).extend(t.b).extend(t.c);
      centroid_box.extend(centroids_[order_[i]]);
    }
    const double pad = 1e-9 * (1.0 + box.sizes().maxCoeff() +
                               box.min().cwiseAbs().maxCoeff() +
                               box.max().cwiseAbs().maxCoeff());
    box.min().array() -= pad;
    box.max().array() += pad;
    nodes_[index].box = box;

    const std::uint32_t count = end - begin;
    int axis = 0;
    centroid_box.sizes().maxCoeff(&axis);
    if (count <= kLeafSize || centroid_box.sizes()[axis] <= 0.0) {
      nodes_[index].first = begin;
      nodes_[index].count = count;
      return index;
    }
    const std::uint32_t mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](std::uint32_t l, std::uint32_t r) {
                       const double cl = centroids_[l][axis];
                       const double cr = centroids_[r][axis];
                       return cl < cr || (cl == cr && l < r);
                     });
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[index].first = left;
    nodes_[index].right = right;
    nodes_[index].count = 0;
    return index;
  }

  std::vector<Triangle> triangles_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3d> centroids_;
  std::vector<Node> nodes_;
};

Scene::Scene(std::string id, std::vector<Triangle> triangles)
    : id_(std::move(id)) {
  for (const auto& t : triangles) {
    require(t.a.allFinite() && t.b.allFinite() && t.c.allFinite(),
            "scene '" + id_ + "': non-finite vertex coordinate");
    bounds_.extend(t.a).extend(t.b).extend(t.c);
  }
  index_ = std::make_shared<const MeshIndex>(std::move(triangles));
}

const std::vector<Triangle>& Scene::triangles() const {
  static const std::vector<Triangle> kNone;
  return index_ ? index_->triangles() : kNone;
}

std::optional<RayHit> Scene::intersect(const Vec3d& origin, const Vec3d& dir,
                                       double t_max, double t_min) const {
  if (!index_) return std::nullopt;
  return index_->intersect(origin, dir, t_min, t_max);
}

std::optional<RayHit> Scene::intersect_brute_force(const Vec3d& origin,
                                                   const Vec3d& dir,
                                                   double t_max,
                                                   double t_min) const {
  std::optional<RayHit> best;
  const auto& tris = triangles();
  for (std::size_t i = 0; i < tris.size(); ++i)
    test_triangle(tris[i], i, origin, dir, t_min, t_max, best);
  return best;
}

void append_box(std::vector<Triangle>& out, const Vec3d& center,
                const Vec3d& size, const Eigen::Quaterniond& orientation) {
  const Eigen::Matrix3d r = orientation.normalized().toRotationMatrix();
  const Vec3d h = size / 2.0;
  std::array<Vec3d, 8> v;
  for (int i = 0; i < 8; ++i) {
    const Vec3d local((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                      (i & 4) ? h.z() : -h.z());
    v[i] = center + r * local;
  }
  // Counter-clockwise when seen from outside.
  static constexpr int kFaces[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& f : kFaces) {
    out.push_back({v[f[0]], v[f[1]], v[f[2]]});
    out.push_back({v[f[0]], v[f[2]], v[f[3]]});
  }
}

void append_quad(std::vector<Triangle>& out, const Vec3d& center, double width,
                 double height, const Eigen::Quaterniond& orientation) {
  const Eigen::Matrix3d r = orientation.normalized().toRotationMatrix();
  const Vec3d du = r * Vec3d(width / 2.0, 0, 0);
  const Vec3d dv = r * Vec3d(0, height / 2.0, 0);
  const Vec3d p00 = center - du - dv;
  const Vec3d p10 = center + du - dv;
  const Vec3d p11 = center + du + dv;
  const Vec3d p01 = center - du + dv;
  out.push_back({p00, p10, p11});
  out.push_back({p00, p11, p01});
}

}  // namespace viewscale
