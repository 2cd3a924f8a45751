#include "viewscale/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace viewscale {

namespace {

using nlohmann::json;

Vec3d vec3_from(const json& j, const std::string& what) {
  require(j.is_array() && j.size() == 3, what + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Quaterniond orientation_from(const json& shape) {
  if (shape.contains("orientation")) {
    const auto& q = shape["orientation"];
    require(q.is_array() && q.size() == 4,
            "shape orientation must be [w, x, y, z]");
    Eigen::Quaterniond out(q[0].get<double>(), q[1].get<double>(),
                           q[2].get<double>(), q[3].get<double>());
    require(out.norm() > 0, "shape orientation must be nonzero");
    return out.normalized();
  }
  const double yaw = shape.value("yaw_deg", 0.0) * std::numbers::pi / 180.0;
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3d::UnitZ()));
}

json quat_json(const Eigen::Quaterniond& q) {
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

}  // namespace

Scene read_obj(std::istream& in, std::string scene_id) {
  std::vector<Vec3d> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](const std::string& token) {
    const auto slash = token.find('/');
    const long raw = std::stol(token.substr(0, slash));
    const long n = static_cast<long>(vertices.size());
    const long idx = raw > 0 ? raw - 1 : n + raw;
    require(raw != 0 && idx >= 0 && idx < n,
            "obj line " + std::to_string(line_no) + ": vertex index out of range");
    return vertices[static_cast<std::size_t>(idx)];
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x = 0, y = 0, z = 0;
      require(static_cast<bool>(ls >> x >> y >> z),
              "obj line " + std::to_string(line_no) + ": malformed vertex");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<Vec3d> poly;
      std::string token;
      while (ls >> token) poly.push_back(resolve(token));
      require(poly.size() >= 3,
              "obj line " + std::to_string(line_no) + ": face needs 3 vertices");
      for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  return Scene(std::move(scene_id), std::move(triangles));
}

Scene load_obj(const std::filesystem::path& path, std::string scene_id) {
  std::ifstream in(path);
  require(in.good(), "cannot open mesh file " + path.string());
  if (scene_id.empty()) scene_id = path.stem().string();
  return read_obj(in, std::move(scene_id));
}

Scene build_procedural_scene(const json& spec) {
  require(spec.is_object(), "procedural scene must be an object");
  require(spec.contains("shapes") && spec["shapes"].is_array(),
          "procedural scene needs a 'shapes' array");
  std::vector<Triangle> triangles;
  std::size_t index = 0;
  for (const auto& shape : spec["shapes"]) {
    const std::string where = "shapes[" + std::to_string(index++) + "]";
    const std::string type = shape.value("type", "");
    require(shape.contains("center"), where + ": missing center");
    const Vec3d center = vec3_from(shape["center"], where + ".center");
    const auto orientation = orientation_from(shape);
    if (type == "box") {
      const Vec3d size = vec3_from(shape.at("size"), where + ".size");
      require((size.array() > 0).all(), where + ": box size must be positive");
      append_box(triangles, center, size, orientation);
    } else if (type == "quad" || type == "wall") {
      const auto& size = shape.at("size");
      require(size.is_array() && size.size() == 2, where + ".size must be [w, h]");
      const double w = size[0].get<double>();
      const double h = size[1].get<double>();
      require(w > 0 && h > 0, where + ": quad size must be positive");
      append_quad(triangles, center, w, h, orientation);
    } else {
      throw InputError(where + ": unknown shape type '" + type + "'");
    }
  }
  return Scene(spec.value("id", "procedural"), std::move(triangles));
}

json demo_room_spec() {
  constexpr double kX = 6.0, kY = 5.0, kZ = 2.5;
  const double half_pi = std::numbers::pi / 2.0;
  using Eigen::AngleAxisd;
  auto quad = [](Vec3d c, double w, double h, const Eigen::Quaterniond& q) {
    return json{{"type", "quad"},
                {"center", {c.x(), c.y(), c.z()}},
                {"size", {w, h}},
                {"orientation", quat_json(q)}};
  };
  auto box = [](Vec3d c, Vec3d s, double yaw_deg) {
    return json{{"type", "box"},
                {"center", {c.x(), c.y(), c.z()}},
                {"size", {s.x(), s.y(), s.z()}},
                {"yaw_deg", yaw_deg}};
  };
  json shapes = json::array();
  // Floor faces up, ceiling faces down, walls face the room interior.
  shapes.push_back(quad({kX / 2, kY / 2, 0}, kX, kY, Eigen::Quaterniond::Identity()));
  shapes.push_back(quad({kX / 2, kY / 2, kZ}, kX, kY,
                        Eigen::Quaterniond(AngleAxisd(std::numbers::pi, Vec3d::UnitX()))));
  shapes.push_back(quad({0, kY / 2, kZ / 2}, kZ, kY,
                        Eigen::Quaterniond(AngleAxisd(half_pi, Vec3d::UnitY()))));
  shapes.push_back(quad({kX, kY / 2, kZ / 2}, kZ, kY,
                        Eigen::Quaterniond(AngleAxisd(-half_pi, Vec3d::UnitY()))));
  shapes.push_back(quad({kX / 2, 0, kZ / 2}, kX, kZ,
                        Eigen::Quaterniond(AngleAxisd(-half_pi, Vec3d::UnitX()))));
  shapes.push_back(quad({kX / 2, kY, kZ / 2}, kX, kZ,
                        Eigen::Quaterniond(AngleAxisd(half_pi, Vec3d::UnitX()))));
  shapes.push_back(box({2.0, 1.5, 0.6}, {0.6, 0.6, 1.2}, 0));
  shapes.push_back(box({4.2, 3.4, 0.5}, {1.0, 0.5, 1.0}, 20));
  shapes.push_back(box({1.4, 3.9, 0.9}, {0.4, 0.4, 1.8}, 0));
  shapes.push_back(box({4.6, 1.1, 0.4}, {1.2, 0.8, 0.8}, -10));
  return json{{"id", "demo_room"}, {"shapes", shapes}};
}

std::vector<StampedPose> read_tum_trajectory(std::istream& in) {
  std::vector<StampedPose> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double ts = 0, tx = 0, ty = 0, tz = 0, qx = 0, qy = 0, qz = 0, qw = 0;
    require(static_cast<bool>(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw),
            "trajectory line " + std::to_string(line_no) +
                ": expected 'timestamp tx ty tz qx qy qz qw'");
    try {
      out.push_back({ts, Posed(Vec3d(tx, ty, tz), Eigen::Quaterniond(qw, qx, qy, qz))});
    } catch (const InputError& e) {
      throw InputError("trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<StampedPose> load_tum_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open trajectory file " + path.string());
  return read_tum_trajectory(in);
}

void write_tum_trajectory(std::ostream& out, const std::vector<StampedPose>& poses) {
  out << "# timestamp tx ty tz qx qy qz qw\n" << std::setprecision(17);
  for (const auto& [ts, pose] : poses) {
    const auto& t = pose.position();
    const auto& q = pose.orientation();
    out << ts << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x()
        << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

std::vector<Posed> demo_orbit(const Vec3d& center, double radius, double height,
                              int count) {
  std::vector<Posed> poses;
  poses.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * i / count;
    const Vec3d p(center.x() + radius * std::cos(a),
                  center.y() + radius * std::sin(a), height);
    poses.push_back(Posed::looking(p, wrap_angle(a + std::numbers::pi / 2.0)));
  }
  return poses;
}

}  // namespace viewscale
