#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "viewscale/geometry.hpp"

namespace viewscale {

/// ASCII OBJ subset: `v x y z` and `f i j k ...` records (polygons are fan
/// triangulated; `i/t/n` index forms and negative indices are accepted).
/// Other records are ignored.
Scene read_obj(std::istream& in, std::string scene_id);
Scene load_obj(const std::filesystem::path& path, std::string scene_id = {});

/// Procedural scene from a shape list:
///   {"id": "...", "shapes": [
///      {"type": "box",  "center": [x,y,z], "size": [sx,sy,sz], "yaw_deg": 0},
///      {"type": "quad", "center": [x,y,z], "size": [w,h],
///       "orientation": [w,x,y,z]} ]}
/// Boxes may carry "orientation" instead of "yaw_deg". A quad faces its
/// local +z axis.
Scene build_procedural_scene(const nlohmann::json& spec);

/// A 6 m x 5 m x 2.5 m room (inward-facing walls, floor, ceiling) with a few
/// box obstacles. Used by the CLI demo and the benchmark tests.
nlohmann::json demo_room_spec();

struct StampedPose {
  double timestamp = 0;
  Posed pose;
};

/// TUM trajectory lines "timestamp tx ty tz qx qy qz qw"; '#' comments and
/// blank lines skipped.
std::vector<StampedPose> read_tum_trajectory(std::istream& in);
std::vector<StampedPose> load_tum_trajectory(const std::filesystem::path& path);
void write_tum_trajectory(std::ostream& out, const std::vector<StampedPose>& poses);

/// Level camera poses on a circle, looking tangentially along the path.
std::vector<Posed> demo_orbit(const Vec3d& center, double radius, double height,
                              int count);

}  // namespace viewscale
