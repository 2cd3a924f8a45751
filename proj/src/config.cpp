#include "viewscale/config.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <toml.hpp>

#include "json_fields.hpp"
#include "viewscale/error.hpp"

namespace viewscale {

using detail::Fields;
using nlohmann::json;

namespace {

json node_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = node_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& value : *a) out.push_back(node_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return detail::number_or_string(v->get());
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw InputError("config: date and time values are not supported");
}

// Copy of `j` without the listed keys (they are read separately).
json without(const json& j, std::initializer_list<const char*> keys) {
  json out = j;
  if (out.is_object())
    for (const char* k : keys) out.erase(k);
  return out;
}

void check_file(const RunConfig& c, const std::string& path, const std::string& field) {
  require(!path.empty(), "config: " + field + " is required");
  require(std::filesystem::is_regular_file(c.resolve(path)),
          "config: " + field + ": file not found: " + c.resolve(path).string());
}

// Runs a module validator, prefixing its message with the config field.
template <class F>
void validate_block(const std::string& field, F&& check) {
  try {
    check();
  } catch (const InputError& e) {
    const std::string message = e.what();
    if (message.rfind(field + ":", 0) == 0) throw InputError("config: " + message);
    throw InputError("config: " + field + ": " + message);
  }
}

}  // namespace

json parse_toml(const std::string& text, const std::string& source) {
  try {
    const auto table = toml::parse(text, source);
    return node_to_json(table);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column
        << ": " << e.description();
    throw InputError(msg.str());
  }
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

unsigned RunConfig::worker_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void RunConfig::validate(const std::string& command) const {
  const bool all = command.empty();
  require(!scene.id.empty(), "config: scene.id must not be empty");
  require(scene.obj.empty() || scene.procedural.is_null(),
          "config: scene: give either obj or procedural, not both");
  if (!scene.obj.empty()) check_file(*this, scene.obj, "scene.obj");
  if (!scene.procedural.is_null())
    require(scene.procedural.is_object(), "config: scene.procedural must be a table");
  if (!trajectory.tum.empty()) check_file(*this, trajectory.tum, "trajectory.tum");
  require(trajectory.orbit_count >= 1, "config: trajectory.orbit_count must be >= 1");
  require(trajectory.orbit_radius >= 0, "config: trajectory.orbit_radius must be >= 0");
  validate_block("intrinsics", [&] { intrinsics.validate(); });
  validate_block("coverage", [&] { coverage.validate(); });
  validate_block("sampler", [&] { sampler.validate(); });
  validate_block("selection", [&] { selection.validate(); });
  require(!policies.empty(), "config: selection.policies must not be empty");
  require(!budgets.empty(), "config: selection.budgets must not be empty");
  validate_block("gate", [&] { gate.validate(); });
  validate_block("episodes", [&] { episodes.validate(); });
  validate_block("episodes.estimator", [&] { (void)make_estimator(*this); });
  require(report.bins >= 1, "config: report.bins must be >= 1");
  if (all || command == "gate") {
    if (!quality.empty() || command == "gate") check_file(*this, quality, "gate.quality");
  }
  if (all || command == "simulate") {
    if (estimator.kind == "scripted") check_file(*this, estimator.script, "episodes.estimator.script");
  }
  if (all || command == "report") {
    if (!report.records.empty() || command == "report")
      check_file(*this, report.records, "report.records");
    if (!report.frames.empty()) check_file(*this, report.frames, "report.frames");
  }
}

ClearanceEstimator make_estimator(const RunConfig& config) {
  const auto& e = config.estimator;
  if (e.kind == "oracle") return ClearanceEstimator::oracle();
  if (e.kind == "additive_noise") return ClearanceEstimator::additive_noise(e.sigma, e.offset);
  if (e.kind == "multiplicative_bias") return ClearanceEstimator::multiplicative_bias(e.factor);
  if (e.kind == "scripted") {
    if (e.script.empty()) return ClearanceEstimator::scripted({});
    const auto path = config.resolve(e.script);
    std::ifstream in(path);
    if (!in) return ClearanceEstimator::scripted({});  // reported by validate()
    try {
      return ClearanceEstimator::scripted(read_script_csv(in));
    } catch (const InputError& err) {
      throw InputError(path.string() + ": " + err.what());
    }
  }
  throw InputError("unknown kind '" + e.kind +
                   "' (expected oracle, additive_noise, multiplicative_bias or scripted)");
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  Fields top(j, "config");
  top.get("seed", c.seed);
  top.get("out_dir", c.out_dir);
  top.get("threads", c.threads);

  if (const auto* s = top.raw("scene")) {
    Fields f(*s, "scene");
    f.get("id", c.scene.id);
    f.get("obj", c.scene.obj);
    if (const auto* p = f.raw("procedural")) c.scene.procedural = *p;
    f.finish();
  }
  if (const auto* t = top.raw("trajectory")) {
    Fields f(*t, "trajectory");
    f.get("tum", c.trajectory.tum);
    f.get("orbit_center", c.trajectory.orbit_center);
    f.get("orbit_radius", c.trajectory.orbit_radius);
    f.get("orbit_height", c.trajectory.orbit_height);
    f.get("orbit_count", c.trajectory.orbit_count);
    f.finish();
  }
  if (const auto* k = top.raw("intrinsics")) from_json(*k, c.intrinsics, "intrinsics");
  if (const auto* v = top.raw("coverage")) from_json(*v, c.coverage, "coverage");
  if (const auto* v = top.raw("sampler")) from_json(*v, c.sampler, "sampler");
  if (const auto* v = top.raw("selection")) {
    selection_knobs_from_json(without(*v, {"policies", "budgets"}), c.selection, "selection");
    if (v->contains("policies")) {
      const auto& list = (*v)["policies"];
      require(list.is_array(), "selection.policies: expected an array of names");
      c.policies.clear();
      for (const auto& name : list) {
        require(name.is_string(), "selection.policies: expected an array of names");
        try {
          c.policies.push_back(policy_from_string(name.get<std::string>()));
        } catch (const InputError& e) {
          throw InputError(std::string("selection.policies: ") + e.what());
        }
      }
    }
    if (v->contains("budgets")) {
      const auto& list = (*v)["budgets"];
      require(list.is_array(), "selection.budgets: expected an array of integers");
      c.budgets.clear();
      for (const auto& n : list)
        c.budgets.push_back(Fields::to_count(n, "selection.budgets"));
    }
  }
  if (const auto* v = top.raw("gate")) {
    from_json(without(*v, {"quality"}), c.gate, "gate");
    Fields f(*v, "gate");
    f.get("quality", c.quality);
  }
  if (const auto* v = top.raw("episodes")) {
    from_json(without(*v, {"estimator", "per_episode_csv"}), c.episodes, "episodes");
    Fields f(*v, "episodes");
    f.get("per_episode_csv", c.per_episode_csv);
    if (const auto* e = f.raw("estimator")) {
      Fields g(*e, "episodes.estimator");
      g.get("kind", c.estimator.kind);
      g.get("sigma", c.estimator.sigma);
      g.get("offset", c.estimator.offset);
      g.get("factor", c.estimator.factor);
      g.get("script", c.estimator.script);
      g.finish();
    }
  }
  if (const auto* v = top.raw("report")) {
    Fields f(*v, "report");
    f.get("records", c.report.records);
    f.get("frames", c.report.frames);
    f.get("target", c.report.target);
    f.get("stability_floor", c.report.stability_floor);
    f.get("bins", c.report.bins);
    f.finish();
  }
  top.finish();
  return c;
}

ojson config_to_json(const RunConfig& c) {
  ojson scene = {{"id", c.scene.id}};
  if (!c.scene.obj.empty()) scene["obj"] = c.scene.obj;
  if (!c.scene.procedural.is_null()) scene["procedural"] = ojson::parse(c.scene.procedural.dump());

  ojson trajectory = ojson::object();
  if (!c.trajectory.tum.empty()) trajectory["tum"] = c.trajectory.tum;
  trajectory["orbit_center"] = c.trajectory.orbit_center;
  trajectory["orbit_radius"] = c.trajectory.orbit_radius;
  trajectory["orbit_height"] = c.trajectory.orbit_height;
  trajectory["orbit_count"] = c.trajectory.orbit_count;

  ojson selection = selection_knobs_to_json(c.selection);
  ojson policies = ojson::array();
  for (const auto p : c.policies) policies.push_back(to_string(p));
  selection["policies"] = std::move(policies);
  selection["budgets"] = c.budgets;

  ojson gate = to_json(c.gate);
  if (!c.quality.empty()) gate["quality"] = c.quality;

  ojson episodes = to_json(c.episodes);
  episodes["per_episode_csv"] = c.per_episode_csv;
  ojson estimator = {{"kind", c.estimator.kind},
                     {"sigma", c.estimator.sigma},
                     {"offset", c.estimator.offset},
                     {"factor", c.estimator.factor}};
  if (!c.estimator.script.empty()) estimator["script"] = c.estimator.script;
  episodes["estimator"] = std::move(estimator);

  ojson report = ojson::object();
  if (!c.report.records.empty()) report["records"] = c.report.records;
  if (!c.report.frames.empty()) report["frames"] = c.report.frames;
  if (!c.report.target.empty()) report["target"] = c.report.target;
  report["stability_floor"] = c.report.stability_floor;
  report["bins"] = c.report.bins;

  return {{"seed", c.seed},
          {"out_dir", c.out_dir},
          {"threads", c.threads},
          {"scene", std::move(scene)},
          {"trajectory", std::move(trajectory)},
          {"intrinsics", to_json(c.intrinsics)},
          {"coverage", to_json(c.coverage)},
          {"sampler", to_json(c.sampler)},
          {"selection", std::move(selection)},
          {"gate", std::move(gate)},
          {"episodes", std::move(episodes)},
          {"report", std::move(report)}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  const auto ext = path.extension().string();
  if (ext == ".toml") {
    j = parse_toml(buf.str(), path.string());
  } else {
    try {
      j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace viewscale
