#include "viewscale/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

#include "json_fields.hpp"
#include "viewscale/error.hpp"

namespace viewscale {

using detail::Fields;
using detail::number_or_string;

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    require(static_cast<bool>(out), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Parameter echoes

ojson to_json(const SamplerParams& p) {
  return {{"trans_sigma", p.trans_sigma},
          {"yaw_sigma_deg", p.yaw_sigma_deg},
          {"arc_radius_range", p.arc_radius_range},
          {"arc_heading_range_deg", p.arc_heading_range_deg},
          {"arc_z_jitter", p.arc_z_jitter},
          {"pool_size", p.pool_size},
          {"random_fraction", p.random_fraction}};
}

void from_json(const nlohmann::json& j, SamplerParams& p, const std::string& where) {
  Fields f(j, where);
  f.get("trans_sigma", p.trans_sigma);
  f.get("yaw_sigma_deg", p.yaw_sigma_deg);
  f.get("arc_radius_range", p.arc_radius_range);
  f.get("arc_heading_range_deg", p.arc_heading_range_deg);
  f.get("arc_z_jitter", p.arc_z_jitter);
  f.get("pool_size", p.pool_size);
  f.get("random_fraction", p.random_fraction);
  f.finish();
}

ojson to_json(const CoverageParams& p) {
  return {{"voxel_size", p.voxel_size},
          {"depth_stride", p.depth_stride},
          {"max_range", number_or_string(p.max_range)}};
}

void from_json(const nlohmann::json& j, CoverageParams& p, const std::string& where) {
  Fields f(j, where);
  f.get("voxel_size", p.voxel_size);
  f.get("depth_stride", p.depth_stride);
  f.get("max_range", p.max_range);
  f.finish();
}

ojson to_json(const GateParams& p) {
  return {{"k", p.k},
          {"tau", p.tau},
          {"psnr_div", p.psnr_div},
          {"ssim_div", p.ssim_div},
          {"lpips_num", p.lpips_num}};
}

void from_json(const nlohmann::json& j, GateParams& p, const std::string& where) {
  Fields f(j, where);
  f.get("k", p.k);
  f.get("tau", p.tau);
  f.get("psnr_div", p.psnr_div);
  f.get("ssim_div", p.ssim_div);
  f.get("lpips_num", p.lpips_num);
  f.finish();
}

ojson to_json(const EpisodeConfig& c) {
  ojson j = {{"n_episodes", c.n_episodes},
             {"horizon", c.horizon},
             {"step_length", c.step_length},
             {"clearance_threshold", c.clearance_threshold},
             {"min_start_goal_sep", c.min_start_goal_sep},
             {"progress_success_fraction", c.progress_success_fraction},
             {"agent_height", c.agent_height},
             {"sensor_max_range", c.sensor_max_range},
             {"free_margin", c.free_margin},
             {"max_sampling_retries", c.max_sampling_retries},
             {"count_attempted_steps", c.count_attempted_steps}};
  if (c.arena) j["arena"] = *c.arena;
  return j;
}

void from_json(const nlohmann::json& j, EpisodeConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("n_episodes", c.n_episodes);
  f.get("horizon", c.horizon);
  f.get("step_length", c.step_length);
  f.get("clearance_threshold", c.clearance_threshold);
  f.get("min_start_goal_sep", c.min_start_goal_sep);
  f.get("progress_success_fraction", c.progress_success_fraction);
  f.get("agent_height", c.agent_height);
  f.get("sensor_max_range", c.sensor_max_range);
  f.get("free_margin", c.free_margin);
  f.get("max_sampling_retries", c.max_sampling_retries);
  f.get("count_attempted_steps", c.count_attempted_steps);
  if (f.has("arena")) {
    std::array<double, 4> arena{};
    f.get("arena", arena);
    c.arena = arena;
  }
  f.finish();
}

ojson to_json(const Intrinsicsd& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

void from_json(const nlohmann::json& j, Intrinsicsd& k, const std::string& where) {
  Fields f(j, where);
  f.get("fx", k.fx);
  f.get("fy", k.fy);
  f.get("cx", k.cx);
  f.get("cy", k.cy);
  f.get("width", k.width);
  f.get("height", k.height);
  f.finish();
}

ojson selection_knobs_to_json(const SelectionParams& p) {
  return {{"sigma", number_or_string(p.sigma)},
          {"lambda_yaw", p.lambda_yaw},
          {"unique_cap", p.unique_cap},
          {"stoch_subsample_eps", p.stoch_subsample_eps}};
}

void selection_knobs_from_json(const nlohmann::json& j, SelectionParams& p,
                               const std::string& where) {
  Fields f(j, where);
  f.get("sigma", p.sigma);
  f.get("lambda_yaw", p.lambda_yaw);
  f.get("unique_cap", p.unique_cap);
  f.get("stoch_subsample_eps", p.stoch_subsample_eps);
  f.finish();
}

// ---------------------------------------------------------------------------
// Pools and selections

ojson pose_to_json(const Posed& pose) {
  const auto& t = pose.position();
  const auto& q = pose.orientation();
  return {{"position", {t.x(), t.y(), t.z()}},
          {"quaternion", {q.w(), q.x(), q.y(), q.z()}},
          {"yaw", pose.yaw()}};
}

ojson pool_to_json(const CandidatePool& pool) {
  ojson candidates = ojson::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ojson c = {{"index", i}};
    c.update(pose_to_json(pool.candidates[i]));
    c["provenance"] = to_string(pool.provenance[i]);
    candidates.push_back(std::move(c));
  }
  return {{"scene_id", pool.scene_id},
          {"seed", pool.seed},
          {"params", to_json(pool.params)},
          {"candidates", std::move(candidates)}};
}

CandidatePool pool_from_json(const nlohmann::json& j) {
  require(j.is_object(), "pool: expected an object");
  CandidatePool pool;
  try {
    pool.scene_id = j.at("scene_id").get<std::string>();
    pool.seed = j.at("seed").get<std::uint64_t>();
    from_json(j.at("params"), pool.params, "pool.params");
    for (const auto& c : j.at("candidates")) {
      const auto& p = c.at("position");
      const auto& q = c.at("quaternion");
      pool.candidates.emplace_back(
          Vec3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()),
          Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                             q.at(2).get<double>(), q.at(3).get<double>()));
      const auto tag = c.at("provenance").get<std::string>();
      require(tag == "random" || tag == "robot", "pool: unknown provenance '" + tag + "'");
      pool.provenance.push_back(tag == "random" ? Provenance::random : Provenance::robot);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("pool: malformed JSON: ") + e.what());
  }
  return pool;
}

ojson selection_to_json(const SelectionResult& result, double coverage_fraction) {
  const auto& p = result.params;
  ojson params = {{"policy", to_string(p.policy)}, {"budget", p.budget},
                  {"unique_count", p.unique_count()}, {"seed", p.seed}};
  params.update(selection_knobs_to_json(p));
  const auto trace = result.coverage_fraction_trace();
  ojson selections = ojson::array();
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const auto& s = result.steps[i];
    selections.push_back({{"pool_index", s.pool_index},
                          {"gain", s.gain},
                          {"novelty_weight", s.novelty_weight},
                          {"cumulative_coverage", trace[i]}});
  }
  return {{"params", std::move(params)},
          {"scene_union_size", result.scene_union_size},
          {"covered_voxels", result.covered_union.size()},
          {"coverage_fraction", coverage_fraction},
          {"selections", std::move(selections)},
          {"training_stream", result.training_stream}};
}

void write_selection_trace_csv(std::ostream& out, const SelectionResult& result) {
  out << "step,pool_index,gain,novelty_weight,score,covered,cumulative_coverage\n";
  const auto trace = result.coverage_fraction_trace();
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const auto& s = result.steps[i];
    out << i << ',' << s.pool_index << ',' << s.gain << ','
        << format_double(s.novelty_weight) << ',' << format_double(s.score) << ','
        << s.covered << ',' << format_double(trace[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// CSV readers

namespace {

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

double parse_double(const std::string& text, const std::string& what, std::size_t line) {
  std::string_view s(text);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s == "inf" || s == "+inf" || s == "infinity")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(!s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size(),
          "invalid " + what + " '" + text + "'" + at_line(line));
  return v;
}

std::uint64_t parse_count(const std::string& text, const std::string& what,
                          std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(!text.empty() && res.ec == std::errc() && res.ptr == text.data() + text.size(),
          "invalid " + what + " '" + text + "'" + at_line(line));
  return v;
}

// Reads a header-led CSV and calls `row(fields, line)` for each data row.
// Columns are located by name so their order is free.
template <class F>
void read_table(std::istream& in, const std::string& what,
                const std::vector<std::string>& columns, F&& row) {
  std::string text;
  std::size_t line = 0;
  std::vector<std::size_t> where;
  std::size_t width = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text == "\r") continue;
    auto fields = split_csv_line(text);
    if (where.empty()) {
      for (const auto& c : columns) {
        const auto it = std::find(fields.begin(), fields.end(), c);
        require(it != fields.end(), what + ": header lacks column '" + c + "'" + at_line(line));
        where.push_back(static_cast<std::size_t>(it - fields.begin()));
      }
      width = fields.size();
      continue;
    }
    require(fields.size() == width,
            what + ": expected " + std::to_string(width) + " fields, got " +
                std::to_string(fields.size()) + at_line(line));
    std::vector<std::string> picked;
    for (const auto i : where) picked.push_back(fields[i]);
    row(picked, line);
  }
  require(!where.empty(), what + ": missing header");
}

}  // namespace

std::vector<SceneQuality> read_quality_csv(std::istream& in, const GateParams& params) {
  std::vector<SceneQuality> out;
  read_table(in, "quality csv", {"scene_id", "psnr", "ssim", "lpips"},
             [&](const std::vector<std::string>& f, std::size_t line) {
               const double psnr = parse_double(f[1], "psnr", line);
               const double ssim = parse_double(f[2], "ssim", line);
               const double lpips = parse_double(f[3], "lpips", line);
               try {
                 out.push_back(make_scene_quality(f[0], psnr, ssim, lpips, params));
               } catch (const InputError& e) {
                 throw InputError(std::string(e.what()) + at_line(line));
               }
             });
  return out;
}

ojson gate_report(const SceneQuality& quality, const GateParams& params) {
  return {{"scene_id", quality.scene_id},
          {"psnr", quality.psnr},
          {"ssim", quality.ssim},
          {"lpips", quality.lpips},
          {"q_s", quality.q_s},
          {"gate_prob", gate_probability(quality.q_s, params)},
          {"bucket", quality.q_s >= params.tau ? "high" : "low"}};
}

ClearanceEstimator::Script read_script_csv(std::istream& in) {
  ClearanceEstimator::Script script;
  read_table(in, "script csv", {"episode", "step", "predicted_clearance"},
             [&](const std::vector<std::string>& f, std::size_t line) {
               const auto episode = parse_count(f[0], "episode", line);
               const auto step = parse_count(f[1], "step", line);
               require(step <= static_cast<std::uint64_t>(std::numeric_limits<int>::max()),
                       "script csv: step out of range" + at_line(line));
               const double value = parse_double(f[2], "predicted_clearance", line);
               const auto [it, inserted] = script.emplace(
                   std::pair{static_cast<std::size_t>(episode), static_cast<int>(step)}, value);
               require(inserted, "script csv: duplicate (episode, step)" + at_line(line));
             });
  return script;
}

std::vector<RunRecord> read_run_records_csv(std::istream& in) {
  std::vector<RunRecord> out;
  read_table(in, "run records", {"method", "N", "scene_id", "metric", "coverage_fraction"},
             [&](const std::vector<std::string>& f, std::size_t line) {
               RunRecord r;
               r.method = f[0];
               require(!r.method.empty(), "run records: empty method" + at_line(line));
               r.budget = parse_count(f[1], "N", line);
               r.scene_id = f[2];
               r.metric_value = parse_double(f[3], "metric", line);
               r.coverage_fraction = parse_double(f[4], "coverage_fraction", line);
               require(std::isfinite(r.metric_value) && std::isfinite(r.coverage_fraction),
                       "run records: values must be finite" + at_line(line));
               out.push_back(std::move(r));
             });
  return out;
}

void attach_frames_csv(std::istream& in, std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::size_t, std::string>;
  std::map<Key, std::map<std::uint64_t, std::pair<double, double>>> frames;
  read_table(in, "frames csv", {"method", "N", "scene_id", "frame", "novelty", "error"},
             [&](const std::vector<std::string>& f, std::size_t line) {
               const Key key{f[0], parse_count(f[1], "N", line), f[2]};
               const auto frame = parse_count(f[3], "frame", line);
               const double novelty = parse_double(f[4], "novelty", line);
               const double error = parse_double(f[5], "error", line);
               require(frames[key].emplace(frame, std::pair{novelty, error}).second,
                       "frames csv: duplicate frame" + at_line(line));
             });
  for (auto& r : records) {
    const auto it = frames.find({r.method, r.budget, r.scene_id});
    if (it == frames.end()) continue;
    r.novelty_values.clear();
    r.frame_errors.clear();
    for (const auto& [frame, ne] : it->second) {
      r.novelty_values.push_back(ne.first);
      r.frame_errors.push_back(ne.second);
    }
  }
}

// ---------------------------------------------------------------------------
// Benchmark and report output

ojson to_json(const MetricEstimate& m) {
  ojson j = {{"mean", m.mean}};
  if (m.ci_defined) {
    j["ci95"] = m.ci95;
  } else {
    j["ci95"] = nullptr;
  }
  j["ci_defined"] = m.ci_defined;
  j["samples"] = m.samples;
  return j;
}

ojson benchmark_to_json(const BenchmarkRun& run) {
  const auto& m = run.metrics;
  ojson skipped = ojson::array();
  for (const auto& [episode, reason] : run.skipped)
    skipped.push_back({{"episode", episode}, {"reason", reason}});
  return {{"n_episodes", m.n_episodes},
          {"n_failed", m.n_failed},
          {"n_skipped", m.n_skipped},
          {"metrics",
           {{"succ", to_json(m.succ)},
            {"col_per_100", to_json(m.col_per_100)},
            {"col_per_fail", to_json(m.col_per_fail)},
            {"path_ratio", to_json(m.path_ratio)}}},
          {"skipped", std::move(skipped)}};
}

void write_episode_csv(std::ostream& out, std::span<const EpisodeLog> episodes) {
  out << "episode,start_x,start_y,goal_x,goal_y,outcome,attempts,steps,collisions,"
         "progress_moves,oracle_safe_moves,path_ratio,reached_goal\n";
  for (const auto& e : episodes) {
    out << e.episode << ',' << format_double(e.start.x()) << ','
        << format_double(e.start.y()) << ',' << format_double(e.goal.x()) << ','
        << format_double(e.goal.y()) << ','
        << (e.outcome == Outcome::success ? "success" : "fail") << ',' << e.attempts()
        << ',' << e.steps << ',' << e.collisions << ',' << e.progress_moves << ','
        << e.oracle_safe_moves << ',' << format_double(e.path_ratio()) << ','
        << (e.reached_goal ? 1 : 0) << '\n';
  }
}

ojson to_json(const WilcoxonResult& w) {
  return {{"median_delta", w.median_delta}, {"mean_delta", w.mean_delta},
          {"p_value", w.p_value},           {"w_plus", w.w_plus},
          {"n_used", w.n_used},             {"wins", w.wins},
          {"losses", w.losses},             {"ties", w.ties},
          {"exact", w.exact},               {"degenerate", w.degenerate}};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : "";
}

}  // namespace

void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows) {
  out << "method,N,scenes,mean,ci95,coverage_mean\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << r.budget << ',' << r.scenes << ','
        << format_double(r.mean) << ',' << format_double(r.ci95) << ','
        << format_double(r.coverage_mean) << '\n';
}

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows) {
  out << "method,budgets,mean,worst,range\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << r.summary.budgets << ','
        << format_double(r.summary.mean) << ',' << format_double(r.summary.worst) << ','
        << format_double(r.summary.range) << '\n';
}

void write_correlation_csv(std::ostream& out, std::span<const CorrelationRow> rows) {
  out << "method,points,pearson,spearman\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << r.points << ',' << optional_field(r.pearson)
        << ',' << optional_field(r.spearman) << '\n';
}

void write_tail_csv(std::ostream& out, std::span<const TailRow> rows) {
  out << "method,N,scenes,mean,ci95\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << r.budget << ',' << r.scenes << ','
        << format_double(r.mean) << ',' << format_double(r.ci95) << '\n';
}

void write_paired_csv(std::ostream& out, std::span<const PairedRow> rows) {
  out << "N,target,comparator,n_used,median_delta,mean_delta,wins,losses,ties,p_value,"
         "exact,degenerate\n";
  for (const auto& r : rows) {
    const auto& w = r.test;
    out << r.budget << ',' << csv_field(r.target) << ',' << csv_field(r.comparator) << ','
        << w.n_used << ',' << format_double(w.median_delta) << ','
        << format_double(w.mean_delta) << ',' << w.wins << ',' << w.losses << ','
        << w.ties << ',' << format_double(w.p_value) << ',' << (w.exact ? 1 : 0) << ','
        << (w.degenerate ? 1 : 0) << '\n';
  }
}

void write_novelty_bins_csv(std::ostream& out, std::span<const NoveltyBinPoint> points) {
  out << "method,N,scene_id,bin,mean_error\n";
  for (const auto& p : points)
    out << csv_field(p.method) << ',' << p.budget << ',' << csv_field(p.scene_id) << ','
        << p.bin << ',' << format_double(p.mean_error) << '\n';
}

}  // namespace viewscale
