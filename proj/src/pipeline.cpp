#include "viewscale/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "viewscale/error.hpp"
#include "viewscale/scene_io.hpp"

namespace viewscale {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Execution details stay out of the echo so outputs do not depend on them.
ojson config_echo(const RunConfig& config) {
  auto echo = config_to_json(config);
  echo.erase("threads");
  echo.erase("out_dir");
  return echo;
}

std::filesystem::path out_path(const RunConfig& config, const char* command,
                               const std::string& file) {
  return std::filesystem::path(config.out_dir) / command / file;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Scene load_scene(const RunConfig& config) {
  if (!config.scene.obj.empty()) return load_obj(config.resolve(config.scene.obj), config.scene.id);
  auto spec = config.scene.procedural.is_null() ? demo_room_spec() : config.scene.procedural;
  spec["id"] = config.scene.id;
  return build_procedural_scene(spec);
}

std::vector<Posed> load_train_poses(const RunConfig& config) {
  const auto& t = config.trajectory;
  if (t.tum.empty())
    return demo_orbit(Vec3d(t.orbit_center[0], t.orbit_center[1], 0.0), t.orbit_radius,
                      t.orbit_height, t.orbit_count);
  std::vector<Posed> poses;
  for (const auto& s : load_tum_trajectory(config.resolve(t.tum))) poses.push_back(s.pose);
  require(!poses.empty(), "trajectory " + t.tum + " has no poses");
  return poses;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<VisibilitySet> extract_visibility(const Scene& scene,
                                              const Intrinsicsd& intrinsics,
                                              std::span<const Posed> candidates,
                                              const CoverageParams& params,
                                              unsigned threads) {
  std::vector<VisibilitySet> sets(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    sets[i] = visible_voxels(scene, intrinsics, candidates[i], params);
  });
  return sets;
}

std::string run_key(const std::string& policy, std::size_t budget, std::uint64_t seed) {
  return policy + "_" + std::to_string(budget) + "_" + std::to_string(seed);
}

double SelectTiming::per_candidate_ms() const {
  return candidates == 0 ? 0.0 : 1000.0 * total_s / static_cast<double>(candidates);
}

void print_timing(std::ostream& out, const SelectTiming& t) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(3);
  out << "Voxel extract time: " << t.voxel_extract_s << " s (" << t.candidates
      << " candidates)\n";
  out << "Greedy select time: " << t.greedy_select_s << " s (" << t.greedy_runs
      << " greedy runs)\n";
  out << "Total select time: " << t.total_s << " s\n";
  out << "Per-candidate score: " << std::setprecision(2) << t.per_candidate_ms() << " ms\n";
  out.flags(flags);
}

SelectOutcome cmd_select(const RunConfig& config) {
  config.validate("select");
  SelectOutcome outcome;
  const auto start = Clock::now();
  const Scene scene = load_scene(config);
  const auto train = load_train_poses(config);
  const auto pool = build_candidate_pool(train, config.sampler, config.scene.id, config.seed);

  const auto extract_start = Clock::now();
  const auto sets = extract_visibility(scene, config.intrinsics, pool.candidates,
                                       config.coverage, config.worker_count());
  outcome.timing.voxel_extract_s = seconds_since(extract_start);
  outcome.timing.candidates = pool.size();
  const VoxelUniverse universe(sets);
  const auto& scene_union = universe.universe();

  struct Entry {
    Policy policy;
    std::size_t budget;
    std::string key;
    std::string json;
    std::string trace;
    std::string summary_row;
    std::string error;
    double seconds = 0;
  };
  std::vector<Entry> entries;
  for (const auto policy : config.policies)
    for (const auto budget : config.budgets)
      entries.push_back({policy, budget, run_key(to_string(policy), budget, config.seed),
                         {}, {}, {}, {}, 0});

  const auto echo = config_echo(config);
  parallel_for(entries.size(), config.worker_count(), [&](std::size_t i) {
    auto& e = entries[i];
    try {
      SelectionParams params = config.selection;
      params.policy = e.policy;
      params.budget = e.budget;
      params.seed = config.seed;
      const auto t0 = Clock::now();
      const auto result = select_views(pool, universe, train, params);
      e.seconds = seconds_since(t0);
      const double fraction =
          scene_union.empty() ? 0.0 : coverage_fraction(result, scene_union);
      ojson doc = {{"config", echo},
                   {"run", {{"command", "select"}, {"key", e.key}}},
                   {"scene_id", pool.scene_id},
                   {"pool_size", pool.size()}};
      doc.update(selection_to_json(result, fraction));
      e.json = dump(doc);
      std::ostringstream trace;
      write_selection_trace_csv(trace, result);
      e.trace = trace.str();
      std::ostringstream row;
      row << to_string(e.policy) << ',' << e.budget << ',' << config.seed << ','
          << params.unique_count() << ',' << result.training_stream.size() << ','
          << result.covered_union.size() << ',' << scene_union.size() << ','
          << format_double(fraction) << '\n';
      e.summary_row = row.str();
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
  });

  std::string summary =
      "policy,N,seed,unique_count,training_stream,covered_voxels,scene_union,"
      "coverage_fraction\n";
  for (const auto& e : entries) {
    if (!e.error.empty()) {
      outcome.failed.push_back(e.key + ": " + e.error);
      continue;
    }
    if (e.policy == Policy::coverage || e.policy == Policy::cn_coverage ||
        e.policy == Policy::stoch_greedy_coverage) {
      outcome.timing.greedy_select_s += e.seconds;
      ++outcome.timing.greedy_runs;
    }
    const auto json_path = out_path(config, "select", e.key + ".json");
    const auto trace_path = out_path(config, "select", e.key + "_trace.csv");
    write_file_atomic(json_path, e.json);
    write_file_atomic(trace_path, e.trace);
    outcome.written.push_back(json_path);
    outcome.written.push_back(trace_path);
    summary += e.summary_row;
  }
  const auto summary_path = out_path(config, "select", "summary.csv");
  write_file_atomic(summary_path, summary);
  outcome.written.push_back(summary_path);
  outcome.timing.total_s = seconds_since(start);
  return outcome;
}

CommandOutcome cmd_pool(const RunConfig& config) {
  config.validate("pool");
  const auto train = load_train_poses(config);
  const auto pool = build_candidate_pool(train, config.sampler, config.scene.id, config.seed);
  ojson doc = {{"config", config_echo(config)},
               {"run", {{"command", "pool"}, {"key", "pool_" + std::to_string(config.seed)}}}};
  doc.update(pool_to_json(pool));
  CommandOutcome outcome;
  const auto path = out_path(config, "pool", "pool_" + std::to_string(config.seed) + ".json");
  write_file_atomic(path, dump(doc));
  outcome.written.push_back(path);
  return outcome;
}

CommandOutcome cmd_simulate(const RunConfig& config) {
  config.validate("simulate");
  const Scene scene = load_scene(config);
  const auto estimator = make_estimator(config);
  EpisodeConfig cfg = config.episodes;
  cfg.seed = config.seed;
  const auto run = run_benchmark(scene, estimator, cfg);

  const auto key = run_key(config.estimator.kind, cfg.n_episodes, config.seed);
  ojson doc = {{"config", config_echo(config)},
               {"run", {{"command", "simulate"}, {"key", key}}},
               {"scene_id", scene.id()},
               {"estimator", to_string(estimator.kind())}};
  doc.update(benchmark_to_json(run));
  CommandOutcome outcome;
  const auto path = out_path(config, "simulate", key + ".json");
  write_file_atomic(path, dump(doc));
  outcome.written.push_back(path);
  if (config.per_episode_csv) {
    std::ostringstream csv;
    write_episode_csv(csv, run.episodes);
    const auto csv_path = out_path(config, "simulate", key + "_episodes.csv");
    write_file_atomic(csv_path, csv.str());
    outcome.written.push_back(csv_path);
  }
  for (const auto& [episode, reason] : run.skipped)
    outcome.warnings.push_back(key + " skipped episode " + std::to_string(episode) + ": " + reason);
  return outcome;
}

CommandOutcome cmd_report(const RunConfig& config) {
  config.validate("report");
  const auto records_path = config.resolve(config.report.records);
  std::vector<RunRecord> records;
  {
    std::istringstream in(read_text(records_path));
    try {
      records = read_run_records_csv(in);
    } catch (const InputError& e) {
      throw InputError(records_path.string() + ": " + e.what());
    }
  }
  if (!config.report.frames.empty()) {
    const auto frames_path = config.resolve(config.report.frames);
    std::istringstream in(read_text(frames_path));
    try {
      attach_frames_csv(in, records);
    } catch (const InputError& e) {
      throw InputError(frames_path.string() + ": " + e.what());
    }
  }

  const auto scaling = scaling_table(records);
  const auto stability = stability_table(records, config.report.stability_floor);
  const auto correlation = correlation_table(records);
  const auto bins = novelty_bin_points(records, config.report.bins);
  const auto tail = tail_table(records, config.report.bins);
  std::vector<PairedRow> paired;
  if (!config.report.target.empty()) paired = paired_table(records, config.report.target);

  ojson tables = ojson::object();
  {
    ojson rows = ojson::array();
    for (const auto& r : scaling)
      rows.push_back({{"method", r.method}, {"N", r.budget}, {"scenes", r.scenes},
                      {"mean", r.mean}, {"ci95", r.ci95}, {"coverage_mean", r.coverage_mean}});
    tables["scaling"] = std::move(rows);
  }
  {
    ojson rows = ojson::array();
    for (const auto& r : stability)
      rows.push_back({{"method", r.method}, {"budgets", r.summary.budgets},
                      {"mean", r.summary.mean}, {"worst", r.summary.worst},
                      {"range", r.summary.range}});
    tables["stability"] = std::move(rows);
  }
  {
    ojson rows = ojson::array();
    for (const auto& r : correlation) {
      ojson row = {{"method", r.method}, {"points", r.points}};
      row["pearson"] = r.pearson ? ojson(*r.pearson) : ojson(nullptr);
      row["spearman"] = r.spearman ? ojson(*r.spearman) : ojson(nullptr);
      rows.push_back(std::move(row));
    }
    tables["correlation"] = std::move(rows);
  }
  {
    ojson rows = ojson::array();
    for (const auto& r : tail)
      rows.push_back({{"method", r.method}, {"N", r.budget}, {"scenes", r.scenes},
                      {"mean", r.mean}, {"ci95", r.ci95}});
    tables["tail"] = std::move(rows);
  }
  {
    ojson rows = ojson::array();
    for (const auto& r : paired) {
      ojson row = {{"N", r.budget}, {"target", r.target}, {"comparator", r.comparator}};
      row.update(to_json(r.test));
      rows.push_back(std::move(row));
    }
    tables["paired"] = std::move(rows);
  }

  ojson doc = {{"config", config_echo(config)},
               {"run", {{"command", "report"}, {"key", "report"}}},
               {"records", records.size()},
               {"tables", std::move(tables)}};
  CommandOutcome outcome;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = out_path(config, "report", name);
    write_file_atomic(path, content);
    outcome.written.push_back(path);
  };
  emit("report.json", dump(doc));
  std::ostringstream s1, s2, s3, s4, s5, s6;
  write_scaling_csv(s1, scaling);
  emit("scaling.csv", s1.str());
  write_stability_csv(s2, stability);
  emit("stability.csv", s2.str());
  write_correlation_csv(s3, correlation);
  emit("correlation.csv", s3.str());
  write_tail_csv(s4, tail);
  emit("tail.csv", s4.str());
  write_paired_csv(s5, paired);
  emit("paired.csv", s5.str());
  write_novelty_bins_csv(s6, bins);
  emit("error_vs_novelty_bin.csv", s6.str());
  {
    std::ostringstream s;
    s << "method,N,coverage_mean,metric_mean\n";
    for (const auto& r : scaling)
      s << r.method << ',' << r.budget << ',' << format_double(r.coverage_mean) << ','
        << format_double(r.mean) << '\n';
    emit("error_vs_coverage.csv", s.str());
  }
  return outcome;
}

CommandOutcome cmd_gate(const RunConfig& config) {
  config.validate("gate");
  const auto path = config.resolve(config.quality);
  std::istringstream in(read_text(path));
  std::vector<SceneQuality> rows;
  try {
    rows = read_quality_csv(in, config.gate);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  ojson scenes = ojson::array();
  for (const auto& q : rows) scenes.push_back(gate_report(q, config.gate));
  ojson doc = {{"config", config_echo(config)},
               {"run", {{"command", "gate"}, {"key", "gate_report"}}},
               {"scenes", std::move(scenes)}};
  CommandOutcome outcome;
  const auto out = out_path(config, "gate", "gate_report.json");
  write_file_atomic(out, dump(doc));
  outcome.written.push_back(out);
  return outcome;
}

}  // namespace viewscale
