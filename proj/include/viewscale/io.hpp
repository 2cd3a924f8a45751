#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "viewscale/control_proxy.hpp"
#include "viewscale/coverage.hpp"
#include "viewscale/diagnostics.hpp"
#include "viewscale/gating.hpp"
#include "viewscale/sampling.hpp"
#include "viewscale/selection.hpp"

namespace viewscale {

using ojson = nlohmann::ordered_json;

// Parameter echoes. The *_from_json readers accept partial objects (missing
// keys keep their defaults) and reject unknown keys, naming `where`.
ojson to_json(const SamplerParams& p);
ojson to_json(const CoverageParams& p);
ojson to_json(const GateParams& p);
ojson to_json(const EpisodeConfig& c);
ojson to_json(const Intrinsicsd& k);
/// Selection knobs only (budget and policy are per-run, seed is global).
ojson selection_knobs_to_json(const SelectionParams& p);

void from_json(const nlohmann::json& j, SamplerParams& p, const std::string& where);
void from_json(const nlohmann::json& j, CoverageParams& p, const std::string& where);
void from_json(const nlohmann::json& j, GateParams& p, const std::string& where);
void from_json(const nlohmann::json& j, EpisodeConfig& c, const std::string& where);
void from_json(const nlohmann::json& j, Intrinsicsd& k, const std::string& where);
void selection_knobs_from_json(const nlohmann::json& j, SelectionParams& p,
                               const std::string& where);

ojson pose_to_json(const Posed& pose);

/// {scene_id, seed, params, candidates: [{index, position, quaternion [w,x,y,z],
/// yaw, provenance}]}.
ojson pool_to_json(const CandidatePool& pool);
CandidatePool pool_from_json(const nlohmann::json& j);

/// {params, selections: [{pool_index, gain, novelty_weight,
/// cumulative_coverage}], training_stream, coverage_fraction}. Cumulative
/// coverage is the fraction of the scene union.
ojson selection_to_json(const SelectionResult& result, double coverage_fraction);
void write_selection_trace_csv(std::ostream& out, const SelectionResult& result);

/// Header scene_id,psnr,ssim,lpips.
std::vector<SceneQuality> read_quality_csv(std::istream& in, const GateParams& params);
/// {scene_id, q_s, gate_prob, bucket}; bucket is "high" when q_s >= tau.
ojson gate_report(const SceneQuality& quality, const GateParams& params);

ojson to_json(const MetricEstimate& m);
ojson benchmark_to_json(const BenchmarkRun& run);
void write_episode_csv(std::ostream& out, std::span<const EpisodeLog> episodes);
/// Header episode,step,predicted_clearance. "inf" is accepted.
ClearanceEstimator::Script read_script_csv(std::istream& in);

/// Header method,N,scene_id,metric,coverage_fraction.
std::vector<RunRecord> read_run_records_csv(std::istream& in);
/// Header method,N,scene_id,frame,novelty,error. Attaches per-frame values to
/// the matching records (frames sorted by index).
void attach_frames_csv(std::istream& in, std::vector<RunRecord>& records);

ojson to_json(const WilcoxonResult& w);
void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows);
void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows);
void write_correlation_csv(std::ostream& out, std::span<const CorrelationRow> rows);
void write_tail_csv(std::ostream& out, std::span<const TailRow> rows);
void write_paired_csv(std::ostream& out, std::span<const PairedRow> rows);
void write_novelty_bins_csv(std::ostream& out, std::span<const NoveltyBinPoint> points);

/// Shortest round-trip decimal form (the same digits the JSON writer uses).
std::string format_double(double v);

/// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Pretty JSON with a trailing newline.
std::string dump(const ojson& j);

/// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace viewscale
