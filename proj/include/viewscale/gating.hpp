#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace viewscale {

struct GateParams {
  double k = 8.0;
  double tau = 1.0;
  double psnr_div = 10.0;
  double ssim_div = 0.20;
  double lpips_num = 0.80;

  void validate() const;
};

enum class QualitySource { measured, supplied };

struct SceneQuality {
  std::string scene_id;
  double psnr = 0;
  double ssim = 0;
  double lpips = 0;
  double q_s = 0;
  QualitySource source = QualitySource::supplied;
};

/// min(psnr / psnr_div, ssim / ssim_div, lpips_num / lpips).
double scene_quality_score(double psnr, double ssim, double lpips,
                           const GateParams& params = {});

SceneQuality make_scene_quality(std::string scene_id, double psnr, double ssim,
                                double lpips, const GateParams& params = {},
                                QualitySource source = QualitySource::supplied);

/// sigmoid(k (q_s - tau)).
double gate_probability(double q_s, const GateParams& params = {});

enum class ObservationSource { gs, fallback };

const char* to_string(ObservationSource s);

/// Seeded Bernoulli(g(q_s)) stream: gs with probability g, fallback otherwise.
std::vector<ObservationSource> sample_observation_sources(
    double q_s, std::size_t n_draws, std::uint64_t seed,
    const GateParams& params = {});

struct PsnrResult {
  double db = 0;
  bool infinite = false;  // zero MSE; db holds kPsnrCap
};

inline constexpr double kPsnrCap = 300.0;

/// 10 log10(1 / MSE) for images with values in [0, 1].
PsnrResult psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, K1 0.01, K2 0.03,
/// data range 1).
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace viewscale
