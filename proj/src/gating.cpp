#include "viewscale/gating.hpp"

#include <algorithm>
#include <cmath>

#include "viewscale/error.hpp"
#include "viewscale/random.hpp"

namespace viewscale {

void GateParams::validate() const {
  require(k > 0 && std::isfinite(k), "gate: k must be positive");
  require(std::isfinite(tau), "gate: tau must be finite");
  require(psnr_div > 0 && ssim_div > 0 && lpips_num > 0,
          "gate: divisors must be positive");
}

double scene_quality_score(double psnr, double ssim, double lpips,
                           const GateParams& params) {
  params.validate();
  require(psnr > 0 && std::isfinite(psnr),
          "scene_quality_score: psnr must be positive and finite");
  require(ssim > 0 && ssim <= 1, "scene_quality_score: ssim must lie in (0, 1]");
  require(lpips > 0 && std::isfinite(lpips),
          "scene_quality_score: lpips must be positive");
  return std::min({psnr / params.psnr_div, ssim / params.ssim_div,
                   params.lpips_num / lpips});
}

SceneQuality make_scene_quality(std::string scene_id, double psnr, double ssim,
                                double lpips, const GateParams& params,
                                QualitySource source) {
  return {std::move(scene_id), psnr, ssim, lpips,
          scene_quality_score(psnr, ssim, lpips, params), source};
}

double gate_probability(double q_s, const GateParams& params) {
  params.validate();
  require(std::isfinite(q_s), "gate_probability: q_s must be finite");
  const double x = params.k * (q_s - params.tau);
  // Evaluate on the side that cannot overflow.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const char* to_string(ObservationSource s) {
  return s == ObservationSource::gs ? "gs" : "fallback";
}

std::vector<ObservationSource> sample_observation_sources(
    double q_s, std::size_t n_draws, std::uint64_t seed, const GateParams& params) {
  const double g = gate_probability(q_s, params);
  RandomStream rng(derive_key(seed, fnv1a64("observation_source")));
  std::vector<ObservationSource> out;
  out.reserve(n_draws);
  for (std::size_t i = 0; i < n_draws; ++i)
    out.push_back(rng.bernoulli(g) ? ObservationSource::gs : ObservationSource::fallback);
  return out;
}

PsnrResult psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "psnr: image shapes differ");
  require(a.size() > 0, "psnr: images are empty");
  const double mse = (a - b).array().square().mean();
  if (mse == 0.0) return {kPsnrCap, true};
  return {std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse)), false};
}

namespace {

Eigen::MatrixXd gaussian_window() {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  Eigen::VectorXd g(kSize);
  for (int i = 0; i < kSize; ++i) {
    const double x = i - kSize / 2;
    g[i] = std::exp(-(x * x) / (2 * kSigma * kSigma));
  }
  g /= g.sum();
  return g * g.transpose();
}

Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img, const Eigen::MatrixXd& w) {
  const Eigen::Index rows = img.rows() - w.rows() + 1;
  const Eigen::Index cols = img.cols() - w.cols() + 1;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = img.block(r, c, w.rows(), w.cols()).cwiseProduct(w).sum();
  return out;
}

}  // namespace

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "ssim: image shapes differ");
  require(a.rows() >= 11 && a.cols() >= 11, "ssim: images must be at least 11x11");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const Eigen::MatrixXd w = gaussian_window();
  const Eigen::ArrayXXd mu_a = filter_valid(a, w).array();
  const Eigen::ArrayXXd mu_b = filter_valid(b, w).array();
  const Eigen::ArrayXXd aa = filter_valid(a.cwiseProduct(a), w).array() - mu_a.square();
  const Eigen::ArrayXXd bb = filter_valid(b.cwiseProduct(b), w).array() - mu_b.square();
  const Eigen::ArrayXXd ab = filter_valid(a.cwiseProduct(b), w).array() - mu_a * mu_b;
  const Eigen::ArrayXXd map = ((2 * mu_a * mu_b + c1) * (2 * ab + c2)) /
                              ((mu_a.square() + mu_b.square() + c1) * (aa + bb + c2));
  return map.mean();
}

}  // namespace viewscale
