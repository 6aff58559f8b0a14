#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvsr/clip.hpp"
#include "mvsr/tensor.hpp"

namespace mvsr {

/// Returned for identical inputs instead of +inf.
inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE) over all pixels and channels jointly.
double psnr(const Tensor& pred, const Tensor& ref, double peak = 1.0);

/// Mean SSIM over valid (unpadded) 11x11 Gaussian windows, sigma 1.5,
/// K1 = 0.01, K2 = 0.03, peak 1. Each channel of each batch item is scored
/// separately and the results are averaged. Requires H, W >= 11.
double ssim(const Tensor& pred, const Tensor& ref);

struct FrameMetrics {
  int index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct ClipReport {
  std::string name;
  std::vector<FrameMetrics> frames;
  double psnr = 0.0;  // mean of per-frame dB values
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<ClipReport> clips;
  double psnr = 0.0;  // mean over clips
  double ssim = 0.0;
};

ClipReport evaluate_clip(const ClipSequence& pred, const ClipSequence& ref);
EvalReport summarize(std::vector<ClipReport> clips);

/// {"clips":[{"name","psnr","ssim","frames":[{"i","psnr","ssim"}]}],"psnr","ssim"}
nlohmann::json to_json(const EvalReport& report);

}  // namespace mvsr
