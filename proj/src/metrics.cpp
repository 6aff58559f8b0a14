#include "mvsr/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mvsr/error.hpp"

namespace mvsr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);

std::array<double, kWindow> gaussian_1d() {
  std::array<double, kWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.empty() || b.empty()) throw ShapeError(std::string(op) + ": empty tensor");
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// Mean SSIM of one (batch, channel) plane using separable Gaussian moments.
double ssim_plane(const Tensor& x, const Tensor& y, int n, int c, const std::array<double, kWindow>& g) {
  const int H = x.h(), W = x.w();
  const int vh = H - kWindow + 1, vw = W - kWindow + 1;
  // Horizontal pass: five moment maps of size H x vw.
  const std::size_t mid_size = static_cast<std::size_t>(H) * vw;
  std::vector<double> mx(mid_size), my(mid_size), mxx(mid_size), myy(mid_size), mxy(mid_size);
  for (int r = 0; r < H; ++r)
    for (int q = 0; q < vw; ++q) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < kWindow; ++k) {
        const double a = x.at(n, r, q + k, c);
        const double b = y.at(n, r, q + k, c);
        sx += g[k] * a;
        sy += g[k] * b;
        sxx += g[k] * a * a;
        syy += g[k] * b * b;
        sxy += g[k] * a * b;
      }
      const std::size_t i = static_cast<std::size_t>(r) * vw + q;
      mx[i] = sx;
      my[i] = sy;
      mxx[i] = sxx;
      myy[i] = syy;
      mxy[i] = sxy;
    }
  double total = 0.0;
  for (int r = 0; r < vh; ++r)
    for (int q = 0; q < vw; ++q) {
      double ux = 0, uy = 0, exx = 0, eyy = 0, exy = 0;
      for (int k = 0; k < kWindow; ++k) {
        const std::size_t i = static_cast<std::size_t>(r + k) * vw + q;
        ux += g[k] * mx[i];
        uy += g[k] * my[i];
        exx += g[k] * mxx[i];
        eyy += g[k] * myy[i];
        exy += g[k] * mxy[i];
      }
      const double vx = exx - ux * ux;
      const double vy = eyy - uy * uy;
      const double cov = exy - ux * uy;
      total += ((2.0 * ux * uy + kC1) * (2.0 * cov + kC2)) / ((ux * ux + uy * uy + kC1) * (vx + vy + kC2));
    }
  return total / (static_cast<double>(vh) * vw);
}

}  // namespace

double psnr(const Tensor& pred, const Tensor& ref, double peak) {
  require_same_shape(pred, ref, "psnr");
  if (!(peak > 0.0)) throw ValueError("psnr: peak must be positive");
  double sum = 0.0;
  auto p = pred.data();
  auto r = ref.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(r[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(p.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& pred, const Tensor& ref) {
  require_same_shape(pred, ref, "ssim");
  if (pred.h() < kWindow || pred.w() < kWindow) {
    throw ShapeError("ssim: frame " + std::to_string(pred.h()) + "x" + std::to_string(pred.w()) +
                     " is smaller than the 11x11 window");
  }
  const auto g = gaussian_1d();
  double total = 0.0;
  for (int n = 0; n < pred.n(); ++n)
    for (int c = 0; c < pred.c(); ++c) total += ssim_plane(pred, ref, n, c, g);
  return total / (static_cast<double>(pred.n()) * pred.c());
}

ClipReport evaluate_clip(const ClipSequence& pred, const ClipSequence& ref) {
  pred.validate();
  ref.validate();
  if (pred.size() != ref.size()) {
    throw ShapeError("clip '" + ref.name + "': prediction has " + std::to_string(pred.size()) +
                     " frames, reference has " + std::to_string(ref.size()));
  }
  if (pred.height() != ref.height() || pred.width() != ref.width()) {
    throw ShapeError("clip '" + ref.name + "': prediction is " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + ", reference is " + std::to_string(ref.width()) + "x" +
                     std::to_string(ref.height()));
  }
  ClipReport report;
  report.name = ref.name;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    report.frames.push_back(
        {static_cast<int>(i), psnr(pred.frames[i], ref.frames[i]), ssim(pred.frames[i], ref.frames[i])});
  }
  for (const FrameMetrics& f : report.frames) {
    report.psnr += f.psnr;
    report.ssim += f.ssim;
  }
  report.psnr /= static_cast<double>(report.frames.size());
  report.ssim /= static_cast<double>(report.frames.size());
  return report;
}

EvalReport summarize(std::vector<ClipReport> clips) {
  EvalReport r;
  r.clips = std::move(clips);
  if (r.clips.empty()) return r;
  for (const ClipReport& c : r.clips) {
    r.psnr += c.psnr;
    r.ssim += c.ssim;
  }
  r.psnr /= static_cast<double>(r.clips.size());
  r.ssim /= static_cast<double>(r.clips.size());
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json clips = nlohmann::json::array();
  for (const ClipReport& c : report.clips) {
    nlohmann::json frames = nlohmann::json::array();
    for (const FrameMetrics& f : c.frames) frames.push_back({{"i", f.index}, {"psnr", f.psnr}, {"ssim", f.ssim}});
    clips.push_back({{"name", c.name}, {"psnr", c.psnr}, {"ssim", c.ssim}, {"frames", std::move(frames)}});
  }
  return {{"clips", std::move(clips)}, {"psnr", report.psnr}, {"ssim", report.ssim}};
}

}  // namespace mvsr
