#pragma once

// Shared helpers for the unit and acceptance tests: scratch directories and
// independent oracles written straight from the kernel definitions, in double
// precision, without sharing code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mvsr/kernels.hpp"
#include "mvsr/random.hpp"
#include "mvsr/tensor.hpp"

namespace mvsr::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("mvsr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Direct 7-loop convolution with double accumulation.
inline Tensor oracle_conv2d(const Tensor& x, const ConvParams& p) {
  const int KH = p.kernel_h(), KW = p.kernel_w(), CI = p.in_channels(), CO = p.out_channels();
  Tensor out(Shape{x.n(), x.h(), x.w(), CO});
  for (int n = 0; n < x.n(); ++n)
    for (int h = 0; h < x.h(); ++h)
      for (int w = 0; w < x.w(); ++w)
        for (int co = 0; co < CO; ++co) {
          double acc = p.bias[static_cast<std::size_t>(co)];
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw)
              for (int ci = 0; ci < CI; ++ci) {
                const int ih = h + kh - (KH - 1) / 2;
                const int iw = w + kw - (KW - 1) / 2;
                if (ih < 0 || ih >= x.h() || iw < 0 || iw >= x.w()) continue;
                acc += static_cast<double>(x.at(n, ih, iw, ci)) * p.kernel.at(kh, kw, ci, co);
              }
          out.at(n, h, w, co) = static_cast<float>(acc);
        }
  return out;
}

inline double keys_cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

inline double tent(double t) { return std::max(0.0, 1.0 - std::abs(t)); }

// Weights of one output sample along one axis: (source index, weight) pairs,
// clamped to the border and normalized.
struct Tap {
  int index;
  double weight;
};

inline std::vector<Tap> axis_taps(int o, int in, int out, bool cubic, bool antialias) {
  const double ratio = static_cast<double>(in) / out;
  const double center = (o + 0.5) * ratio - 0.5;
  const double stretch = (antialias && ratio > 1.0) ? ratio : 1.0;
  const double radius = (cubic ? 2.0 : 1.0) * stretch;
  std::vector<Tap> taps;
  double sum = 0.0;
  for (int i = static_cast<int>(std::floor(center - radius)) - 1; i <= static_cast<int>(std::ceil(center + radius)) + 1;
       ++i) {
    const double d = (i - center) / stretch;
    const double w = cubic ? keys_cubic(d) : tent(d);
    if (w == 0.0) continue;
    taps.push_back({std::clamp(i, 0, in - 1), w});
    sum += w;
  }
  for (Tap& t : taps) t.weight /= sum;
  return taps;
}

// Non-separable 2-D evaluation: every output sums wy * wx * x over its tap
// rectangle.
inline Tensor oracle_resize(const Tensor& x, int out_h, int out_w, bool cubic, bool antialias) {
  Tensor out(Shape{x.n(), out_h, out_w, x.c()});
  for (int y = 0; y < out_h; ++y) {
    const auto ty = axis_taps(y, x.h(), out_h, cubic, antialias);
    for (int q = 0; q < out_w; ++q) {
      const auto tx = axis_taps(q, x.w(), out_w, cubic, antialias);
      for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
          double acc = 0.0;
          for (const Tap& a : ty)
            for (const Tap& b : tx) acc += a.weight * b.weight * x.at(n, a.index, b.index, c);
          out.at(n, y, q, c) = static_cast<float>(acc);
        }
    }
  }
  return out;
}

// SSIM with the full 11x11 window evaluated at every valid position.
inline double oracle_ssim(const Tensor& a, const Tensor& b) {
  constexpr int K = 11;
  double g2[K][K];
  double norm = 0.0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      const double di = i - 5, dj = j - 5;
      g2[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      norm += g2[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  long count = 0;
  for (int n = 0; n < a.n(); ++n)
    for (int c = 0; c < a.c(); ++c) {
      double plane = 0.0;
      for (int r = 0; r + K <= a.h(); ++r)
        for (int q = 0; q + K <= a.w(); ++q) {
          double mx = 0, my = 0;
          for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
              mx += g2[i][j] / norm * a.at(n, r + i, q + j, c);
              my += g2[i][j] / norm * b.at(n, r + i, q + j, c);
            }
          double vx = 0, vy = 0, cov = 0;
          for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
              const double dx = a.at(n, r + i, q + j, c) - mx;
              const double dy = b.at(n, r + i, q + j, c) - my;
              vx += g2[i][j] / norm * dx * dx;
              vy += g2[i][j] / norm * dy * dy;
              cov += g2[i][j] / norm * dx * dy;
            }
          plane += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
      total += plane / ((a.h() - K + 1) * (a.w() - K + 1));
      ++count;
    }
  return total / count;
}

inline ConvParams random_conv(int kh, int kw, int cin, int cout, std::uint64_t seed, float scale = 1.0f) {
  ConvParams p{random_tensor(Shape{kh, kw, cin, cout}, seed, -scale, scale), {}};
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < cout; ++i) p.bias.push_back(rng.uniform(-scale, scale));
  return p;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

}  // namespace mvsr::testing
