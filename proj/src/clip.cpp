#include "mvsr/clip.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvsr/error.hpp"
#include "mvsr/kernels.hpp"
#include "mvsr/models.hpp"
#include "mvsr/random.hpp"

namespace fs = std::filesystem;

namespace mvsr {

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) { return ch >= '0' && ch <= '9'; });
}

std::string frame_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 8) digits.insert(0, 8 - digits.size(), '0');
  return digits + ".png";
}

}  // namespace

void ClipSequence::validate() const {
  if (frames.empty()) throw NoFramesError("clip '" + name + "' has no frames");
  const Shape first = frames.front().shape();
  for (const Tensor& f : frames) {
    if (f.empty() || f.n() != 1 || f.c() != 3) {
      throw ShapeError("clip '" + name + "': frames must be [1,H,W,3], got " + to_string(f.shape()));
    }
    if (f.shape() != first) {
      throw ShapeError("clip '" + name + "': frame sizes differ (" + to_string(f.shape()) + " vs " +
                       to_string(first) + ")");
    }
  }
}

Tensor read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Tensor t = Tensor::uninitialized(Shape{1, static_cast<int>(image.height), static_cast<int>(image.width), 3});
  std::transform(buffer.begin(), buffer.end(), t.data().begin(),
                 [](png_byte b) { return static_cast<float>(b) / 255.0f; });
  return t;
}

void write_png(const fs::path& path, const Tensor& frame) {
  if (frame.empty() || frame.n() != 1 || frame.c() != 3) {
    throw ShapeError("write_png: frame must be [1,H,W,3], got " + to_string(frame.shape()));
  }
  std::vector<png_byte> buffer(frame.size());
  std::transform(frame.data().begin(), frame.data().end(), buffer.begin(), [](float v) {
    const float clamped = std::clamp(std::isnan(v) ? 0.0f : v, 0.0f, 1.0f);
    return static_cast<png_byte>(std::lround(clamped * 255.0f));
  });
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.w());
  image.height = static_cast<png_uint_32>(frame.h());
  image.format = PNG_FORMAT_RGB;
  fs::path tmp = path;
  tmp += ".tmp";
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

ClipSequence load_clip(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("clip directory does not exist: " + dir.string());
  std::vector<std::pair<unsigned long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (!all_digits(stem) || stem.size() > 18) continue;
    files.emplace_back(std::stoull(stem), entry.path());
  }
  if (files.empty()) throw NoFramesError("no frames in " + dir.string());
  std::sort(files.begin(), files.end());
  ClipSequence clip;
  clip.name = dir.filename().string();
  if (clip.name.empty()) clip.name = dir.parent_path().filename().string();
  for (const auto& [index, path] : files) clip.frames.push_back(read_png(path));
  clip.validate();
  return clip;
}

void save_clip(const ClipSequence& clip, const fs::path& dir) {
  clip.validate();
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) write_png(dir / frame_name(i), clip.frames[i]);
}

ClipSequence degrade_clip(const ClipSequence& clip, int scale, const ExecOptions& exec) {
  clip.validate();
  if (scale < 1) throw ValueError("degrade: scale must be positive");
  if (clip.height() % scale != 0 || clip.width() % scale != 0) {
    throw ShapeError("degrade: " + std::to_string(clip.width()) + "x" + std::to_string(clip.height()) +
                     " is not divisible by " + std::to_string(scale));
  }
  ClipSequence out{clip.name, {}, clip.fps};
  for (const Tensor& f : clip.frames) {
    Tensor small = resize_bicubic(f, f.h() / scale, f.w() / scale, true, exec);
    for (float& v : small.data()) v = std::clamp(v, 0.0f, 1.0f);
    out.frames.push_back(std::move(small));
  }
  return out;
}

ClipSequence synthetic_clip(std::string name, int frames, int height, int width, std::uint64_t seed) {
  if (frames < 1 || height < 1 || width < 1) throw ValueError("synthetic_clip: extents must be positive");
  Rng rng(seed);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  struct Wave {
    double fx, fy, vx, vy, phase;
  };
  Wave waves[3];
  for (Wave& w : waves) {
    w = {rng.uniform(0.5f, 2.5f), rng.uniform(0.5f, 2.5f), rng.uniform(-1.5f, 1.5f), rng.uniform(-1.5f, 1.5f),
         rng.uniform(0.0f, 6.28f)};
  }
  const double tilt = rng.uniform(-0.1f, 0.1f);
  ClipSequence clip{std::move(name), {}, 24.0};
  for (int t = 0; t < frames; ++t) {
    Tensor f(Shape{1, height, width, 3});
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width;
        const double v = static_cast<double>(y) / height;
        for (int c = 0; c < 3; ++c) {
          const Wave& w = waves[c];
          const double s = std::sin(two_pi * (w.fx * u + w.fy * v) + w.phase + 0.05 * t * (w.vx + w.vy));
          const double value = 0.5 + 0.3 * s + tilt * (u - 0.5) + 0.05 * std::cos(two_pi * (u + 0.02 * t * w.vx));
          f.at(0, y, x, c) = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
      }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

Tensor make_clip_tensor(std::span<const Tensor> frames, int expected_frames) {
  if (frames.empty()) throw ShapeError("make_clip_tensor: no frames");
  if (expected_frames > 0 && frames.size() != static_cast<std::size_t>(expected_frames)) {
    throw ShapeError("make_clip_tensor: window has " + std::to_string(frames.size()) + " frames, expected " +
                     std::to_string(expected_frames));
  }
  for (const Tensor& f : frames) {
    if (f.empty() || f.n() != 1 || f.c() != 3) {
      throw ShapeError("make_clip_tensor: frames must be [1,H,W,3], got " + to_string(f.shape()));
    }
  }
  return pack_frames(stack_batch(frames));
}

std::vector<Tensor> unmake_clip_tensor(const Tensor& packed) {
  const Tensor frames = unpack_frames(packed);
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(frames.n()));
  for (int f = 0; f < frames.n(); ++f) out.push_back(slice_batch(frames, f));
  return out;
}

}  // namespace mvsr
