#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvsr/exec.hpp"
#include "mvsr/tensor.hpp"

namespace mvsr {

/// One video clip: frames are [1, H, W, 3] tensors with values in [0, 1].
struct ClipSequence {
  std::string name;
  std::vector<Tensor> frames;
  double fps = 24.0;

  int height() const { return frames.empty() ? 0 : frames.front().h(); }
  int width() const { return frames.empty() ? 0 : frames.front().w(); }
  std::size_t size() const { return frames.size(); }

  /// Throws NoFramesError if empty, ShapeError if frames disagree in size.
  void validate() const;
};

/// 8-bit RGB PNG <-> [1, H, W, 3] float tensor. Writing clamps to [0, 1] and
/// rounds x * 255; the file is written atomically.
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& frame);

/// Loads `dir/NNNNNNNN.png` frames in ascending numeric order of the file stem.
/// Files whose stem is not all digits are ignored.
ClipSequence load_clip(const std::filesystem::path& dir);
/// Writes frames as dir/00000000.png, 00000001.png, ...
void save_clip(const ClipSequence& clip, const std::filesystem::path& dir);

/// Bicubic antialiased downscale of every frame by `scale`, clamped to [0, 1].
ClipSequence degrade_clip(const ClipSequence& clip, int scale = 4, const ExecOptions& exec = {});

/// Deterministic moving-gradient clip used by dataset-free tests.
ClipSequence synthetic_clip(std::string name, int frames, int height, int width, std::uint64_t seed);

/// Packs F frames [1, H, W, 3] into [1, H, W, 3F] and back. A positive
/// `expected_frames` rejects windows of any other length.
Tensor make_clip_tensor(std::span<const Tensor> frames, int expected_frames = 0);
std::vector<Tensor> unmake_clip_tensor(const Tensor& packed);

}  // namespace mvsr
