#pragma once

#include <span>
#include <vector>

#include "mvsr/exec.hpp"
#include "mvsr/tensor.hpp"

namespace mvsr {

/// Stride-1, same-zero-padded convolution weights.
///
/// `kernel` is laid out [kH, kW, Cin, Cout] in the tensor's four extents;
/// kH and kW are 1 or 3 so 1x3 and 3x1 kernels are representable.
struct ConvParams {
  Tensor kernel;
  std::vector<float> bias;

  int kernel_h() const { return kernel.n(); }
  int kernel_w() const { return kernel.h(); }
  int in_channels() const { return kernel.w(); }
  int out_channels() const { return kernel.c(); }

  /// Throws ShapeError on an unsupported kernel size or bias length.
  void validate() const;
};

/// Accumulation order per output element is fixed at (kh, kw, cin) for both
/// modes, then the bias is added; results do not depend on thread count.
Tensor conv2d(const Tensor& input, const ConvParams& params, const ExecOptions& exec = {});

// Elementwise ops take their first operand by value and reuse its buffer.
Tensor relu(Tensor input);
Tensor sigmoid(Tensor input);

/// output(n, h*b+bh, w*b+bw, c) = input(n, h, w, (bh*b + bw) * (C/b^2) + c)
Tensor depth_to_space(const Tensor& input, int block);
Tensor space_to_depth(const Tensor& input, int block);

/// Half-pixel centers, no corner alignment, source coordinate clamped to the image.
Tensor resize_bilinear(const Tensor& input, int out_h, int out_w, const ExecOptions& exec = {});

/// Keys cubic (a = -0.5) with edge clamping. With `antialias` and a shrinking
/// axis the kernel is stretched by 1/scale (imresize-style). Tap weights are
/// normalized to sum to one.
Tensor resize_bicubic(const Tensor& input, int out_h, int out_w, bool antialias,
                      const ExecOptions& exec = {});

Tensor add(Tensor a, const Tensor& b);
Tensor multiply(Tensor a, const Tensor& b);
Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::vector<Tensor> split_channels(const Tensor& input, std::span<const int> sizes);

/// Batch-axis helpers for per-frame processing.
Tensor slice_batch(const Tensor& input, int index);
Tensor stack_batch(std::span<const Tensor> items);

}  // namespace mvsr
