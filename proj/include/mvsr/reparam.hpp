#pragma once

#include <cstdint>

#include "mvsr/kernels.hpp"
#include "mvsr/weights.hpp"

namespace mvsr {

/// Parallel 3x3, 1x3 and 3x1 branches whose outputs are summed.
struct AsymBranchGroup {
  ConvParams k33;
  ConvParams k13;
  ConvParams k31;

  /// Throws ShapeError unless the kernel sizes are 3x3/1x3/3x1 and all
  /// branches agree on Cin and Cout.
  void validate() const;
};

/// Collapses the three branches into one 3x3 convolution by adding the 1x3
/// kernel into the centre row and the 3x1 kernel into the centre column.
ConvParams fuse_acnet(const AsymBranchGroup& group);

/// Evaluates the group as three separate convolutions and sums them.
Tensor conv2d_branches(const Tensor& input, const AsymBranchGroup& group, const ExecOptions& exec = {});

/// Splits a 3x3 kernel into a random branch group that fuses back to it.
/// Every branch is a seeded fraction of the original taps, so a zero kernel
/// yields an all-zero group.
AsymBranchGroup expand_acnet(const ConvParams& params, std::uint64_t seed);

// Container naming: a branch group for layer L is stored as
// L.k33 L.k13 L.k31 L.b33 L.b13 L.b31; a plain convolution as L.kernel L.bias.
bool has_branch_group(const WeightStore& store, const std::string& layer);
AsymBranchGroup read_branch_group(const WeightStore& store, const std::string& layer);
void write_branch_group(WeightStore& store, const std::string& layer, const AsymBranchGroup& group);

ConvParams read_conv(const WeightStore& store, const std::string& layer);
void write_conv(WeightStore& store, const std::string& layer, const ConvParams& params);

/// Replaces every branch group in `store` by its fused L.kernel / L.bias
/// pair. Other tensors pass through untouched.
WeightStore fuse_store(const WeightStore& store);

}  // namespace mvsr
