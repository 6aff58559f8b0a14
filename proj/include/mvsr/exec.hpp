#pragma once

#include <cstddef>
#include <vector>

namespace mvsr {

/// Which implementation a kernel dispatches to.
///
/// `reference` is the literal loop definition and serves as the oracle;
/// `optimized` must agree with it to 1e-5 and is the default.
enum class KernelMode { reference, optimized };

/// Per-call instrumentation. Owned by the caller, never shared between
/// concurrent forward passes.
struct OpStats {
  std::size_t conv2d_calls = 0;
  // One entry per IMDB_s block evaluated: channel counts in the order
  // input, distilled1, remain1, conv2 out, distilled2, remain2, conv3 out,
  // concat, output.
  std::vector<std::vector<int>> imdb_traces;
};

struct ExecOptions {
  KernelMode mode = KernelMode::optimized;
  int threads = 0;  // 0: hardware concurrency
  bool validate = false;  // check every kernel output for NaN/Inf
  OpStats* stats = nullptr;

  int resolved_threads() const;
};

}  // namespace mvsr
