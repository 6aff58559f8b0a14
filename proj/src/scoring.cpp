#include "mvsr/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mvsr/error.hpp"
#include "mvsr/random.hpp"

namespace mvsr {

namespace {

constexpr std::uint64_t kBenchInputSeed = 0x5eed;

}  // namespace

double final_score(double psnr_db, double runtime_ms, ScoreParams params) {
  if (!(runtime_ms > 0.0)) throw ValueError("final_score: runtime must be positive");
  if (!(params.c > 0.0)) throw ValueError("final_score: C must be positive");
  return std::exp2(2.0 * psnr_db) / (params.c * runtime_ms);
}

ScoreParams fit_c(double anchor_psnr, double anchor_runtime_ms, double anchor_score) {
  if (!(anchor_runtime_ms > 0.0)) throw ValueError("fit_c: runtime must be positive");
  if (!(anchor_score > 0.0)) throw ValueError("fit_c: score must be positive");
  if (anchor_psnr < 0.0) throw ValueError("fit_c: PSNR must be non-negative");
  return ScoreParams{std::exp2(2.0 * anchor_psnr) / (anchor_runtime_ms * anchor_score)};
}

std::vector<TableRow> challenge_table() {
  return {
      {"Diggers", 28.33, 199.0, 8.13},
      {"ZTE VIP", 27.85, 113.0, 7.36},
      {"Rainbow", 27.99, 180.0, 5.61},
      {"Noah_TerminalVision", 27.97, 448.0, 2.19},
  };
}

bool BenchReport::noisy() const { return runs >= 20 && median_ms > 0.0 && p90_ms / median_ms > 2.0; }

void compute_statistics(BenchReport& r) {
  if (r.times_ms.empty()) throw ValueError("benchmark: no samples");
  std::vector<double> sorted = r.times_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.mean_ms = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  r.median_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n)));
  r.p90_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
}

BenchReport benchmark(const Model& model, Shape dims, int warmup, int runs, int threads, KernelMode mode) {
  if (runs < 1) throw ValueError("benchmark: runs must be at least 1");
  if (warmup < 0) throw ValueError("benchmark: warmup must be non-negative");
  BenchReport report;
  report.arch = std::string(arch_name(model.spec().arch));
  report.dims = dims;
  report.warmup = warmup;
  report.runs = runs;
  report.mode = mode;

  ExecOptions exec;
  exec.mode = mode;
  exec.threads = threads;
  report.threads = exec.resolved_threads();

  const Tensor input = random_tensor(dims, kBenchInputSeed, 0.0f, 1.0f);
  for (int i = 0; i < warmup; ++i) (void)model.forward(input, exec);
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < runs; ++i) {
    const auto start = clock::now();
    const Tensor out = model.forward(input, exec);
    const auto stop = clock::now();
    report.times_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  compute_statistics(report);
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  return {{"arch", r.arch},
          {"dims", {r.dims.n, r.dims.h, r.dims.w, r.dims.c}},
          {"warmup", r.warmup},
          {"runs", r.runs},
          {"threads", r.threads},
          {"times_ms", r.times_ms},
          {"mean_ms", r.mean_ms},
          {"median_ms", r.median_ms},
          {"p90_ms", r.p90_ms}};
}

}  // namespace mvsr
