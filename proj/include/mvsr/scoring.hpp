#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvsr/exec.hpp"
#include "mvsr/models.hpp"
#include "mvsr/tensor.hpp"

namespace mvsr {

/// Normalization constant of the challenge score. Must be positive.
struct ScoreParams {
  double c = 1.0;
};

/// 2^(2 * psnr) / (C * runtime_ms). Throws ValueError for nonpositive runtime or C.
double final_score(double psnr_db, double runtime_ms, ScoreParams params);

/// Solves the score formula for C given one published (psnr, runtime, score) row.
ScoreParams fit_c(double anchor_psnr, double anchor_runtime_ms, double anchor_score);

/// One row of the challenge results table.
struct TableRow {
  std::string team;
  double psnr;
  double runtime_ms;
  double score;
};

/// Final-phase rows. The last team's GPU run failed, so its CPU runtime is
/// the one that was scored.
std::vector<TableRow> challenge_table();

struct BenchReport {
  std::string arch;
  Shape dims;
  int warmup = 0;
  int runs = 0;
  int threads = 1;
  KernelMode mode = KernelMode::optimized;
  std::vector<double> times_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p90_ms = 0.0;

  /// p90 / median above 2 with at least 20 runs hints at a busy machine.
  bool noisy() const;
};

/// Fills mean / median / nearest-rank p90 from times_ms.
void compute_statistics(BenchReport& report);

/// Runs `warmup` untimed and `runs` timed forward passes on a fixed random
/// [0, 1] input of `dims`, timing only the forward call with a steady clock.
BenchReport benchmark(const Model& model, Shape dims, int warmup, int runs, int threads,
                      KernelMode mode = KernelMode::optimized);

/// {"arch","dims","warmup","runs","threads","times_ms":[...],"mean_ms","median_ms","p90_ms"}
nlohmann::json to_json(const BenchReport& report);

}  // namespace mvsr
