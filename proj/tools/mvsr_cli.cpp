// mvsr: command-line front end for the video super-resolution engine.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvsr/clip.hpp"
#include "mvsr/error.hpp"
#include "mvsr/metrics.hpp"
#include "mvsr/models.hpp"
#include "mvsr/reparam.hpp"
#include "mvsr/scoring.hpp"
#include "mvsr/weights.hpp"

namespace fs = std::filesystem;

namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

// Runs fn, prefixing any library error with the name of the failing stage.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

bool holds_frames(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") return true;
  }
  return false;
}

// A clip root is either one clip directory or a directory of clip directories.
struct ClipDir {
  std::string name;
  fs::path path;
};

std::vector<ClipDir> list_clips(const fs::path& root) {
  if (!fs::is_directory(root)) throw mvsr::IoError("not a directory: " + root.string());
  if (holds_frames(root)) return {{root.filename().string(), root}};
  std::vector<ClipDir> clips;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && holds_frames(entry.path())) {
      clips.push_back({entry.path().filename().string(), entry.path()});
    }
  }
  std::sort(clips.begin(), clips.end(), [](const ClipDir& a, const ClipDir& b) { return a.name < b.name; });
  if (clips.empty()) throw mvsr::NoFramesError("no frames under " + root.string());
  return clips;
}

bool nested(const std::vector<ClipDir>& clips, const fs::path& root) {
  return !(clips.size() == 1 && clips.front().path == root);
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  const std::string text = doc.dump(2) + "\n";
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw mvsr::IoError("cannot create " + tmp.string());
    f << text;
    if (!f) throw mvsr::IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

mvsr::ClipSequence upscale_clip(const mvsr::Model& model, const mvsr::ClipSequence& clip) {
  const int window = model.spec().frames_per_clip;
  mvsr::ClipSequence out{clip.name, {}, clip.fps};
  for (std::size_t start = 0; start < clip.size(); start += static_cast<std::size_t>(window)) {
    std::vector<mvsr::Tensor> frames;
    for (int i = 0; i < window; ++i) {
      // Pad the final partial window with the last frame; padded outputs are dropped.
      const std::size_t idx = std::min(start + static_cast<std::size_t>(i), clip.size() - 1);
      frames.push_back(clip.frames[idx]);
    }
    const mvsr::Tensor packed = mvsr::make_clip_tensor(frames, window);
    const auto upscaled = mvsr::unmake_clip_tensor(model.forward(packed));
    const std::size_t real = std::min<std::size_t>(static_cast<std::size_t>(window), clip.size() - start);
    out.frames.insert(out.frames.end(), upscaled.begin(), upscaled.begin() + static_cast<std::ptrdiff_t>(real));
  }
  return out;
}

mvsr::KernelMode parse_mode(const std::string& s) {
  if (s == "optimized") return mvsr::KernelMode::optimized;
  if (s == "reference") return mvsr::KernelMode::reference;
  throw mvsr::ValueError("unknown kernel mode '" + s + "' (expected optimized or reference)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile video super-resolution: inference, evaluation and benchmarking"};
  app.require_subcommand(1);

  // upscale
  std::string up_arch, up_weights, up_input, up_output;
  bool up_fuse = false;
  auto* upscale = app.add_subcommand("upscale", "Upscale a PNG frame sequence x4");
  upscale->add_option("--arch", up_arch, "Architecture: tinyvsrnet, evsrnet, imdn_s, birnn, bicubic_baseline")
      ->required();
  upscale->add_option("--weights", up_weights, "Weight container (not needed for bicubic_baseline)");
  upscale->add_option("--input", up_input, "Clip directory, or directory of clip directories")->required();
  upscale->add_option("--output", up_output, "Output directory")->required();
  upscale->add_flag("--fuse", up_fuse, "Fuse 3x3/1x3/3x1 branch groups into single convolutions before inference");

  // evaluate
  std::string ev_pred, ev_ref, ev_report;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM of predicted frames against references");
  evaluate->add_option("--pred", ev_pred, "Predicted clip directory")->required();
  evaluate->add_option("--ref", ev_ref, "Reference clip directory")->required();
  evaluate->add_option("--report", ev_report, "JSON report path")->required();

  // degrade
  std::string dg_input, dg_output;
  int dg_scale = 4;
  auto* degrade = app.add_subcommand("degrade", "Bicubic antialiased downscale of a frame sequence");
  degrade->add_option("--input", dg_input, "High-resolution clip directory")->required();
  degrade->add_option("--output", dg_output, "Output directory")->required();
  degrade->add_option("--scale", dg_scale, "Downscale factor")->capture_default_str()->check(CLI::PositiveNumber);

  // bench
  std::string bn_arch, bn_weights, bn_report, bn_mode = "optimized";
  std::uint64_t bn_seed = 42;
  int bn_warmup = 2, bn_runs = 20, bn_threads = 1, bn_height = 180, bn_width = 320, bn_frames = 10;
  auto* bench = app.add_subcommand("bench", "Latency benchmark of one forward pass per 10-frame clip");
  bench->add_option("--arch", bn_arch, "Architecture")->required();
  auto* bn_weights_opt = bench->add_option("--weights", bn_weights, "Weight container");
  bench->add_option("--seed", bn_seed, "Seed for random weights when --weights is absent")
      ->capture_default_str()
      ->excludes(bn_weights_opt);
  bench->add_option("--warmup", bn_warmup, "Untimed warm-up runs")->capture_default_str()->check(CLI::NonNegativeNumber);
  bench->add_option("--runs", bn_runs, "Timed runs")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--threads", bn_threads, "Worker threads (0 = all cores)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--report", bn_report, "JSON report path")->required();
  bench->add_option("--mode", bn_mode, "Kernel path: optimized or reference")->capture_default_str();
  bench->add_option("--height", bn_height, "Input frame height")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--width", bn_width, "Input frame width")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--frames", bn_frames, "Frames per clip")->capture_default_str()->check(CLI::PositiveNumber);

  // score
  double sc_psnr = 0.0, sc_runtime = 0.0;
  std::vector<double> sc_anchor;
  auto* score = app.add_subcommand("score", "Challenge final score of a (PSNR, runtime) pair");
  score->add_option("--psnr", sc_psnr, "PSNR in dB")->required();
  score->add_option("--runtime-ms", sc_runtime, "Runtime per 10 frames in ms")->required();
  score->add_option("--anchor", sc_anchor, "psnr,ms,score row used to fit C (default: the winning entry)")
      ->delimiter(',')
      ->expected(3);

  // fuse
  std::string fu_input, fu_output;
  auto* fuse = app.add_subcommand("fuse", "Collapse branch groups L.k33/k13/k31 into L.kernel/L.bias");
  fuse->add_option("--input", fu_input, "Input weight container")->required();
  fuse->add_option("--output", fu_output, "Output weight container")->required();

  // init-weights
  std::string iw_arch, iw_output, iw_form = "plain";
  std::uint64_t iw_seed = 42;
  bool iw_zero = false;
  auto* init = app.add_subcommand("init-weights", "Write seeded random (or zero) weights for an architecture");
  init->add_option("--arch", iw_arch, "Architecture")->required();
  init->add_option("--seed", iw_seed, "Random seed")->capture_default_str();
  init->add_option("--output", iw_output, "Output weight container")->required();
  init->add_option("--form", iw_form, "plain, or acnet for 3x3/1x3/3x1 branch groups")
      ->capture_default_str()
      ->check(CLI::IsMember({"plain", "acnet"}));
  init->add_flag("--zero", iw_zero, "All-zero kernels and biases");

  CLI11_PARSE(app, argc, argv);

  try {
    if (upscale->parsed()) {
      const mvsr::Arch arch = stage("arguments", [&] { return mvsr::parse_arch(up_arch); });
      const mvsr::ModelSpec spec = mvsr::model_spec(arch);
      mvsr::WeightStore weights;
      if (!spec.convs.empty()) {
        if (up_weights.empty()) throw StageError("arguments", "--weights is required for " + up_arch);
        weights = stage("load weights", [&] { return mvsr::load_weights(up_weights); });
      }
      const mvsr::Model model = stage("build model", [&] { return mvsr::Model(spec, weights, up_fuse); });
      const auto clips = stage("load clip", [&] { return list_clips(up_input); });
      const bool many = nested(clips, up_input);
      for (const ClipDir& c : clips) {
        const auto clip = stage("load clip", [&] { return mvsr::load_clip(c.path); });
        const auto result = stage("inference", [&] { return upscale_clip(model, clip); });
        const fs::path dest = many ? fs::path(up_output) / c.name : fs::path(up_output);
        stage("write frames", [&] { mvsr::save_clip(result, dest); });
      }
    } else if (evaluate->parsed()) {
      const auto preds = stage("load prediction", [&] { return list_clips(ev_pred); });
      const auto refs = stage("load reference", [&] { return list_clips(ev_ref); });
      const bool many = nested(refs, ev_ref);
      std::vector<mvsr::ClipReport> reports;
      for (const ClipDir& r : refs) {
        fs::path pred_dir;
        if (many) {
          auto it = std::find_if(preds.begin(), preds.end(), [&](const ClipDir& p) { return p.name == r.name; });
          if (it == preds.end()) throw StageError("load prediction", "no predicted clip named '" + r.name + "'");
          pred_dir = it->path;
        } else {
          if (nested(preds, ev_pred)) throw StageError("load prediction", "expected a single clip directory");
          pred_dir = preds.front().path;
        }
        auto ref_clip = stage("load reference", [&] { return mvsr::load_clip(r.path); });
        auto pred_clip = stage("load prediction", [&] { return mvsr::load_clip(pred_dir); });
        pred_clip.name = ref_clip.name = r.name;
        reports.push_back(stage("evaluate", [&] { return mvsr::evaluate_clip(pred_clip, ref_clip); }));
      }
      const mvsr::EvalReport report = mvsr::summarize(std::move(reports));
      stage("write report", [&] { write_json(ev_report, mvsr::to_json(report)); });
    } else if (degrade->parsed()) {
      const auto clips = stage("load clip", [&] { return list_clips(dg_input); });
      const bool many = nested(clips, dg_input);
      for (const ClipDir& c : clips) {
        const auto clip = stage("load clip", [&] { return mvsr::load_clip(c.path); });
        const auto small = stage("degrade", [&] { return mvsr::degrade_clip(clip, dg_scale); });
        const fs::path dest = many ? fs::path(dg_output) / c.name : fs::path(dg_output);
        stage("write frames", [&] { mvsr::save_clip(small, dest); });
      }
    } else if (bench->parsed()) {
      const mvsr::Arch arch = stage("arguments", [&] { return mvsr::parse_arch(bn_arch); });
      const mvsr::KernelMode mode = stage("arguments", [&] { return parse_mode(bn_mode); });
      const mvsr::ModelSpec spec = mvsr::model_spec(arch);
      const mvsr::WeightStore weights =
          bn_weights.empty() ? mvsr::init_weights(spec, bn_seed)
                             : stage("load weights", [&] { return mvsr::load_weights(bn_weights); });
      const mvsr::Model model = stage("build model", [&] { return mvsr::Model(spec, weights); });
      const mvsr::Shape dims{1, bn_height, bn_width, 3 * bn_frames};
      const auto report =
          stage("benchmark", [&] { return mvsr::benchmark(model, dims, bn_warmup, bn_runs, bn_threads, mode); });
      if (report.noisy()) {
        std::cerr << "warning: p90/median = " << report.p90_ms / report.median_ms
                  << " > 2; timings look noisy (busy machine?)\n";
      }
      stage("write report", [&] { write_json(bn_report, mvsr::to_json(report)); });
    } else if (score->parsed()) {
      const mvsr::TableRow anchor = mvsr::challenge_table().front();
      const double a_psnr = sc_anchor.empty() ? anchor.psnr : sc_anchor[0];
      const double a_ms = sc_anchor.empty() ? anchor.runtime_ms : sc_anchor[1];
      const double a_score = sc_anchor.empty() ? anchor.score : sc_anchor[2];
      const auto params = stage("fit C", [&] { return mvsr::fit_c(a_psnr, a_ms, a_score); });
      const double value = stage("score", [&] { return mvsr::final_score(sc_psnr, sc_runtime, params); });
      std::printf("%.6f\n", value);
    } else if (fuse->parsed()) {
      const auto store = stage("load weights", [&] { return mvsr::load_weights(fu_input); });
      const auto fused = stage("fuse", [&] { return mvsr::fuse_store(store); });
      stage("write weights", [&] { mvsr::save_weights(fused, fu_output); });
    } else if (init->parsed()) {
      const mvsr::Arch arch = stage("arguments", [&] { return mvsr::parse_arch(iw_arch); });
      const mvsr::ModelSpec spec = mvsr::model_spec(arch);
      const auto form = iw_form == "acnet" ? mvsr::WeightForm::acnet : mvsr::WeightForm::plain;
      if (iw_zero && form == mvsr::WeightForm::acnet) {
        throw StageError("arguments", "--zero and --form acnet cannot be combined");
      }
      const mvsr::WeightStore store = iw_zero ? mvsr::zero_weights(spec) : mvsr::init_weights(spec, iw_seed, form);
      stage("write weights", [&] { mvsr::save_weights(store, iw_output); });
    }
  } catch (const std::exception& e) {
    std::cerr << "mvsr " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
