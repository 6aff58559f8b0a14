#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "mvsr/clip.hpp"
#include "mvsr/error.hpp"
#include "mvsr/metrics.hpp"
#include "support.hpp"

using namespace mvsr;
using namespace mvsr::testing;

namespace {

Tensor uniform_error_frame(int h, int w, float e) { return Tensor(Shape{1, h, w, 3}, e); }

std::set<std::string> keys(const nlohmann::json& j) {
  std::set<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.insert(it.key());
  return out;
}

}  // namespace

TEST_CASE("identical inputs hit the caps") {
  const Tensor x = random_tensor(Shape{1, 20, 24, 3}, 1, 0.0f, 1.0f);
  CHECK(psnr(x, x) == kPsnrCap);
  CHECK(psnr(x, x) == 100.0);
  CHECK(ssim(x, x) == 1.0);
  const Tensor half(Shape{1, 12, 12, 3}, 0.5f);
  Tensor flipped = half;
  for (float& v : flipped.data()) v = 1.0f - v;
  CHECK(ssim(flipped, half) == 1.0);
}

TEST_CASE("PSNR closed forms") {
  // Single pixel, ref 16/255, pred 0.
  const float ref_value = 16.0f / 255.0f;
  const Tensor pred(Shape{1, 1, 1, 1}, 0.0f), ref(Shape{1, 1, 1, 1}, ref_value);
  const double exact = -20.0 * std::log10(static_cast<double>(ref_value));
  CHECK(std::abs(psnr(pred, ref) - exact) <= 1e-6);
  CHECK(std::abs(psnr(pred, ref) - 24.049) <= 1e-3);

  const Tensor zero(Shape{1, 8, 8, 3}, 0.0f);
  for (double e : {0.1, 0.01}) {
    const double got = psnr(uniform_error_frame(8, 8, static_cast<float>(e)), zero);
    CHECK(std::abs(got - (-20.0 * std::log10(e))) <= 1e-6);
  }
}

TEST_CASE("PSNR symmetry and monotonicity") {
  const Tensor ref = random_tensor(Shape{1, 16, 16, 3}, 2, 0.2f, 0.8f);
  const Tensor noise = random_tensor(Shape{1, 16, 16, 3}, 3);
  double prev = kPsnrCap + 1.0;
  for (float e : {0.01f, 0.02f, 0.05f, 0.1f}) {
    Tensor pred = ref;
    for (std::size_t i = 0; i < pred.size(); ++i) pred.data()[i] += e * noise.data()[i];
    const double p = psnr(pred, ref);
    CHECK(p == psnr(ref, pred));
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("SSIM matches the brute-force windowed oracle") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Tensor a = random_tensor(Shape{1 + static_cast<int>(seed % 2), 19, 23, 3}, 10 + seed, 0.0f, 1.0f);
    Tensor b = a;
    const Tensor n = random_tensor(a.shape(), 20 + seed, -0.2f, 0.2f);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = std::clamp(b.data()[i] + n.data()[i], 0.0f, 1.0f);
    CHECK(std::abs(ssim(a, b) - oracle_ssim(a, b)) <= 1e-6);
  }
  const Tensor p = random_tensor(Shape{1, 11, 11, 1}, 30, 0.0f, 1.0f);
  const Tensor q = random_tensor(Shape{1, 11, 11, 1}, 31, 0.0f, 1.0f);
  CHECK(std::abs(ssim(p, q) - oracle_ssim(p, q)) <= 1e-6);
}

TEST_CASE("SSIM symmetry, range and constant-shift invariance") {
  const Tensor ref = random_tensor(Shape{1, 24, 24, 3}, 40, 0.0f, 0.7f);
  Tensor pred = ref;
  for (int h = 0; h < 24; ++h)
    for (int w = 0; w < 24; ++w)
      for (int c = 0; c < 3; ++c) pred.at(0, h, w, c) += ((h + w) % 2 == 0 ? 0.01f : -0.01f);
  const double s = ssim(pred, ref);
  CHECK(s == doctest::Approx(ssim(ref, pred)).epsilon(1e-12));
  CHECK(s <= 1.0);
  CHECK(s >= -1.0);
  Tensor pred_up = pred, ref_up = ref;
  for (float& v : pred_up.data()) v += 0.2f;
  for (float& v : ref_up.data()) v += 0.2f;
  CHECK(std::abs(ssim(pred_up, ref_up) - s) <= 1e-6);
}

TEST_CASE("metric errors") {
  const Tensor a(Shape{1, 12, 12, 3}), b(Shape{1, 12, 13, 3});
  CHECK_THROWS_AS(psnr(a, b), ShapeError);
  CHECK_THROWS_AS(ssim(a, b), ShapeError);
  const Tensor small(Shape{1, 10, 40, 3});
  CHECK_THROWS_AS(ssim(small, small), ShapeError);
}

TEST_CASE("evaluate_clip") {
  const ClipSequence ref = synthetic_clip("c", 3, 16, 16, 5);
  SUBCASE("single frame") {
    ClipSequence one{"one", {ref.frames[0]}, 24.0};
    ClipSequence pred = one;
    for (float& v : pred.frames[0].data()) v = std::clamp(v + 0.03f, 0.0f, 1.0f);
    const ClipReport r = evaluate_clip(pred, one);
    REQUIRE(r.frames.size() == 1);
    CHECK(r.psnr == r.frames[0].psnr);
    CHECK(r.ssim == r.frames[0].ssim);
    CHECK(r.frames[0].psnr == psnr(pred.frames[0], one.frames[0]));
  }
  SUBCASE("identical") {
    const ClipReport r = evaluate_clip(ref, ref);
    CHECK(r.psnr == 100.0);
    CHECK(r.ssim == 1.0);
  }
  SUBCASE("mean of per-frame dB values") {
    const Tensor zero(Shape{1, 12, 12, 3}, 0.0f);
    ClipSequence z{"z", {zero, zero, zero}, 24.0};
    ClipSequence p{"z",
                   {uniform_error_frame(12, 12, 0.1f), uniform_error_frame(12, 12, static_cast<float>(std::pow(10.0, -1.5))),
                    uniform_error_frame(12, 12, 0.01f)},
                   24.0};
    const ClipReport r = evaluate_clip(p, z);
    CHECK(std::abs(r.frames[0].psnr - 20.0) <= 1e-6);
    CHECK(std::abs(r.frames[1].psnr - 30.0) <= 1e-6);
    CHECK(std::abs(r.frames[2].psnr - 40.0) <= 1e-6);
    CHECK(std::abs(r.psnr - 30.0) <= 1e-6);
    CHECK(r.frames[2].index == 2);
  }
  SUBCASE("mismatches") {
    ClipSequence fewer = ref;
    fewer.frames.pop_back();
    CHECK_THROWS_AS(evaluate_clip(fewer, ref), ShapeError);
    const ClipSequence bigger = synthetic_clip("c", 3, 16, 20, 5);
    CHECK_THROWS_AS(evaluate_clip(bigger, ref), ShapeError);
  }
}

TEST_CASE("summaries are arithmetic means and serialize to the documented shape") {
  std::vector<ClipReport> clips;
  for (int c = 0; c < 3; ++c) {
    const ClipSequence ref = synthetic_clip("clip" + std::to_string(c), 2, 16, 16, 50 + c);
    ClipSequence pred = ref;
    for (Tensor& f : pred.frames)
      for (float& v : f.data()) v = std::clamp(v + 0.01f * static_cast<float>(c + 1), 0.0f, 1.0f);
    clips.push_back(evaluate_clip(pred, ref));
  }
  const EvalReport r = summarize(clips);
  CHECK(std::abs(r.psnr - (clips[0].psnr + clips[1].psnr + clips[2].psnr) / 3.0) <= 1e-9);
  CHECK(std::abs(r.ssim - (clips[0].ssim + clips[1].ssim + clips[2].ssim) / 3.0) <= 1e-9);
  for (const ClipReport& c : clips) {
    CHECK(std::abs(c.psnr - (c.frames[0].psnr + c.frames[1].psnr) / 2.0) <= 1e-9);
    CHECK(c.ssim <= 1.0);
    CHECK(c.ssim >= -1.0);
  }

  const nlohmann::json j = to_json(r);
  CHECK(keys(j) == std::set<std::string>{"clips", "psnr", "ssim"});
  REQUIRE(j["clips"].size() == 3);
  CHECK(keys(j["clips"][0]) == std::set<std::string>{"name", "psnr", "ssim", "frames"});
  CHECK(j["clips"][1]["name"] == "clip1");
  CHECK(keys(j["clips"][0]["frames"][1]) == std::set<std::string>{"i", "psnr", "ssim"});
  CHECK(j["clips"][0]["frames"][1]["i"] == 1);
  CHECK(j["psnr"].get<double>() == r.psnr);
}
