#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mvsr/error.hpp"
#include "mvsr/kernels.hpp"
#include "mvsr/random.hpp"
#include "support.hpp"

using namespace mvsr;
using namespace mvsr::testing;

namespace {

ExecOptions reference_mode() {
  ExecOptions e;
  e.mode = KernelMode::reference;
  return e;
}

ExecOptions optimized(int threads) {
  ExecOptions e;
  e.threads = threads;
  return e;
}

}  // namespace

TEST_CASE("tensor construction validates extents and payload") {
  CHECK(Tensor().empty());
  CHECK_THROWS_AS(Tensor(Shape{0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{1, -2, 1, 1}), ShapeError);
  const std::vector<float> three{1, 2, 3};
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 1, 4}, three), ShapeError);
  Tensor t(Shape{2, 3, 4, 5}, 1.5f);
  CHECK(t.size() == 120);
  CHECK(t.at(1, 2, 3, 4) == 1.5f);
  CHECK(t.offset(1, 0, 0, 0) == 60);
  CHECK_THROWS_AS(Tensor::uninitialized(Shape{1, 0, 1, 1}), ShapeError);
}

TEST_CASE("kernels reject empty tensors") {
  const Tensor empty;
  const ConvParams p{Tensor(Shape{1, 1, 1, 1}), {0.0f}};
  CHECK_THROWS_AS(conv2d(empty, p), ShapeError);
  CHECK_THROWS_AS(relu(empty), ShapeError);
  CHECK_THROWS_AS(depth_to_space(empty, 2), ShapeError);
  CHECK_THROWS_AS(resize_bilinear(empty, 2, 2), ShapeError);
  CHECK_THROWS_AS(add(empty, empty), ShapeError);
}

TEST_CASE("conv2d identity kernel returns the input") {
  const Tensor x(Shape{1, 3, 3, 1}, 1.0f);
  Tensor k(Shape{3, 3, 1, 1});
  k.at(1, 1, 0, 0) = 1.0f;
  const ConvParams p{k, {0.0f}};
  CHECK(conv2d(x, p) == x);
  CHECK(conv2d(x, p, reference_mode()) == x);
}

TEST_CASE("conv2d scalar affine") {
  const Tensor x(Shape{1, 1, 1, 1}, 2.0f);
  const ConvParams p{Tensor(Shape{1, 1, 1, 1}, 3.0f), {0.5f}};
  CHECK(conv2d(x, p).at(0, 0, 0, 0) == 6.5f);
  CHECK(conv2d(x, p, reference_mode()).at(0, 0, 0, 0) == 6.5f);
}

TEST_CASE("conv2d 16x16x8 optimized matches reference") {
  const Tensor x = random_tensor(Shape{1, 16, 16, 8}, 11);
  const ConvParams p = random_conv(3, 3, 8, 8, 12);
  CHECK(max_abs_diff(conv2d(x, p), conv2d(x, p, reference_mode())) <= 1e-5f);
}

TEST_CASE("conv2d errors") {
  const Tensor x = random_tensor(Shape{1, 4, 4, 3}, 1);
  CHECK_THROWS_AS(conv2d(x, random_conv(3, 3, 4, 2, 2)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, random_conv(5, 5, 3, 2, 2)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, random_conv(2, 3, 3, 2, 2)), ShapeError);
  ConvParams bad_bias = random_conv(3, 3, 3, 2, 3);
  bad_bias.bias.pop_back();
  CHECK_THROWS_AS(conv2d(x, bad_bias), ShapeError);
}

TEST_CASE("conv2d reference agrees with a double-precision oracle") {
  Rng rng(77);
  const int kernels[4][2] = {{3, 3}, {1, 3}, {3, 1}, {1, 1}};
  for (int i = 0; i < 40; ++i) {
    const int n = 1 + static_cast<int>(rng.next() % 2);
    const int h = 1 + static_cast<int>(rng.next() % 9);
    const int w = 1 + static_cast<int>(rng.next() % 9);
    const int ci = 1 + static_cast<int>(rng.next() % 9);
    const int co = 1 + static_cast<int>(rng.next() % 9);
    const auto* k = kernels[rng.next() % 4];
    const Tensor x = random_tensor(Shape{n, h, w, ci}, rng.next());
    const ConvParams p = random_conv(k[0], k[1], ci, co, rng.next());
    CHECK(max_abs_diff(conv2d(x, p, reference_mode()), oracle_conv2d(x, p)) <= 1e-5f);
  }
}

TEST_CASE("conv2d optimized vs reference over random cases") {
  Rng rng(2024);
  const int widths[] = {1, 3, 4, 5, 8, 12, 16, 20, 24, 32, 48};
  const int kernels[4][2] = {{3, 3}, {1, 3}, {3, 1}, {1, 1}};
  float worst = 0.0f;
  for (int i = 0; i < 120; ++i) {
    const int n = 1 + static_cast<int>(rng.next() % 3);
    const int h = 1 + static_cast<int>(rng.next() % 14);
    const int w = 1 + static_cast<int>(rng.next() % 23);
    const int ci = widths[rng.next() % std::size(widths)];
    const int co = widths[rng.next() % std::size(widths)];
    const auto* k = kernels[rng.next() % 4];
    const Tensor x = random_tensor(Shape{n, h, w, ci}, rng.next());
    const ConvParams p = random_conv(k[0], k[1], ci, co, rng.next());
    const float d = max_abs_diff(conv2d(x, p, optimized(1 + i % 3)), conv2d(x, p, reference_mode()));
    worst = std::max(worst, d);
  }
  CHECK(worst <= 1e-5f);
}

TEST_CASE("conv2d is linear with zero bias") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Tensor x = random_tensor(Shape{1, 9, 11, 8}, 100 + s);
    const Tensor y = random_tensor(Shape{1, 9, 11, 8}, 200 + s);
    ConvParams p = random_conv(3, 3, 8, 16, 300 + s);
    std::fill(p.bias.begin(), p.bias.end(), 0.0f);
    const float alpha = 0.7f, beta = -1.3f;
    Tensor mix(x.shape());
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = alpha * x.data()[i] + beta * y.data()[i];
    const Tensor lhs = conv2d(mix, p);
    const Tensor cx = conv2d(x, p), cy = conv2d(y, p);
    Tensor rhs(lhs.shape());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.data()[i] = alpha * cx.data()[i] + beta * cy.data()[i];
    CHECK(max_abs_diff(lhs, rhs) <= 1e-4f);
  }
}

TEST_CASE("kernels are bit-identical across 1, 2 and 8 threads") {
  const Tensor x = random_tensor(Shape{2, 21, 19, 16}, 5);
  const ConvParams p = random_conv(3, 3, 16, 48, 6);
  const Tensor c1 = conv2d(x, p, optimized(1));
  CHECK(conv2d(x, p, optimized(2)) == c1);
  CHECK(conv2d(x, p, optimized(8)) == c1);

  const Tensor img = random_tensor(Shape{2, 13, 17, 3}, 7, 0.0f, 1.0f);
  const Tensor b1 = resize_bicubic(img, 52, 68, false, optimized(1));
  CHECK(resize_bicubic(img, 52, 68, false, optimized(2)) == b1);
  CHECK(resize_bicubic(img, 52, 68, false, optimized(8)) == b1);
  const Tensor l1 = resize_bilinear(img, 52, 68, optimized(1));
  CHECK(resize_bilinear(img, 52, 68, optimized(2)) == l1);
  CHECK(resize_bilinear(img, 52, 68, optimized(8)) == l1);
}

TEST_CASE("validation mode reports non-finite outputs") {
  const Tensor x = random_tensor(Shape{1, 4, 4, 2}, 3);
  ConvParams p = random_conv(3, 3, 2, 2, 4);
  p.kernel.at(1, 1, 0, 0) = std::numeric_limits<float>::infinity();
  ExecOptions e;
  e.validate = true;
  CHECK_THROWS_AS(conv2d(x, p, e), NumericError);
  CHECK_NOTHROW(conv2d(x, p));
}

TEST_CASE("relu") {
  const Tensor x(Shape{1, 1, 1, 3}, std::vector<float>{-1, 0, 2});
  CHECK(relu(x) == Tensor(Shape{1, 1, 1, 3}, std::vector<float>{0, 0, 2}));
  CHECK(relu(Tensor(Shape{1, 2, 2, 2}, -3.0f)) == Tensor(Shape{1, 2, 2, 2}, 0.0f));
  const Tensor r = random_tensor(Shape{2, 5, 5, 4}, 8);
  CHECK(relu(relu(r)) == relu(r));
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(Tensor(Shape{1, 1, 1, 1}, 0.0f)).at(0, 0, 0, 0) == 0.5f);
  const Tensor x = random_tensor(Shape{1, 6, 6, 3}, 9, -8.0f, 8.0f);
  Tensor neg = x;
  for (float& v : neg.data()) v = -v;
  const Tensor s = sigmoid(x), sn = sigmoid(neg);
  float worst = 0.0f;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(s.data()[i] - (1.0f - sn.data()[i])));
  CHECK(worst <= 1e-6f);
  const Tensor big = sigmoid(Tensor(Shape{1, 1, 1, 2}, std::vector<float>{30.0f, -30.0f}));
  for (float v : big.data()) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("depth_to_space ordering and inverse") {
  const Tensor x(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 4});
  const Tensor y = depth_to_space(x, 2);
  CHECK(y.shape() == Shape{1, 2, 2, 1});
  CHECK(y.at(0, 0, 0, 0) == 1.0f);
  CHECK(y.at(0, 0, 1, 0) == 2.0f);
  CHECK(y.at(0, 1, 0, 0) == 3.0f);
  CHECK(y.at(0, 1, 1, 0) == 4.0f);

  const Tensor r = random_tensor(Shape{2, 3, 5, 12}, 10);
  CHECK(depth_to_space(r, 1) == r);
  CHECK(space_to_depth(r, 1) == r);
  CHECK(space_to_depth(depth_to_space(r, 2), 2) == r);
  const Tensor r48 = random_tensor(Shape{1, 4, 3, 48}, 11);
  CHECK(space_to_depth(depth_to_space(r48, 4), 4) == r48);
  const Tensor img = random_tensor(Shape{2, 8, 12, 3}, 12);
  CHECK(depth_to_space(space_to_depth(img, 2), 2) == img);

  // General rule against the declared index formula.
  const Tensor d = depth_to_space(r48, 4);
  bool ok = true;
  for (int h = 0; h < 4; ++h)
    for (int w = 0; w < 3; ++w)
      for (int bh = 0; bh < 4; ++bh)
        for (int bw = 0; bw < 4; ++bw)
          for (int c = 0; c < 3; ++c)
            ok = ok && d.at(0, h * 4 + bh, w * 4 + bw, c) == r48.at(0, h, w, (bh * 4 + bw) * 3 + c);
  CHECK(ok);
}

TEST_CASE("space_to_depth example and errors") {
  const Tensor x(Shape{1, 2, 2, 1}, std::vector<float>{1, 2, 3, 4});
  CHECK(space_to_depth(x, 2) == Tensor(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 4}));
  CHECK_THROWS_AS(depth_to_space(random_tensor(Shape{1, 2, 2, 6}, 1), 2), ShapeError);
  CHECK_THROWS_AS(space_to_depth(random_tensor(Shape{1, 3, 2, 1}, 1), 2), ShapeError);
  CHECK_THROWS_AS(depth_to_space(x, 0), ShapeError);
}

TEST_CASE("bilinear resize") {
  for (const auto& e : {reference_mode(), optimized(2)}) {
    const Tensor c(Shape{1, 5, 7, 2}, 0.7f);
    CHECK(resize_bilinear(c, 13, 3, e) == Tensor(Shape{1, 13, 3, 2}, 0.7f));

    const Tensor x(Shape{1, 2, 2, 1}, std::vector<float>{0, 1, 0, 1});
    const Tensor y = resize_bilinear(x, 4, 4, e);
    for (int r = 0; r < 4; ++r) {
      CHECK(y.at(0, r, 0, 0) == 0.0f);
      CHECK(y.at(0, r, 1, 0) == 0.25f);
      CHECK(y.at(0, r, 2, 0) == 0.75f);
      CHECK(y.at(0, r, 3, 0) == 1.0f);
    }
    const Tensor r = random_tensor(Shape{2, 6, 9, 3}, 13);
    CHECK(resize_bilinear(r, 6, 9, e) == r);
  }
  CHECK_THROWS_AS(resize_bilinear(Tensor(Shape{1, 2, 2, 1}), 0, 2), ShapeError);
}

TEST_CASE("bilinear resize matches the non-separable oracle") {
  Rng rng(31);
  float worst = 0.0f;
  for (int i = 0; i < 100; ++i) {
    const int h = 1 + static_cast<int>(rng.next() % 12), w = 1 + static_cast<int>(rng.next() % 12);
    const int oh = 1 + static_cast<int>(rng.next() % 30), ow = 1 + static_cast<int>(rng.next() % 30);
    const Tensor x = random_tensor(Shape{1, h, w, 2}, rng.next());
    const Tensor want = oracle_resize(x, oh, ow, false, false);
    worst = std::max(worst, max_abs_diff(resize_bilinear(x, oh, ow), want));
    worst = std::max(worst, max_abs_diff(resize_bilinear(x, oh, ow, reference_mode()), want));
  }
  CHECK(worst <= 1e-5f);
}

TEST_CASE("bicubic maps constants to constants exactly") {
  for (float v : {0.0f, 0.3f, 0.7f, 1.0f}) {
    const Tensor c(Shape{1, 16, 12, 3}, v);
    for (bool aa : {false, true})
      for (const auto& e : {reference_mode(), optimized(1)}) {
        CHECK(resize_bicubic(c, 4, 3, aa, e) == Tensor(Shape{1, 4, 3, 3}, v));
        CHECK(resize_bicubic(c, 64, 48, aa, e) == Tensor(Shape{1, 64, 48, 3}, v));
        CHECK(resize_bicubic(c, 7, 29, aa, e) == Tensor(Shape{1, 7, 29, 3}, v));
      }
  }
}

TEST_CASE("bicubic 4x downscale of a horizontal ramp") {
  const int W = 64, H = 8;
  Tensor ramp(Shape{1, H, W, 1});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) ramp.at(0, y, x, 0) = static_cast<float>(x) / (W - 1);
  const Tensor small = resize_bicubic(ramp, H / 4, W / 4, true);
  // Away from the clamped borders the antialiased kernel is symmetric, so the
  // result is the ramp sampled at the output centres.
  for (int q = 2; q < W / 4 - 2; ++q) {
    const double centre = (q + 0.5) * 4.0 - 0.5;
    CHECK(std::abs(small.at(0, 1, q, 0) - centre / (W - 1)) <= 1e-3);
  }
  // Every column, including the border ones, against the 1-D kernel definition.
  for (int q = 0; q < W / 4; ++q) {
    double want = 0.0;
    for (const Tap& t : axis_taps(q, W, W / 4, true, true)) want += t.weight * static_cast<double>(t.index) / (W - 1);
    CHECK(std::abs(small.at(0, 0, q, 0) - want) <= 1e-6);
  }
}

TEST_CASE("bicubic matches the non-separable oracle") {
  Rng rng(41);
  float worst = 0.0f;
  int cases = 0;
  for (int i = 0; i < 120; ++i) {
    const int h = 1 + static_cast<int>(rng.next() % 20), w = 1 + static_cast<int>(rng.next() % 20);
    const int oh = 1 + static_cast<int>(rng.next() % 40), ow = 1 + static_cast<int>(rng.next() % 40);
    const bool aa = rng.next() % 2 == 0;
    const Tensor x = random_tensor(Shape{1 + i % 2, h, w, 3}, rng.next());
    const Tensor want = oracle_resize(x, oh, ow, true, aa);
    worst = std::max(worst, max_abs_diff(resize_bicubic(x, oh, ow, aa), want));
    worst = std::max(worst, max_abs_diff(resize_bicubic(x, oh, ow, aa, reference_mode()), want));
    ++cases;
  }
  CHECK(cases >= 100);
  CHECK(worst <= 1e-5f);
}

TEST_CASE("add, multiply, concat, split") {
  const Tensor a(Shape{1, 1, 1, 2}, std::vector<float>{1, 2});
  const Tensor b(Shape{1, 1, 1, 3}, std::vector<float>{3, 4, 5});
  CHECK(concat_channels(a, b) == Tensor(Shape{1, 1, 1, 5}, std::vector<float>{1, 2, 3, 4, 5}));

  const Tensor r = random_tensor(Shape{2, 4, 5, 6}, 14);
  CHECK(add(r, Tensor(r.shape())) == r);
  CHECK(multiply(r, Tensor(r.shape(), 1.0f)) == r);
  CHECK_THROWS_AS(add(r, a), ShapeError);
  CHECK_THROWS_AS(multiply(r, a), ShapeError);
  CHECK_THROWS_AS(concat_channels(a, random_tensor(Shape{1, 2, 1, 3}, 1)), ShapeError);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor p = random_tensor(Shape{1, 3, 4, 1 + static_cast<int>(s % 5)}, 50 + s);
    const Tensor q = random_tensor(Shape{1, 3, 4, 2 + static_cast<int>(s % 3)}, 60 + s);
    const int sizes[] = {p.c(), q.c()};
    const auto parts = split_channels(concat_channels(p, q), sizes);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0] == p);
    CHECK(parts[1] == q);
  }
  const int wrong[] = {2, 2};
  CHECK_THROWS_AS(split_channels(r, wrong), ShapeError);
}

TEST_CASE("batch slicing and stacking") {
  const Tensor r = random_tensor(Shape{3, 2, 2, 2}, 15);
  std::vector<Tensor> items;
  for (int i = 0; i < 3; ++i) items.push_back(slice_batch(r, i));
  CHECK(items[1].shape() == Shape{1, 2, 2, 2});
  CHECK(stack_batch(items) == r);
  CHECK_THROWS_AS(slice_batch(r, 3), ShapeError);
}

TEST_CASE("tensor dump round trip and errors") {
  const Tensor t = random_tensor(Shape{2, 3, 4, 5}, 16);
  const auto bytes = encode_tensor_dump(t);
  CHECK(bytes.size() == 4 + 1 + 16 + 4 * t.size());
  CHECK(decode_tensor_dump(bytes) == t);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_tensor_dump(bad), BadMagicError);
  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(decode_tensor_dump(cut), TruncatedError);

  TempDir dir("dump");
  write_tensor_dump(dir / "t.tnsr", t);
  CHECK(read_tensor_dump(dir / "t.tnsr") == t);
}
