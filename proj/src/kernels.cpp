#include "mvsr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "mvsr/error.hpp"
#include "parallel.hpp"

namespace mvsr {

int ExecOptions::resolved_threads() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

void require_nonempty(const Tensor& t, const char* op) {
  if (t.empty()) throw ShapeError(std::string(op) + ": empty tensor");
}

void check_output(const Tensor& t, const ExecOptions& exec, const char* op) {
  if (exec.validate && !t.all_finite()) {
    throw NumericError(std::string(op) + " produced a non-finite value");
  }
}

// ---------------------------------------------------------------------------
// conv2d

void conv2d_reference(const Tensor& input, const ConvParams& p, Tensor& out) {
  const int N = input.n(), H = input.h(), W = input.w(), CI = input.c();
  const int KH = p.kernel_h(), KW = p.kernel_w(), CO = p.out_channels();
  const int ph = (KH - 1) / 2, pw = (KW - 1) / 2;
  for (int n = 0; n < N; ++n)
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w)
        for (int co = 0; co < CO; ++co) {
          float acc = 0.0f;
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw)
              for (int ci = 0; ci < CI; ++ci) {
                const int ih = h + kh - ph;
                const int iw = w + kw - pw;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += input.at(n, ih, iw, ci) * p.kernel.at(kh, kw, ci, co);
              }
          out.at(n, h, w, co) = acc + p.bias[static_cast<std::size_t>(co)];
        }
}

struct ConvGeometry {
  int H, W, CI, KH, KW, ph, pw;
};

// Float vectors (GCC/Clang extension); lower to SSE/AVX/NEON registers.
typedef float Vec4 __attribute__((vector_size(16)));
typedef float Vec8 __attribute__((vector_size(32)));

template <class VecT>
constexpr int kLanes = sizeof(VecT) / sizeof(float);

// Unaligned load/store through a local copy; keeps accumulator arrays in registers.
template <class VecT>
__attribute__((always_inline)) inline VecT load_vec(const float* p) {
  VecT v;
  __builtin_memcpy(&v, p, sizeof v);
  return v;
}

template <class VecT>
__attribute__((always_inline)) inline void store_vec(float* p, VecT v) {
  __builtin_memcpy(p, &v, sizeof v);
}

// Accumulates P horizontally adjacent output pixels for one block of CB
// output channels, so each weight vector load is reused P times. Columns
// [w0, w0 + P) need no horizontal bounds check unless Edge is set. Each lane
// still sums its taps in (kh, kw, ci) order.
template <class VecT, int CB, int P, bool Edge>
__attribute__((always_inline)) inline void conv_tile(const ConvGeometry& g, int co_total, int co0, const float* in_n,
                                                     const float* kernel, const float* bias, float* out_row, int h,
                                                     int w0) {
  constexpr int L = kLanes<VecT>;
  static_assert(CB % L == 0);
  const int CI = g.CI;
  constexpr int V = CB / L;
  VecT acc[P][V];
  for (int p = 0; p < P; ++p)
    for (int v = 0; v < V; ++v) acc[p][v] = VecT{} * 0.0f;
  for (int kh = 0; kh < g.KH; ++kh) {
    const int ih = h + kh - g.ph;
    if (ih < 0 || ih >= g.H) continue;
    const float* in_row = in_n + static_cast<std::size_t>(ih) * g.W * g.CI;
    for (int kw = 0; kw < g.KW; ++kw) {
      const float* wtap = kernel + static_cast<std::size_t>(kh * g.KW + kw) * g.CI * co_total + co0;
      const int iw0 = w0 + kw - g.pw;
      if (Edge && (iw0 < 0 || iw0 >= g.W)) continue;  // Edge tiles have P == 1
      const float* xb = in_row + static_cast<std::ptrdiff_t>(iw0) * g.CI;
      for (int ci = 0; ci < CI; ++ci) {
        const float* wci = wtap + static_cast<std::size_t>(ci) * co_total;
        VecT wv[V];
        for (int v = 0; v < V; ++v) wv[v] = load_vec<VecT>(wci + v * L);
        for (int p = 0; p < P; ++p) {
          const float x = xb[p * CI + ci];
          const VecT xv = VecT{} + x;
          for (int v = 0; v < V; ++v) acc[p][v] += xv * wv[v];
        }
      }
    }
  }
  for (int p = 0; p < P; ++p) {
    float* o = out_row + static_cast<std::size_t>(w0 + p) * co_total + co0;
    for (int v = 0; v < V; ++v) store_vec(o + v * L, acc[p][v] + load_vec<VecT>(bias + co0 + v * L));
  }
}

// Cout must be a multiple of CB.
template <class VecT, int CB, int P>
__attribute__((always_inline)) inline void conv_rows_blocked_impl(const Tensor& input, const ConvParams& params,
                                                                  Tensor& out, int row_begin, int row_end) {
  const ConvGeometry g{input.h(), input.w(), input.c(), params.kernel_h(), params.kernel_w(),
                       (params.kernel_h() - 1) / 2, (params.kernel_w() - 1) / 2};
  const int CO = params.out_channels();
  const float* kernel = params.kernel.data().data();
  const float* bias = params.bias.data();
  const std::size_t image = static_cast<std::size_t>(g.H) * g.W * g.CI;
  // Interior columns never read outside the row.
  const int lo = std::min(g.pw, g.W);
  const int hi = std::max(lo, g.W - g.pw);
  for (int row = row_begin; row < row_end; ++row) {
    const int n = row / g.H;
    const int h = row % g.H;
    const float* in_n = input.data().data() + static_cast<std::size_t>(n) * image;
    float* out_row = out.data().data() + (static_cast<std::size_t>(row) * g.W) * CO;
    for (int co0 = 0; co0 < CO; co0 += CB) {
      int w = 0;
      for (; w < lo; ++w) conv_tile<VecT, CB, 1, true>(g, CO, co0, in_n, kernel, bias, out_row, h, w);
      for (; w + P <= hi; w += P) conv_tile<VecT, CB, P, false>(g, CO, co0, in_n, kernel, bias, out_row, h, w);
      for (; w < hi; ++w) conv_tile<VecT, CB, 1, false>(g, CO, co0, in_n, kernel, bias, out_row, h, w);
      for (; w < g.W; ++w) conv_tile<VecT, CB, 1, true>(g, CO, co0, in_n, kernel, bias, out_row, h, w);
    }
  }
}

template <int CB, int P>
void conv_rows_blocked(const Tensor& input, const ConvParams& params, Tensor& out, int row_begin, int row_end) {
  conv_rows_blocked_impl<Vec4, CB, P>(input, params, out, row_begin, row_end);
}

#if defined(__x86_64__) || defined(__i386__)
// Same lane arithmetic on 256-bit registers. No FMA, so rounding matches the
// 128-bit path exactly.
template <int CB, int P>
__attribute__((target("avx"))) void conv_rows_blocked_avx(const Tensor& input, const ConvParams& params, Tensor& out,
                                                          int row_begin, int row_end) {
  conv_rows_blocked_impl<Vec8, CB, P>(input, params, out, row_begin, row_end);
}
#define MVSR_HAVE_AVX_PATH 1
#endif

void conv_rows_generic(const Tensor& input, const ConvParams& p, Tensor& out, int row_begin, int row_end) {
  const int H = input.h(), W = input.w(), CI = input.c();
  const int KH = p.kernel_h(), KW = p.kernel_w(), CO = p.out_channels();
  const int ph = (KH - 1) / 2, pw = (KW - 1) / 2;
  const float* kernel = p.kernel.data().data();
  std::vector<float> acc(static_cast<std::size_t>(CO));
  for (int row = row_begin; row < row_end; ++row) {
    const int n = row / H;
    const int h = row % H;
    for (int w = 0; w < W; ++w) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (int kh = 0; kh < KH; ++kh) {
        const int ih = h + kh - ph;
        if (ih < 0 || ih >= H) continue;
        for (int kw = 0; kw < KW; ++kw) {
          const int iw = w + kw - pw;
          if (iw < 0 || iw >= W) continue;
          const float* x = &input.data()[input.offset(n, ih, iw, 0)];
          const float* wt = kernel + static_cast<std::size_t>(kh * KW + kw) * CI * CO;
          for (int ci = 0; ci < CI; ++ci)
            for (int co = 0; co < CO; ++co) acc[co] += x[ci] * wt[ci * CO + co];
        }
      }
      float* o = &out.data()[out.offset(n, h, w, 0)];
      for (int co = 0; co < CO; ++co) o[co] = acc[co] + p.bias[static_cast<std::size_t>(co)];
    }
  }
}

using RowKernel = void (*)(const Tensor&, const ConvParams&, Tensor&, int, int);

RowKernel pick_row_kernel(int cout) {
#ifdef MVSR_HAVE_AVX_PATH
  static const bool avx = __builtin_cpu_supports("avx");
  if (avx && cout % 16 == 0) return conv_rows_blocked_avx<16, 6>;
  if (avx && cout % 24 == 0) return conv_rows_blocked_avx<24, 4>;
  if (avx && cout % 8 == 0) return conv_rows_blocked_avx<8, 8>;
#endif
  if (cout % 8 == 0) return conv_rows_blocked<8, 6>;
  if (cout == 12) return conv_rows_blocked<12, 4>;
  if (cout % 4 == 0) return conv_rows_blocked<4, 8>;
  return conv_rows_generic;
}

// ---------------------------------------------------------------------------
// resampling

// Taps of one output sample along one axis; weights sum to one.
struct AxisTaps {
  std::vector<int> begin;  // size out + 1, CSR offsets into index/weight
  std::vector<int> index;
  std::vector<double> weight;
};

double source_coord(int o, int in_size, int out_size) {
  return (o + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
}

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

void push_normalized(AxisTaps& taps, std::vector<std::pair<int, double>>& raw) {
  double sum = 0.0;
  for (auto& [i, w] : raw) sum += w;
  for (auto& [i, w] : raw) {
    taps.index.push_back(i);
    taps.weight.push_back(w / sum);
  }
  taps.begin.push_back(static_cast<int>(taps.index.size()));
}

AxisTaps bilinear_taps(int in_size, int out_size) {
  AxisTaps taps;
  taps.begin.push_back(0);
  std::vector<std::pair<int, double>> raw;
  for (int o = 0; o < out_size; ++o) {
    const double src = std::clamp(source_coord(o, in_size, out_size), 0.0, static_cast<double>(in_size - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_size - 1);
    const double f = src - i0;
    raw = {{i0, 1.0 - f}, {i1, f}};
    push_normalized(taps, raw);
  }
  return taps;
}

AxisTaps bicubic_taps(int in_size, int out_size, bool antialias) {
  AxisTaps taps;
  taps.begin.push_back(0);
  const double scale = static_cast<double>(out_size) / in_size;
  const double stretch = (antialias && scale < 1.0) ? scale : 1.0;
  const double support = 2.0 / stretch;
  std::vector<std::pair<int, double>> raw;
  for (int o = 0; o < out_size; ++o) {
    const double center = source_coord(o, in_size, out_size);
    raw.clear();
    const int first = static_cast<int>(std::ceil(center - support));
    const int last = static_cast<int>(std::floor(center + support));
    for (int i = first; i <= last; ++i) {
      const double w = keys_cubic((center - i) * stretch);
      if (w == 0.0) continue;
      raw.emplace_back(std::clamp(i, 0, in_size - 1), w);
    }
    push_normalized(taps, raw);
  }
  return taps;
}

// Direct two-dimensional evaluation: every output sample sums wy * wx * x over
// its full tap rectangle in double precision.
Tensor resize_direct(const Tensor& in, const AxisTaps& ty, const AxisTaps& tx, int out_h, int out_w) {
  Tensor out = Tensor::uninitialized(Shape{in.n(), out_h, out_w, in.c()});
  for (int n = 0; n < in.n(); ++n)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x)
        for (int c = 0; c < in.c(); ++c) {
          double acc = 0.0;
          for (int a = ty.begin[y]; a < ty.begin[y + 1]; ++a)
            for (int b = tx.begin[x]; b < tx.begin[x + 1]; ++b)
              acc += ty.weight[a] * tx.weight[b] * in.at(n, ty.index[a], tx.index[b], c);
          out.at(n, y, x, c) = static_cast<float>(acc);
        }
  return out;
}

// Separable evaluation: horizontal pass, then vertical pass.
Tensor resize_separable(const Tensor& in, const AxisTaps& ty, const AxisTaps& tx, int out_h, int out_w,
                        int threads) {
  const int N = in.n(), H = in.h(), W = in.w(), C = in.c();
  Tensor mid = Tensor::uninitialized(Shape{N, H, out_w, C});
  detail::parallel_for(N * H, threads, [&](int r0, int r1) {
    std::vector<double> acc(static_cast<std::size_t>(C));
    for (int row = r0; row < r1; ++row) {
      const float* src = in.data().data() + static_cast<std::size_t>(row) * W * C;
      float* dst = mid.data().data() + static_cast<std::size_t>(row) * out_w * C;
      for (int x = 0; x < out_w; ++x) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int b = tx.begin[x]; b < tx.begin[x + 1]; ++b) {
          const float* px = src + static_cast<std::size_t>(tx.index[b]) * C;
          const double w = tx.weight[b];
          for (int c = 0; c < C; ++c) acc[c] += w * px[c];
        }
        for (int c = 0; c < C; ++c) dst[static_cast<std::size_t>(x) * C + c] = static_cast<float>(acc[c]);
      }
    }
  });
  Tensor out = Tensor::uninitialized(Shape{N, out_h, out_w, C});
  const std::size_t row_len = static_cast<std::size_t>(out_w) * C;
  detail::parallel_for(N * out_h, threads, [&](int r0, int r1) {
    std::vector<double> acc(row_len);
    for (int row = r0; row < r1; ++row) {
      const int n = row / out_h;
      const int y = row % out_h;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int a = ty.begin[y]; a < ty.begin[y + 1]; ++a) {
        const float* src = mid.data().data() + (static_cast<std::size_t>(n) * H + ty.index[a]) * row_len;
        const double w = ty.weight[a];
        for (std::size_t i = 0; i < row_len; ++i) acc[i] += w * src[i];
      }
      float* dst = out.data().data() + static_cast<std::size_t>(row) * row_len;
      for (std::size_t i = 0; i < row_len; ++i) dst[i] = static_cast<float>(acc[i]);
    }
  });
  return out;
}

Tensor resize_with(const Tensor& input, const AxisTaps& ty, const AxisTaps& tx, int out_h, int out_w,
                   const ExecOptions& exec, const char* op) {
  Tensor out = exec.mode == KernelMode::reference
                   ? resize_direct(input, ty, tx, out_h, out_w)
                   : resize_separable(input, ty, tx, out_h, out_w, exec.resolved_threads());
  check_output(out, exec, op);
  return out;
}

void require_resize_args(const Tensor& input, int out_h, int out_w, const char* op) {
  require_nonempty(input, op);
  if (out_h < 1 || out_w < 1) {
    throw ShapeError(std::string(op) + ": target extents must be positive");
  }
}

template <class Fn>
Tensor elementwise(Tensor a, const Tensor& b, const char* op, Fn fn) {
  require_nonempty(a, op);
  require_nonempty(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  float* da = a.data().data();
  const float* db = b.data().data();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) da[i] = fn(da[i], db[i]);
  return a;
}

}  // namespace

void ConvParams::validate() const {
  if (kernel.empty()) throw ShapeError("conv2d: empty kernel");
  const int kh = kernel_h(), kw = kernel_w();
  if ((kh != 1 && kh != 3) || (kw != 1 && kw != 3)) {
    throw ShapeError("conv2d: kernel must be 1 or 3 on each axis, got " + std::to_string(kh) + "x" +
                     std::to_string(kw));
  }
  if (bias.size() != static_cast<std::size_t>(out_channels())) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) + " != Cout " +
                     std::to_string(out_channels()));
  }
}

Tensor conv2d(const Tensor& input, const ConvParams& params, const ExecOptions& exec) {
  require_nonempty(input, "conv2d");
  params.validate();
  if (input.c() != params.in_channels()) {
    throw ShapeError("conv2d: input has " + std::to_string(input.c()) + " channels, kernel expects " +
                     std::to_string(params.in_channels()));
  }
  if (exec.stats) ++exec.stats->conv2d_calls;
  Tensor out = Tensor::uninitialized(Shape{input.n(), input.h(), input.w(), params.out_channels()});
  if (exec.mode == KernelMode::reference) {
    conv2d_reference(input, params, out);
  } else {
    const RowKernel rows = pick_row_kernel(params.out_channels());
    detail::parallel_for(input.n() * input.h(), exec.resolved_threads(),
                         [&](int r0, int r1) { rows(input, params, out, r0, r1); });
  }
  check_output(out, exec, "conv2d");
  return out;
}

Tensor relu(Tensor input) {
  require_nonempty(input, "relu");
  for (float& v : input.data()) v = v > 0.0f ? v : 0.0f;
  return input;
}

Tensor sigmoid(Tensor input) {
  require_nonempty(input, "sigmoid");
  for (float& v : input.data()) v = 1.0f / (1.0f + std::exp(-v));
  return input;
}

Tensor depth_to_space(const Tensor& input, int block) {
  require_nonempty(input, "depth_to_space");
  if (block < 1) throw ShapeError("depth_to_space: block must be positive");
  const int b2 = block * block;
  if (input.c() % b2 != 0) {
    throw ShapeError("depth_to_space: channels " + std::to_string(input.c()) + " not divisible by " +
                     std::to_string(b2));
  }
  const int oc = input.c() / b2;
  Tensor out = Tensor::uninitialized(Shape{input.n(), input.h() * block, input.w() * block, oc});
  // Output-major so writes are sequential.
  float* dst = out.data().data();
  for (int n = 0; n < input.n(); ++n)
    for (int h = 0; h < input.h(); ++h)
      for (int bh = 0; bh < block; ++bh)
        for (int w = 0; w < input.w(); ++w) {
          const float* src = input.data().data() + input.offset(n, h, w, bh * block * oc);
          dst = std::copy(src, src + block * oc, dst);
        }
  return out;
}

Tensor space_to_depth(const Tensor& input, int block) {
  require_nonempty(input, "space_to_depth");
  if (block < 1) throw ShapeError("space_to_depth: block must be positive");
  if (input.h() % block != 0 || input.w() % block != 0) {
    throw ShapeError("space_to_depth: extents " + to_string(input.shape()) + " not divisible by " +
                     std::to_string(block));
  }
  const int ic = input.c();
  const int oh = input.h() / block, ow = input.w() / block;
  Tensor out = Tensor::uninitialized(Shape{input.n(), oh, ow, ic * block * block});
  for (int n = 0; n < input.n(); ++n)
    for (int h = 0; h < oh; ++h)
      for (int w = 0; w < ow; ++w)
        for (int bh = 0; bh < block; ++bh)
          for (int bw = 0; bw < block; ++bw) {
            const float* src = &input.data()[input.offset(n, h * block + bh, w * block + bw, 0)];
            float* dst = &out.data()[out.offset(n, h, w, (bh * block + bw) * ic)];
            std::copy(src, src + ic, dst);
          }
  return out;
}

Tensor resize_bilinear(const Tensor& input, int out_h, int out_w, const ExecOptions& exec) {
  require_resize_args(input, out_h, out_w, "resize_bilinear");
  return resize_with(input, bilinear_taps(input.h(), out_h), bilinear_taps(input.w(), out_w), out_h, out_w,
                     exec, "resize_bilinear");
}

Tensor resize_bicubic(const Tensor& input, int out_h, int out_w, bool antialias, const ExecOptions& exec) {
  require_resize_args(input, out_h, out_w, "resize_bicubic");
  return resize_with(input, bicubic_taps(input.h(), out_h, antialias), bicubic_taps(input.w(), out_w, antialias),
                     out_h, out_w, exec, "resize_bicubic");
}

Tensor add(Tensor a, const Tensor& b) {
  return elementwise(std::move(a), b, "add", [](float x, float y) { return x + y; });
}

Tensor multiply(Tensor a, const Tensor& b) {
  return elementwise(std::move(a), b, "multiply", [](float x, float y) { return x * y; });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no operands");
  const Shape first = parts.front().shape();
  int total = 0;
  for (const Tensor& t : parts) {
    require_nonempty(t, "concat_channels");
    const Shape s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: " + to_string(s) + " vs " + to_string(first));
    }
    total += s.c;
  }
  Tensor out = Tensor::uninitialized(Shape{first.n, first.h, first.w, total});
  const std::size_t pixels = static_cast<std::size_t>(first.n) * first.h * first.w;
  float* dst = out.data().data();
  for (std::size_t px = 0; px < pixels; ++px) {
    for (const Tensor& t : parts) {
      const float* src = t.data().data() + px * t.c();
      dst = std::copy(src, src + t.c(), dst);
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat_channels(parts);
}

std::vector<Tensor> split_channels(const Tensor& input, std::span<const int> sizes) {
  require_nonempty(input, "split_channels");
  int total = 0;
  for (int s : sizes) {
    if (s < 1) throw ShapeError("split_channels: sizes must be positive");
    total += s;
  }
  if (total != input.c()) {
    throw ShapeError("split_channels: sizes sum to " + std::to_string(total) + ", input has " +
                     std::to_string(input.c()) + " channels");
  }
  std::vector<Tensor> outs;
  outs.reserve(sizes.size());
  for (int s : sizes) outs.emplace_back(Shape{input.n(), input.h(), input.w(), s});
  const std::size_t pixels = static_cast<std::size_t>(input.n()) * input.h() * input.w();
  const float* src = input.data().data();
  for (std::size_t px = 0; px < pixels; ++px) {
    for (Tensor& o : outs) {
      std::copy(src, src + o.c(), o.data().data() + px * o.c());
      src += o.c();
    }
  }
  return outs;
}

Tensor slice_batch(const Tensor& input, int index) {
  require_nonempty(input, "slice_batch");
  if (index < 0 || index >= input.n()) throw ShapeError("slice_batch: index out of range");
  const std::size_t len = input.size() / static_cast<std::size_t>(input.n());
  return Tensor(Shape{1, input.h(), input.w(), input.c()}, input.data().subspan(len * index, len));
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack_batch: no operands");
  const Shape s = items.front().shape();
  int n = 0;
  for (const Tensor& t : items) {
    require_nonempty(t, "stack_batch");
    if (t.h() != s.h || t.w() != s.w || t.c() != s.c) {
      throw ShapeError("stack_batch: " + to_string(t.shape()) + " vs " + to_string(s));
    }
    n += t.n();
  }
  Tensor out = Tensor::uninitialized(Shape{n, s.h, s.w, s.c});
  float* dst = out.data().data();
  for (const Tensor& t : items) dst = std::copy(t.data().begin(), t.data().end(), dst);
  return out;
}

}  // namespace mvsr
