#include "mvsr/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mvsr/error.hpp"
#include "mvsr/random.hpp"

namespace mvsr {

namespace {

constexpr int kFebWidth = 16;
constexpr int kUpscale = 4;

void add_residual_blocks(ModelSpec& s) {
  for (int b = 0; b < s.blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    s.convs.push_back({p + ".conv1", 3, 3, s.width, s.width});
    s.convs.push_back({p + ".conv2", 3, 3, s.width, s.width});
  }
}

// IMDB_s at width w: a quarter of the channels is distilled after each of the
// first two convolutions.
struct ImdbWidths {
  int width, distilled, remain1, remain2;
};

ImdbWidths imdb_widths(int width) {
  const int d = width / 4;
  return {width, d, width - d, width - 2 * d};
}

void add_imdb(ModelSpec& s, const std::string& prefix, int width) {
  const ImdbWidths iw = imdb_widths(width);
  s.convs.push_back({prefix + ".c1", 3, 3, iw.width, iw.width});
  s.convs.push_back({prefix + ".c2", 3, 3, iw.remain1, iw.remain1});
  s.convs.push_back({prefix + ".c3", 3, 3, iw.remain2, iw.distilled});
  s.convs.push_back({prefix + ".fuse", 1, 1, 3 * iw.distilled, iw.width});
}

void add_feb(ModelSpec& s, const std::string& prefix, int cin) {
  s.convs.push_back({prefix + ".conv1", 3, 3, cin, kFebWidth});
  s.convs.push_back({prefix + ".conv2", 3, 3, kFebWidth, kFebWidth});
}

Shape kernel_shape(const ConvSpec& c) { return Shape{c.kh, c.kw, c.cin, c.cout}; }
Shape bias_shape(const ConvSpec& c) { return Shape{1, 1, 1, c.cout}; }

void expect_shape(const WeightStore& store, const std::string& name, Shape want) {
  const Tensor& t = store.at(name);
  if (t.shape() != want) {
    throw WeightError("weight '" + name + "' has shape " + to_string(t.shape()) + ", expected " + to_string(want));
  }
}

Tensor he_uniform(const ConvSpec& c, Rng& rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(c.kh * c.kw * c.cin));
  Tensor k(kernel_shape(c));
  for (float& v : k.data()) v = rng.uniform(-bound, bound);
  return k;
}

Tensor upscale_skip(const Tensor& frames, const ExecOptions& exec) {
  return resize_bilinear(frames, frames.h() * kUpscale, frames.w() * kUpscale, exec);
}

}  // namespace

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::tinyvsrnet: return "tinyvsrnet";
    case Arch::evsrnet: return "evsrnet";
    case Arch::imdn_s: return "imdn_s";
    case Arch::birnn: return "birnn";
    case Arch::bicubic_baseline: return "bicubic_baseline";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : all_archs()) {
    if (arch_name(a) == name) return a;
  }
  throw ValueError("unknown architecture '" + std::string(name) +
                   "' (expected tinyvsrnet, evsrnet, imdn_s, birnn or bicubic_baseline)");
}

std::vector<Arch> all_archs() {
  return {Arch::tinyvsrnet, Arch::evsrnet, Arch::imdn_s, Arch::birnn, Arch::bicubic_baseline};
}

ModelSpec model_spec(Arch arch) {
  ModelSpec s;
  s.arch = arch;
  const int tail_out = 3 * kUpscale * kUpscale;
  switch (arch) {
    case Arch::tinyvsrnet:
    case Arch::evsrnet:
      s.width = arch == Arch::tinyvsrnet ? 16 : 8;
      s.blocks = arch == Arch::tinyvsrnet ? 3 : 5;
      s.convs.push_back({"head", 3, 3, 3, s.width});
      add_residual_blocks(s);
      s.convs.push_back({"tail", 3, 3, s.width, tail_out});
      break;
    case Arch::imdn_s:
      s.width = 12;
      s.blocks = 3;
      s.convs.push_back({"head", 3, 3, 3, s.width});
      for (int b = 0; b < s.blocks; ++b) add_imdb(s, "imdb" + std::to_string(b), s.width);
      s.convs.push_back({"tail", 3, 3, s.width, tail_out});
      break;
    case Arch::birnn:
      s.width = 2 * kFebWidth;
      s.blocks = 1;
      add_feb(s, "feb_f", 3);
      add_feb(s, "feb_b", 3);
      add_feb(s, "merge_f", 2 * kFebWidth);
      add_feb(s, "merge_b", 2 * kFebWidth);
      s.convs.push_back({"sel.gate", 1, 1, s.width, s.width});
      add_imdb(s, "imdb", s.width);
      s.convs.push_back({"up1", 3, 3, s.width, 12 * 4});
      s.convs.push_back({"up2", 3, 3, 12, 12});
      break;
    case Arch::bicubic_baseline:
      break;
  }
  return s;
}

std::vector<ParamSpec> ModelSpec::params() const {
  std::vector<ParamSpec> out;
  for (const ConvSpec& c : convs) {
    out.push_back({c.layer + ".kernel", kernel_shape(c)});
    out.push_back({c.layer + ".bias", bias_shape(c)});
  }
  return out;
}

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (const ConvSpec& c : convs) n += c.param_count();
  return n;
}

const ConvSpec& ModelSpec::conv(std::string_view layer) const {
  auto it = std::find_if(convs.begin(), convs.end(), [&](const ConvSpec& c) { return c.layer == layer; });
  if (it == convs.end()) throw WeightError("architecture has no layer '" + std::string(layer) + "'");
  return *it;
}

WeightStore init_weights(const ModelSpec& spec, std::uint64_t seed, WeightForm form) {
  Rng rng(seed);
  WeightStore store;
  for (const ConvSpec& c : spec.convs) {
    ConvParams p{he_uniform(c, rng), std::vector<float>(static_cast<std::size_t>(c.cout), 0.0f)};
    if (form == WeightForm::acnet && c.kh == 3 && c.kw == 3) {
      write_branch_group(store, c.layer, expand_acnet(p, rng.next()));
    } else {
      write_conv(store, c.layer, p);
    }
  }
  return store;
}

WeightStore zero_weights(const ModelSpec& spec) {
  WeightStore store;
  for (const ConvSpec& c : spec.convs) {
    write_conv(store, c.layer, ConvParams{Tensor(kernel_shape(c)), std::vector<float>(c.cout, 0.0f)});
  }
  return store;
}

void check_weights(const ModelSpec& spec, const WeightStore& store) {
  std::set<std::string> used;
  for (const ConvSpec& c : spec.convs) {
    const bool plain = store.contains(c.layer + ".kernel") || store.contains(c.layer + ".bias");
    const bool group = has_branch_group(store, c.layer);
    if (plain && group) throw WeightError("layer '" + c.layer + "' is given both plain and as a branch group");
    if (group) {
      if (c.kh != 3 || c.kw != 3) throw WeightError("layer '" + c.layer + "' is 1x1 and cannot be a branch group");
      const Shape shapes[] = {{3, 3, c.cin, c.cout}, {1, 3, c.cin, c.cout}, {3, 1, c.cin, c.cout}};
      const char* tags[] = {"33", "13", "31"};
      for (int i = 0; i < 3; ++i) {
        const std::string k = c.layer + ".k" + tags[i];
        const std::string b = c.layer + ".b" + tags[i];
        expect_shape(store, k, shapes[i]);
        expect_shape(store, b, bias_shape(c));
        used.insert(k);
        used.insert(b);
      }
    } else {
      expect_shape(store, c.layer + ".kernel", kernel_shape(c));
      expect_shape(store, c.layer + ".bias", bias_shape(c));
      used.insert(c.layer + ".kernel");
      used.insert(c.layer + ".bias");
    }
  }
  for (const auto& [name, t] : store) {
    if (!used.contains(name)) {
      throw WeightError("unexpected weight '" + name + "' for architecture " + std::string(arch_name(spec.arch)));
    }
  }
}

Tensor unpack_frames(const Tensor& clip) {
  if (clip.empty()) throw ShapeError("unpack_frames: empty tensor");
  if (clip.n() != 1) throw ShapeError("unpack_frames: clip batch must be 1, got " + std::to_string(clip.n()));
  if (clip.c() % 3 != 0) {
    throw ShapeError("unpack_frames: channel count " + std::to_string(clip.c()) + " is not a multiple of 3");
  }
  const int frames = clip.c() / 3;
  Tensor out = Tensor::uninitialized(Shape{frames, clip.h(), clip.w(), 3});
  const std::size_t pixels = static_cast<std::size_t>(clip.h()) * clip.w();
  const float* src = clip.data().data();
  float* dst = out.data().data();
  for (std::size_t px = 0; px < pixels; ++px)
    for (int f = 0; f < frames; ++f)
      for (int c = 0; c < 3; ++c) dst[(f * pixels + px) * 3 + c] = *src++;
  return out;
}

Tensor pack_frames(const Tensor& frames) {
  if (frames.empty()) throw ShapeError("pack_frames: empty tensor");
  if (frames.c() != 3) throw ShapeError("pack_frames: frames must have 3 channels, got " + std::to_string(frames.c()));
  Tensor out = Tensor::uninitialized(Shape{1, frames.h(), frames.w(), 3 * frames.n()});
  const std::size_t pixels = static_cast<std::size_t>(frames.h()) * frames.w();
  const float* src = frames.data().data();
  float* dst = out.data().data();
  const std::size_t plane = pixels * 3;
  for (std::size_t px = 0; px < pixels; ++px)
    for (int f = 0; f < frames.n(); ++f)
      for (int c = 0; c < 3; ++c) *dst++ = src[f * plane + px * 3 + c];
  return out;
}

Tensor Model::Layer::operator()(const Tensor& x, const ExecOptions& exec) const {
  if (const auto* conv = std::get_if<ConvParams>(&impl)) return conv2d(x, *conv, exec);
  return conv2d_branches(x, std::get<AsymBranchGroup>(impl), exec);
}

Model::Model(ModelSpec spec, const WeightStore& weights, bool fuse) : spec_(std::move(spec)) {
  check_weights(spec_, weights);
  for (const ConvSpec& c : spec_.convs) {
    Layer l;
    if (has_branch_group(weights, c.layer)) {
      AsymBranchGroup g = read_branch_group(weights, c.layer);
      if (fuse) {
        l.impl = fuse_acnet(g);
      } else {
        l.impl = std::move(g);
      }
    } else {
      l.impl = read_conv(weights, c.layer);
    }
    layers_.emplace(c.layer, std::move(l));
  }
}

Model::Model(Arch arch) : Model(model_spec(arch), WeightStore{}) {}

const Model::Layer& Model::layer(const std::string& name) const {
  auto it = layers_.find(name);
  if (it == layers_.end()) throw WeightError("model has no layer '" + name + "'");
  return it->second;
}

Tensor Model::forward(const Tensor& clip, const ExecOptions& exec) const {
  const Tensor frames = unpack_frames(clip);
  Tensor out;
  switch (spec_.arch) {
    case Arch::tinyvsrnet: out = forward_tinyvsrnet(frames, exec); break;
    case Arch::evsrnet: out = forward_evsrnet(frames, exec); break;
    case Arch::imdn_s: out = forward_imdn_s(frames, exec); break;
    case Arch::birnn: out = forward_birnn(frames, exec); break;
    case Arch::bicubic_baseline: out = forward_bicubic(frames, exec); break;
  }
  if (exec.validate && !out.all_finite()) {
    throw NumericError(std::string(arch_name(spec_.arch)) + " forward produced a non-finite value");
  }
  return pack_frames(out);
}

Tensor Model::residual_block(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const {
  Tensor y = relu(layer(prefix + ".conv1")(x, exec));
  y = layer(prefix + ".conv2")(y, exec);
  return add(std::move(y), x);
}

Tensor Model::imdb_block(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const {
  const ImdbWidths iw = imdb_widths(x.c());
  const int split1[] = {iw.distilled, iw.remain1};
  const int split2[] = {iw.distilled, iw.remain2};

  auto s1 = split_channels(relu(layer(prefix + ".c1")(x, exec)), split1);
  const Tensor c2 = relu(layer(prefix + ".c2")(s1[1], exec));
  auto s2 = split_channels(c2, split2);
  const Tensor c3 = relu(layer(prefix + ".c3")(s2[1], exec));
  const Tensor parts[] = {s1[0], s2[0], c3};
  const Tensor cat = concat_channels(parts);
  const Tensor fused = layer(prefix + ".fuse")(cat, exec);
  if (exec.stats) {
    exec.stats->imdb_traces.push_back(
        {x.c(), s1[0].c(), s1[1].c(), c2.c(), s2[0].c(), s2[1].c(), c3.c(), cat.c(), fused.c()});
  }
  return add(std::move(fused), x);
}

Tensor Model::feb(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const {
  Tensor y = relu(layer(prefix + ".conv1")(x, exec));
  return relu(layer(prefix + ".conv2")(y, exec));
}

Tensor Model::forward_tinyvsrnet(const Tensor& frames, const ExecOptions& exec) const {
  Tensor f = layer("head")(frames, exec);
  for (int b = 0; b < spec_.blocks; ++b) f = residual_block(f, "block" + std::to_string(b), exec);
  Tensor detail = depth_to_space(layer("tail")(f, exec), kUpscale);
  return add(std::move(detail), upscale_skip(frames, exec));
}

Tensor Model::forward_evsrnet(const Tensor& frames, const ExecOptions& exec) const {
  Tensor f = layer("head")(frames, exec);
  for (int b = 0; b < spec_.blocks; ++b) f = residual_block(f, "block" + std::to_string(b), exec);
  return depth_to_space(layer("tail")(f, exec), kUpscale);
}

Tensor Model::forward_imdn_s(const Tensor& frames, const ExecOptions& exec) const {
  const Tensor head = layer("head")(frames, exec);
  Tensor f = head;
  for (int b = 0; b < spec_.blocks; ++b) f = imdb_block(f, "imdb" + std::to_string(b), exec);
  f = add(std::move(f), head);
  return depth_to_space(layer("tail")(f, exec), kUpscale);
}

Tensor Model::forward_birnn(const Tensor& frames, const ExecOptions& exec) const {
  const int count = frames.n();
  const Tensor feat_f = feb(frames, "feb_f", exec);
  const Tensor feat_b = feb(frames, "feb_b", exec);

  std::vector<Tensor> fwd(static_cast<std::size_t>(count));
  std::vector<Tensor> bwd(static_cast<std::size_t>(count));
  const Tensor zero_state(Shape{1, frames.h(), frames.w(), kFebWidth});
  const Tensor* prev = &zero_state;
  for (int t = 0; t < count; ++t) {
    fwd[t] = feb(concat_channels(slice_batch(feat_f, t), *prev), "merge_f", exec);
    prev = &fwd[t];
  }
  prev = &zero_state;
  for (int t = count - 1; t >= 0; --t) {
    bwd[t] = feb(concat_channels(slice_batch(feat_b, t), *prev), "merge_b", exec);
    prev = &bwd[t];
  }

  const Tensor fused = concat_channels(stack_batch(fwd), stack_batch(bwd));
  const Tensor gate = sigmoid(layer("sel.gate")(relu(fused), exec));
  Tensor x = imdb_block(multiply(fused, gate), "imdb", exec);
  x = depth_to_space(layer("up1")(x, exec), 2);
  x = depth_to_space(layer("up2")(x, exec), 2);
  return add(std::move(x), upscale_skip(frames, exec));
}

Tensor Model::forward_bicubic(const Tensor& frames, const ExecOptions& exec) const {
  return resize_bicubic(frames, frames.h() * kUpscale, frames.w() * kUpscale, false, exec);
}

Tensor forward_tinyvsrnet(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec) {
  return Model(model_spec(Arch::tinyvsrnet), weights).forward(clip, exec);
}

Tensor forward_evsrnet(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec) {
  return Model(model_spec(Arch::evsrnet), weights).forward(clip, exec);
}

Tensor forward_imdn_s(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec) {
  return Model(model_spec(Arch::imdn_s), weights).forward(clip, exec);
}

Tensor forward_birnn(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec) {
  return Model(model_spec(Arch::birnn), weights).forward(clip, exec);
}

Tensor forward_bicubic_baseline(const Tensor& clip, const ExecOptions& exec) {
  return Model(Arch::bicubic_baseline).forward(clip, exec);
}

}  // namespace mvsr
