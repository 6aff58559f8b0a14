#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mvsr/exec.hpp"
#include "mvsr/kernels.hpp"
#include "mvsr/reparam.hpp"
#include "mvsr/weights.hpp"

namespace mvsr {

enum class Arch { tinyvsrnet, evsrnet, imdn_s, birnn, bicubic_baseline };

std::string_view arch_name(Arch arch);
/// Throws ValueError for unknown names.
Arch parse_arch(std::string_view name);
std::vector<Arch> all_archs();

/// One convolution layer of an architecture. Parameters are named
/// `<layer>.kernel` [kh, kw, cin, cout] and `<layer>.bias` [1, 1, 1, cout].
struct ConvSpec {
  std::string layer;
  int kh = 3;
  int kw = 3;
  int cin = 0;
  int cout = 0;

  std::size_t param_count() const {
    return static_cast<std::size_t>(kh) * kw * cin * cout + static_cast<std::size_t>(cout);
  }
};

struct ParamSpec {
  std::string name;
  Shape shape;
};

/// Declarative architecture description. Hyperparameters are fixed per arch:
///
///   tinyvsrnet  width 16, 3 residual blocks, bilinear x4 image skip
///   evsrnet     width 8, 5 residual blocks, no image skip
///   imdn_s      width 12, 3 IMDB_s blocks, feature-level global skip
///   birnn       FEB width 16, fusion width 32, one IMDB_s, two x2 up stages
///   bicubic_baseline  no parameters
struct ModelSpec {
  Arch arch = Arch::bicubic_baseline;
  int width = 0;
  int blocks = 0;
  int scale = 4;
  int frames_per_clip = 10;
  std::vector<ConvSpec> convs;

  std::vector<ParamSpec> params() const;
  std::size_t param_count() const;
  const ConvSpec& conv(std::string_view layer) const;
};

ModelSpec model_spec(Arch arch);

enum class WeightForm {
  plain,   // every layer as <layer>.kernel/.bias
  acnet,   // every 3x3 layer as a branch group, 1x1 layers plain
};

/// He-uniform (bound sqrt(6 / fan_in)) kernels, zero biases; deterministic in seed.
WeightStore init_weights(const ModelSpec& spec, std::uint64_t seed, WeightForm form = WeightForm::plain);
WeightStore zero_weights(const ModelSpec& spec);

/// Throws WeightError unless every layer is present exactly once (plain or
/// branch-group form) with the declared shape and no other tensors exist.
void check_weights(const ModelSpec& spec, const WeightStore& store);

/// [1, H, W, 3F] -> [F, H, W, 3]; frame f lives in channels 3f..3f+2.
Tensor unpack_frames(const Tensor& clip);
/// [F, H, W, 3] -> [1, H, W, 3F].
Tensor pack_frames(const Tensor& frames);

/// A loaded network: immutable after construction, safe to share between
/// threads running forward() on different clips.
class Model {
 public:
  /// With `fuse`, branch groups are collapsed to single 3x3 convolutions at
  /// load time; otherwise they run as three convolutions summed.
  Model(ModelSpec spec, const WeightStore& weights, bool fuse = false);
  explicit Model(Arch arch);  // parameter-free archs only

  const ModelSpec& spec() const { return spec_; }

  /// [1, H, W, 3F] -> [1, 4H, 4W, 3F].
  Tensor forward(const Tensor& clip, const ExecOptions& exec = {}) const;

  struct Layer {
    std::variant<ConvParams, AsymBranchGroup> impl;
    Tensor operator()(const Tensor& x, const ExecOptions& exec) const;
  };

 private:
  const Layer& layer(const std::string& name) const;

  Tensor forward_tinyvsrnet(const Tensor& frames, const ExecOptions& exec) const;
  Tensor forward_evsrnet(const Tensor& frames, const ExecOptions& exec) const;
  Tensor forward_imdn_s(const Tensor& frames, const ExecOptions& exec) const;
  Tensor forward_birnn(const Tensor& frames, const ExecOptions& exec) const;
  Tensor forward_bicubic(const Tensor& frames, const ExecOptions& exec) const;

  Tensor residual_block(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const;
  Tensor imdb_block(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const;
  Tensor feb(const Tensor& x, const std::string& prefix, const ExecOptions& exec) const;

  ModelSpec spec_;
  std::map<std::string, Layer, std::less<>> layers_;
};

// Free-function entry points, one per architecture.
Tensor forward_tinyvsrnet(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec = {});
Tensor forward_evsrnet(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec = {});
Tensor forward_imdn_s(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec = {});
Tensor forward_birnn(const Tensor& clip, const WeightStore& weights, const ExecOptions& exec = {});
Tensor forward_bicubic_baseline(const Tensor& clip, const ExecOptions& exec = {});

}  // namespace mvsr
