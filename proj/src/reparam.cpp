#include "mvsr/reparam.hpp"

#include <string>

#include "mvsr/error.hpp"
#include "mvsr/random.hpp"

namespace mvsr {

namespace {

void require_kernel(const ConvParams& p, int kh, int kw, const char* branch) {
  p.validate();
  if (p.kernel_h() != kh || p.kernel_w() != kw) {
    throw ShapeError(std::string("branch ") + branch + " must be " + std::to_string(kh) + "x" +
                     std::to_string(kw) + ", got " + std::to_string(p.kernel_h()) + "x" +
                     std::to_string(p.kernel_w()));
  }
}

Tensor bias_tensor(const std::vector<float>& bias) {
  return Tensor(Shape{1, 1, 1, static_cast<int>(bias.size())}, bias);
}

std::vector<float> bias_vector(const Tensor& t, const std::string& name) {
  if (t.n() != 1 || t.h() != 1 || t.w() != 1) {
    throw WeightError("bias '" + name + "' must be a vector, got " + to_string(t.shape()));
  }
  return {t.data().begin(), t.data().end()};
}

}  // namespace

void AsymBranchGroup::validate() const {
  require_kernel(k33, 3, 3, "k33");
  require_kernel(k13, 1, 3, "k13");
  require_kernel(k31, 3, 1, "k31");
  const int ci = k33.in_channels(), co = k33.out_channels();
  for (const ConvParams* p : {&k13, &k31}) {
    if (p->in_channels() != ci || p->out_channels() != co) {
      throw ShapeError("branch channel counts differ: 3x3 is " + std::to_string(ci) + "->" + std::to_string(co) +
                       ", other branch is " + std::to_string(p->in_channels()) + "->" +
                       std::to_string(p->out_channels()));
    }
  }
}

ConvParams fuse_acnet(const AsymBranchGroup& group) {
  group.validate();
  const int ci = group.k33.in_channels(), co = group.k33.out_channels();
  ConvParams fused{group.k33.kernel, group.k33.bias};
  for (int kh = 0; kh < 3; ++kh)
    for (int kw = 0; kw < 3; ++kw)
      for (int i = 0; i < ci; ++i)
        for (int o = 0; o < co; ++o) {
          float v = group.k33.kernel.at(kh, kw, i, o);
          if (kh == 1) v += group.k13.kernel.at(0, kw, i, o);
          if (kw == 1) v += group.k31.kernel.at(kh, 0, i, o);
          fused.kernel.at(kh, kw, i, o) = v;
        }
  for (int o = 0; o < co; ++o) {
    fused.bias[o] = group.k33.bias[o] + group.k13.bias[o] + group.k31.bias[o];
  }
  return fused;
}

Tensor conv2d_branches(const Tensor& input, const AsymBranchGroup& group, const ExecOptions& exec) {
  group.validate();
  Tensor sum = conv2d(input, group.k33, exec);
  sum = add(std::move(sum), conv2d(input, group.k13, exec));
  return add(std::move(sum), conv2d(input, group.k31, exec));
}

AsymBranchGroup expand_acnet(const ConvParams& params, std::uint64_t seed) {
  require_kernel(params, 3, 3, "input");
  const int ci = params.in_channels(), co = params.out_channels();
  Rng rng(seed);
  AsymBranchGroup g{params,
                    ConvParams{Tensor(Shape{1, 3, ci, co}), std::vector<float>(co)},
                    ConvParams{Tensor(Shape{3, 1, ci, co}), std::vector<float>(co)}};
  for (int i = 0; i < ci; ++i)
    for (int o = 0; o < co; ++o) {
      // Row share goes to the 1x3 branch, column share to the 3x1 branch;
      // the centre tap is shared by all three.
      const float row_share = rng.uniform(0.1f, 0.4f);
      const float col_share = rng.uniform(0.1f, 0.4f);
      for (int kw = 0; kw < 3; ++kw) g.k13.kernel.at(0, kw, i, o) = row_share * params.kernel.at(1, kw, i, o);
      for (int kh = 0; kh < 3; ++kh) g.k31.kernel.at(kh, 0, i, o) = col_share * params.kernel.at(kh, 1, i, o);
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          float v = params.kernel.at(kh, kw, i, o);
          if (kh == 1) v -= g.k13.kernel.at(0, kw, i, o);
          if (kw == 1) v -= g.k31.kernel.at(kh, 0, i, o);
          g.k33.kernel.at(kh, kw, i, o) = v;
        }
    }
  for (int o = 0; o < co; ++o) {
    g.k13.bias[o] = rng.uniform(0.1f, 0.4f) * params.bias[o];
    g.k31.bias[o] = rng.uniform(0.1f, 0.4f) * params.bias[o];
    g.k33.bias[o] = params.bias[o] - g.k13.bias[o] - g.k31.bias[o];
  }
  return g;
}

bool has_branch_group(const WeightStore& store, const std::string& layer) {
  return store.contains(layer + ".k33");
}

AsymBranchGroup read_branch_group(const WeightStore& store, const std::string& layer) {
  AsymBranchGroup g;
  ConvParams* branches[] = {&g.k33, &g.k13, &g.k31};
  const char* tags[] = {"33", "13", "31"};
  for (int i = 0; i < 3; ++i) {
    const std::string bias_name = layer + ".b" + tags[i];
    branches[i]->kernel = store.at(layer + ".k" + tags[i]);
    branches[i]->bias = bias_vector(store.at(bias_name), bias_name);
  }
  try {
    g.validate();
  } catch (const ShapeError& e) {
    throw WeightError("layer '" + layer + "': " + e.what());
  }
  return g;
}

void write_branch_group(WeightStore& store, const std::string& layer, const AsymBranchGroup& group) {
  group.validate();
  store.set(layer + ".k33", group.k33.kernel);
  store.set(layer + ".k13", group.k13.kernel);
  store.set(layer + ".k31", group.k31.kernel);
  store.set(layer + ".b33", bias_tensor(group.k33.bias));
  store.set(layer + ".b13", bias_tensor(group.k13.bias));
  store.set(layer + ".b31", bias_tensor(group.k31.bias));
}

ConvParams read_conv(const WeightStore& store, const std::string& layer) {
  const std::string bias_name = layer + ".bias";
  ConvParams p{store.at(layer + ".kernel"), bias_vector(store.at(bias_name), bias_name)};
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw WeightError("layer '" + layer + "': " + e.what());
  }
  return p;
}

void write_conv(WeightStore& store, const std::string& layer, const ConvParams& params) {
  params.validate();
  store.set(layer + ".kernel", params.kernel);
  store.set(layer + ".bias", bias_tensor(params.bias));
}

WeightStore fuse_store(const WeightStore& store) {
  constexpr std::string_view suffix = ".k33";
  WeightStore out;
  std::vector<std::string> groups;
  for (const auto& [name, t] : store) {
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      groups.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  auto in_group = [&](const std::string& name) {
    for (const std::string& layer : groups) {
      if (name.size() == layer.size() + 4 && name.starts_with(layer) && name[layer.size()] == '.') {
        const std::string tag = name.substr(layer.size() + 1);
        if (tag == "k33" || tag == "k13" || tag == "k31" || tag == "b33" || tag == "b13" || tag == "b31") return true;
      }
    }
    return false;
  };
  for (const auto& [name, t] : store) {
    if (!in_group(name)) out.insert(name, t);
  }
  for (const std::string& layer : groups) {
    if (out.contains(layer + ".kernel") || out.contains(layer + ".bias")) {
      throw WeightError("layer '" + layer + "' has both a branch group and a fused kernel");
    }
    write_conv(out, layer, fuse_acnet(read_branch_group(store, layer)));
  }
  return out;
}

}  // namespace mvsr
