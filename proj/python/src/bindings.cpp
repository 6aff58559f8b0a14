#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <map>
#include <optional>
#include <string>

#include "mvsr/clip.hpp"
#include "mvsr/error.hpp"
#include "mvsr/kernels.hpp"
#include "mvsr/metrics.hpp"
#include "mvsr/models.hpp"
#include "mvsr/reparam.hpp"
#include "mvsr/scoring.hpp"
#include "mvsr/weights.hpp"

namespace py = pybind11;
using namespace mvsr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// Arrays of rank 1..4 are left-padded to NHWC.
Tensor to_tensor(const FloatArray& a) {
  if (a.ndim() < 1 || a.ndim() > 4) throw ShapeError("expected an array of rank 1 to 4");
  int ext[4] = {1, 1, 1, 1};
  for (py::ssize_t i = 0; i < a.ndim(); ++i) ext[4 - a.ndim() + i] = static_cast<int>(a.shape(i));
  return Tensor(Shape{ext[0], ext[1], ext[2], ext[3]}, std::span<const float>(a.data(), static_cast<std::size_t>(a.size())));
}

FloatArray to_array(const Tensor& t) {
  FloatArray out({t.n(), t.h(), t.w(), t.c()});
  std::memcpy(out.mutable_data(), t.data().data(), t.size() * sizeof(float));
  return out;
}

using WeightDict = std::map<std::string, FloatArray>;

WeightStore to_store(const WeightDict& d) {
  WeightStore s;
  for (const auto& [name, a] : d) s.insert(name, to_tensor(a));
  return s;
}

WeightDict to_dict(const WeightStore& s) {
  WeightDict d;
  for (const auto& [name, t] : s) d.emplace(name, to_array(t));
  return d;
}

ExecOptions exec_options(const std::string& mode, int threads) {
  ExecOptions e;
  if (mode == "reference") {
    e.mode = KernelMode::reference;
  } else if (mode != "optimized") {
    throw ValueError("mode must be 'optimized' or 'reference'");
  }
  e.threads = threads;
  return e;
}

ClipSequence to_clip(const std::vector<FloatArray>& frames) {
  ClipSequence c;
  for (const FloatArray& f : frames) c.frames.push_back(to_tensor(f));
  return c;
}

std::vector<FloatArray> to_frames(const ClipSequence& c) {
  std::vector<FloatArray> out;
  for (const Tensor& t : c.frames) out.push_back(to_array(t));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mobile video super-resolution engine";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", error);
  py::register_exception<ValueError>(m, "ValueError", error);
  py::register_exception<NumericError>(m, "NumericError", error);
  py::register_exception<WeightError>(m, "WeightError", error);
  auto io = py::register_exception<IoError>(m, "IoError", error);
  py::register_exception<NoFramesError>(m, "NoFramesError", io);
  auto format = py::register_exception<FormatError>(m, "FormatError", error);
  py::register_exception<BadMagicError>(m, "BadMagicError", format);
  py::register_exception<TruncatedError>(m, "TruncatedError", format);
  py::register_exception<DuplicateNameError>(m, "DuplicateNameError", format);
  py::register_exception<UnsupportedDtypeError>(m, "UnsupportedDtypeError", format);
  py::register_exception<UnsupportedVersionError>(m, "UnsupportedVersionError", format);

  // kernels
  m.def(
      "conv2d",
      [](const FloatArray& x, const FloatArray& kernel, std::vector<float> bias, const std::string& mode,
         int threads) {
        const ConvParams p{to_tensor(kernel), std::move(bias)};
        return to_array(conv2d(to_tensor(x), p, exec_options(mode, threads)));
      },
      py::arg("x"), py::arg("kernel"), py::arg("bias"), py::arg("mode") = "optimized", py::arg("threads") = 0,
      "Same-padded stride-1 convolution. x is NHWC, kernel is [kH, kW, Cin, Cout].");
  m.def(
      "resize_bilinear",
      [](const FloatArray& x, int h, int w, int threads) {
        return to_array(resize_bilinear(to_tensor(x), h, w, exec_options("optimized", threads)));
      },
      py::arg("x"), py::arg("height"), py::arg("width"), py::arg("threads") = 0);
  m.def(
      "resize_bicubic",
      [](const FloatArray& x, int h, int w, bool antialias, int threads) {
        return to_array(resize_bicubic(to_tensor(x), h, w, antialias, exec_options("optimized", threads)));
      },
      py::arg("x"), py::arg("height"), py::arg("width"), py::arg("antialias") = false, py::arg("threads") = 0);
  m.def(
      "depth_to_space", [](const FloatArray& x, int block) { return to_array(depth_to_space(to_tensor(x), block)); },
      py::arg("x"), py::arg("block"));
  m.def(
      "space_to_depth", [](const FloatArray& x, int block) { return to_array(space_to_depth(to_tensor(x), block)); },
      py::arg("x"), py::arg("block"));

  // metrics
  m.def(
      "psnr", [](const FloatArray& p, const FloatArray& r) { return psnr(to_tensor(p), to_tensor(r)); },
      py::arg("pred"), py::arg("ref"));
  m.def(
      "ssim", [](const FloatArray& p, const FloatArray& r) { return ssim(to_tensor(p), to_tensor(r)); },
      py::arg("pred"), py::arg("ref"));

  // scoring
  m.def(
      "final_score", [](double psnr_db, double runtime_ms, double c) { return final_score(psnr_db, runtime_ms, {c}); },
      py::arg("psnr"), py::arg("runtime_ms"), py::arg("c"));
  m.def(
      "fit_c", [](double psnr_db, double runtime_ms, double score) { return fit_c(psnr_db, runtime_ms, score).c; },
      py::arg("psnr"), py::arg("runtime_ms"), py::arg("score"));
  m.def("challenge_table", [] {
    py::list rows;
    for (const TableRow& r : challenge_table())
      rows.append(py::dict(py::arg("team") = r.team, py::arg("psnr") = r.psnr, py::arg("runtime_ms") = r.runtime_ms,
                           py::arg("score") = r.score));
    return rows;
  });

  // models and weights
  m.def("archs", [] {
    std::vector<std::string> names;
    for (Arch a : all_archs()) names.emplace_back(arch_name(a));
    return names;
  });
  m.def("param_count", [](const std::string& arch) { return model_spec(parse_arch(arch)).param_count(); },
        py::arg("arch"));
  m.def(
      "init_weights",
      [](const std::string& arch, std::uint64_t seed, const std::string& form) {
        if (form != "plain" && form != "acnet") throw ValueError("form must be 'plain' or 'acnet'");
        return to_dict(init_weights(model_spec(parse_arch(arch)), seed,
                                    form == "acnet" ? WeightForm::acnet : WeightForm::plain));
      },
      py::arg("arch"), py::arg("seed") = 42, py::arg("form") = "plain");
  m.def("zero_weights", [](const std::string& arch) { return to_dict(zero_weights(model_spec(parse_arch(arch)))); },
        py::arg("arch"));
  m.def("load_weights", [](const std::filesystem::path& p) { return to_dict(load_weights(p)); }, py::arg("path"));
  m.def(
      "save_weights", [](const WeightDict& d, const std::filesystem::path& p) { save_weights(to_store(d), p); },
      py::arg("weights"), py::arg("path"));
  m.def("fuse_weights", [](const WeightDict& d) { return to_dict(fuse_store(to_store(d))); }, py::arg("weights"));
  m.def(
      "unpack_frames", [](const FloatArray& clip) { return to_array(unpack_frames(to_tensor(clip))); },
      py::arg("clip"));
  m.def(
      "pack_frames", [](const FloatArray& frames) { return to_array(pack_frames(to_tensor(frames))); },
      py::arg("frames"));

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& arch, const std::optional<WeightDict>& weights, bool fuse) {
             const ModelSpec spec = model_spec(parse_arch(arch));
             if (!weights) return Model(spec.arch);
             return Model(spec, to_store(*weights), fuse);
           }),
           py::arg("arch"), py::arg("weights") = py::none(), py::arg("fuse") = false)
      .def_property_readonly("arch", [](const Model& self) { return std::string(arch_name(self.spec().arch)); })
      .def(
          "forward",
          [](const Model& self, const FloatArray& clip, const std::string& mode, int threads) {
            const Tensor in = to_tensor(clip);
            const ExecOptions exec = exec_options(mode, threads);
            Tensor out;
            {
              py::gil_scoped_release release;
              out = self.forward(in, exec);
            }
            return to_array(out);
          },
          py::arg("clip"), py::arg("mode") = "optimized", py::arg("threads") = 0)
      .def(
          "__call__",
          [](const Model& self, const FloatArray& clip) { return to_array(self.forward(to_tensor(clip))); },
          py::arg("clip"))
      .def(
          "benchmark",
          [](const Model& self, std::vector<int> dims, int warmup, int runs, int threads, const std::string& mode) {
            if (dims.size() != 4) throw ShapeError("dims must have 4 entries");
            const BenchReport r = benchmark(self, Shape{dims[0], dims[1], dims[2], dims[3]}, warmup, runs, threads,
                                            exec_options(mode, threads).mode);
            return py::module_::import("json").attr("loads")(to_json(r).dump());
          },
          py::arg("dims") = std::vector<int>{1, 180, 320, 30}, py::arg("warmup") = 2, py::arg("runs") = 20,
          py::arg("threads") = 1, py::arg("mode") = "optimized");

  // clips
  m.def("load_clip", [](const std::filesystem::path& dir) { return to_frames(load_clip(dir)); }, py::arg("dir"));
  m.def(
      "save_clip",
      [](const std::vector<FloatArray>& frames, const std::filesystem::path& dir) { save_clip(to_clip(frames), dir); },
      py::arg("frames"), py::arg("dir"));
  m.def(
      "degrade",
      [](const std::vector<FloatArray>& frames, int scale) { return to_frames(degrade_clip(to_clip(frames), scale)); },
      py::arg("frames"), py::arg("scale") = 4);
  m.def(
      "synthetic_clip",
      [](int frames, int h, int w, std::uint64_t seed) { return to_frames(synthetic_clip("synthetic", frames, h, w, seed)); },
      py::arg("frames"), py::arg("height"), py::arg("width"), py::arg("seed") = 42);
}
