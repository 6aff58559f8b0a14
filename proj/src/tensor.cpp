#include "mvsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "mvsr/error.hpp"

namespace mvsr {

namespace {

constexpr std::string_view kDumpMagic = "TNSR";

}  // namespace

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.n) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + "," +
         std::to_string(s.c) + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (!shape.valid()) {
    throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::span<const float> data) : shape_(shape), data_(data.begin(), data.end()) {
  if (!shape.valid()) {
    throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
  if (data_.size() != shape.numel()) {
    throw ShapeError("payload has " + std::to_string(data_.size()) + " elements, shape " +
                     to_string(shape) + " needs " + std::to_string(shape.numel()));
  }
}

Tensor Tensor::uninitialized(Shape shape) {
  if (!shape.valid()) {
    throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
  Tensor t;
  t.shape_ = shape;
  t.data_.resize(shape.numel());
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.shape_ != b.shape_) return false;
  // memcmp semantics: -0 != +0 and NaN payloads compare by bits.
  return a.data_.size() == b.data_.size() &&
         std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), [](float x, float y) {
           return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
         });
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  float m = 0.0f;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

std::vector<std::uint8_t> encode_tensor_dump(const Tensor& t) {
  if (t.empty()) throw ShapeError("cannot dump an empty tensor");
  detail::ByteWriter out;
  out.bytes(kDumpMagic);
  out.u8(4);
  for (int e : {t.n(), t.h(), t.w(), t.c()}) out.u32(static_cast<std::uint32_t>(e));
  out.floats(t.data());
  return out.take();
}

Tensor decode_tensor_dump(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (in.remaining() < kDumpMagic.size() || in.str(kDumpMagic.size(), "magic") != kDumpMagic) {
    throw BadMagicError("not a TNSR dump");
  }
  const int rank = in.u8("rank");
  if (rank < 1 || rank > 4) throw FormatError("TNSR rank must be 1..4, got " + std::to_string(rank));
  int ext[4] = {1, 1, 1, 1};
  std::size_t count = 1;
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t e = in.u32("extent");
    if (e == 0 || e > static_cast<std::uint32_t>(INT32_MAX)) throw FormatError("bad TNSR extent");
    count *= e;
    if (count > in.remaining() / sizeof(float)) throw TruncatedError("TNSR payload shorter than extents");
    ext[4 - rank + i] = static_cast<int>(e);
  }
  in.need(count * sizeof(float), "payload");
  Tensor t(Shape{ext[0], ext[1], ext[2], ext[3]});
  in.floats(t.data(), "payload");
  if (in.remaining() != 0) throw FormatError("trailing bytes after TNSR payload");
  return t;
}

void write_tensor_dump(const std::filesystem::path& path, const Tensor& t) {
  detail::write_file_atomic(path, encode_tensor_dump(t));
}

Tensor read_tensor_dump(const std::filesystem::path& path) {
  return decode_tensor_dump(detail::read_file(path));
}

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace detail

}  // namespace mvsr
