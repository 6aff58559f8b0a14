#include "mvsr/weights.hpp"

#include "byte_io.hpp"
#include "mvsr/error.hpp"

namespace mvsr {

namespace {

constexpr std::string_view kMagic = "VSRW";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

}  // namespace

void WeightStore::insert(std::string name, Tensor tensor) {
  if (name.empty()) throw FormatError("weight names must be non-empty");
  if (tensor.empty()) throw ShapeError("weight '" + name + "' is empty");
  if (tensors_.contains(name)) throw DuplicateNameError("duplicate weight name '" + name + "'");
  tensors_.emplace(std::move(name), std::move(tensor));
}

void WeightStore::set(std::string name, Tensor tensor) {
  if (name.empty()) throw FormatError("weight names must be non-empty");
  if (tensor.empty()) throw ShapeError("weight '" + name + "' is empty");
  tensors_.insert_or_assign(std::move(name), std::move(tensor));
}

const Tensor& WeightStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw WeightError("missing weight '" + name + "'");
  return it->second;
}

std::size_t WeightStore::total_elements() const {
  std::size_t total = 0;
  for (const auto& [name, t] : tensors_) total += t.size();
  return total;
}

std::vector<std::string> WeightStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, t] : tensors_) out.push_back(name);
  return out;
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u32(kVersion);
  out.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    if (name.size() > UINT16_MAX) throw FormatError("weight name too long: " + name.substr(0, 32) + "...");
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.bytes(name);
    out.u8(kDtypeF32);
    out.u8(4);
    for (int e : {t.n(), t.h(), t.w(), t.c()}) out.u32(static_cast<std::uint32_t>(e));
    out.floats(t.data());
  }
  return out.take();
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (in.remaining() < kMagic.size() || in.str(kMagic.size(), "magic") != kMagic) {
    throw BadMagicError("not a VSRW weight container");
  }
  const std::uint32_t version = in.u32("version");
  if (version != kVersion) throw UnsupportedVersionError("unsupported container version " + std::to_string(version));
  const std::uint32_t count = in.u32("tensor count");
  // Every record is at least 2 + 1 + 1 + 1 bytes; reject absurd counts up front.
  if (count > in.remaining() / 5) throw TruncatedError("tensor count exceeds container size");

  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = in.u16("name length");
    if (name_len == 0) throw FormatError("empty tensor name in record " + std::to_string(i));
    std::string name = in.str(name_len, "name");
    if (store.contains(name)) throw DuplicateNameError("duplicate tensor name '" + name + "'");
    const std::uint8_t dtype = in.u8("dtype");
    if (dtype != kDtypeF32) {
      throw UnsupportedDtypeError("tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    }
    const int rank = in.u8("rank");
    if (rank < 1 || rank > 4) throw FormatError("tensor '" + name + "' has rank " + std::to_string(rank));
    int ext[4] = {1, 1, 1, 1};
    std::size_t elems = 1;
    for (int r = 0; r < rank; ++r) {
      const std::uint32_t e = in.u32("extent");
      if (e == 0 || e > static_cast<std::uint32_t>(INT32_MAX)) {
        throw FormatError("tensor '" + name + "' has invalid extent " + std::to_string(e));
      }
      ext[4 - rank + r] = static_cast<int>(e);
      elems *= e;
      if (elems > in.remaining() / sizeof(float)) {
        throw TruncatedError("tensor '" + name + "' payload exceeds container size");
      }
    }
    in.need(elems * sizeof(float), "payload");
    Tensor t(Shape{ext[0], ext[1], ext[2], ext[3]});
    in.floats(t.data(), "payload");
    store.insert(std::move(name), std::move(t));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after last tensor");
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_weights(store));
}

WeightStore load_weights(const std::filesystem::path& path) {
  return decode_weights(detail::read_file(path));
}

}  // namespace mvsr
