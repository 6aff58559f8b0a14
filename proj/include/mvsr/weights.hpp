#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvsr/tensor.hpp"

namespace mvsr {

/// Named tensor collection, iterated in name order.
class WeightStore {
 public:
  using Map = std::map<std::string, Tensor>;

  /// Throws DuplicateNameError if `name` exists, FormatError if it is empty.
  void insert(std::string name, Tensor tensor);
  /// Inserts or overwrites.
  void set(std::string name, Tensor tensor);

  bool contains(const std::string& name) const { return tensors_.contains(name); }
  /// Throws WeightError when absent.
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }
  std::size_t total_elements() const;
  std::vector<std::string> names() const;

  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  Map tensors_;
};

// Container layout (all little-endian):
//   "VSRW" | u32 version = 1 | u32 count
//   per tensor: u16 name_len | name (UTF-8) | u8 dtype (0 = f32) | u8 rank |
//               rank x u32 extents | f32 payload
// Tensors are written at rank 4; ranks 1..3 are accepted on read and
// left-padded with unit extents.
std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

}  // namespace mvsr
