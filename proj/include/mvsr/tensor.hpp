#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mvsr {

/// Extents of a rank-4 NHWC tensor.
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
  }
  bool valid() const { return n >= 1 && h >= 1 && w >= 1 && c >= 1; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

namespace detail {

// Value-initialization becomes default-initialization, so resize() leaves
// floats indeterminate instead of zeroing them.
template <class T>
struct NoInitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = NoInitAllocator<U>;
  };
  NoInitAllocator() = default;
  template <class U>
  NoInitAllocator(const NoInitAllocator<U>&) noexcept {}
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

}  // namespace detail

/// Dense NHWC float32 tensor, channels fastest.
///
/// A default-constructed tensor is empty and is rejected by every kernel;
/// all other tensors have positive extents and exactly numel() elements.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::span<const float> data);

  /// Contents are indeterminate; the caller must write every element.
  static Tensor uninitialized(Shape shape);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  int c() const { return shape_.c; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  std::size_t offset(int n, int h, int w, int c) const {
    return ((static_cast<std::size_t>(n) * shape_.h + h) * shape_.w + w) * shape_.c + c;
  }
  float& at(int n, int h, int w, int c) { return data_[offset(n, h, w, c)]; }
  float at(int n, int h, int w, int c) const { return data_[offset(n, h, w, c)]; }

  bool all_finite() const;

  /// Bitwise equality of shape and payload.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_{};
  std::vector<float, detail::NoInitAllocator<float>> data_;
};

/// Max |a - b| over all elements; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

// Golden dump format: "TNSR", u8 rank, rank x u32 LE extents, LE float32 payload.
std::vector<std::uint8_t> encode_tensor_dump(const Tensor& t);
Tensor decode_tensor_dump(std::span<const std::uint8_t> bytes);
void write_tensor_dump(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_dump(const std::filesystem::path& path);

}  // namespace mvsr
