#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace c2f {

/// Dense (batch, channels, rows, cols) tensor, row-major.
template <typename T>
class Tensor4 {
 public:
  using Shape = std::array<std::size_t, 4>;

  Tensor4() = default;
  explicit Tensor4(Shape shape) : shape_(shape), data_(count(shape), T(0)) {}
  Tensor4(Shape shape, std::vector<T> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t batch() const noexcept { return shape_[0]; }
  std::size_t channels() const noexcept { return shape_[1]; }
  std::size_t rows() const noexcept { return shape_[2]; }
  std::size_t cols() const noexcept { return shape_[3]; }
  std::size_t plane() const noexcept { return shape_[2] * shape_[3]; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }

  T* sample(std::size_t n) noexcept { return data_.data() + n * shape_[1] * plane(); }
  const T* sample(std::size_t n) const noexcept { return data_.data() + n * shape_[1] * plane(); }

  T& at(std::size_t n, std::size_t c, std::size_t r, std::size_t k) {
    return data_[((n * shape_[1] + c) * shape_[2] + r) * shape_[3] + k];
  }
  T at(std::size_t n, std::size_t c, std::size_t r, std::size_t k) const {
    return data_[((n * shape_[1] + c) * shape_[2] + r) * shape_[3] + k];
  }

  static std::size_t count(const Shape& s) noexcept { return s[0] * s[1] * s[2] * s[3]; }

  bool operator==(const Tensor4&) const = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

std::string shape_string(const std::array<std::size_t, 4>& s);

template <typename To, typename From>
Tensor4<To> tensor_cast(const Tensor4<From>& t) {
  std::vector<To> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(t.data()[i]);
  return Tensor4<To>(t.shape(), std::move(out));
}

extern template class Tensor4<float>;
extern template class Tensor4<double>;

}  // namespace c2f
