#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sts/error.hpp"

namespace sts {

/// Dense row-major tensor with a runtime shape.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  BasicTensor(std::initializer_list<std::size_t> shape, T fill = T{})
      : BasicTensor(std::vector<std::size_t>(shape), fill) {}

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t i0, std::size_t i1) { return data_[i0 * shape_[1] + i1]; }
  const T& at(std::size_t i0, std::size_t i1) const { return data_[i0 * shape_[1] + i1]; }
  T& at(std::size_t i0, std::size_t i1, std::size_t i2) {
    return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
  }
  const T& at(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
  }
  T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
    return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
  }
  const T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
    return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
  }

  bool same_shape(const std::vector<std::size_t>& other) const noexcept { return shape_ == other; }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using CountTensor = BasicTensor<std::int32_t>;
using Mask = BasicTensor<std::uint8_t>;

std::string shape_string(const std::vector<std::size_t>& shape);

inline void require_shape(const std::vector<std::size_t>& actual, const std::vector<std::size_t>& expected,
                          const char* what) {
  if (actual != expected) {
    throw Error(ErrorKind::kShape, std::string(what) + ": expected shape " + shape_string(expected) +
                                       ", got " + shape_string(actual));
  }
}

}  // namespace sts
