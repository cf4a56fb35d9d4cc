#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace snnconv {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Row-major float32 array with an explicit shape. Activations use NCHW.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  // Throws ShapeError if sizes disagree, ArgumentError on non-finite data.
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Row `n` of the leading dimension as a tensor with that dimension dropped.
  Tensor slice(std::size_t n) const;
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

// True when shapes match and every element has the same bit pattern.
bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace snnconv
