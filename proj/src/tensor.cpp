#include "snnconv/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "snnconv/errors.hpp"

namespace snnconv {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_to_string(shape_));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw ArgumentError("tensor contains a non-finite value");
  }
}

Tensor Tensor::slice(std::size_t n) const {
  if (shape_.empty() || n >= shape_[0]) throw ShapeError("slice index out of range");
  Shape inner(shape_.begin() + 1, shape_.end());
  const std::size_t stride = shape_numel(inner);
  Tensor out(inner);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(n * stride), stride, out.data_.begin());
  return out;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0);
}

}  // namespace snnconv
