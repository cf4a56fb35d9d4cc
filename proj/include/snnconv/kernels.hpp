#pragma once

#include <cstddef>
#include <span>

// Dense compute kernels over NCHW batches. The OpenMP versions are used by
// the engines; the serial versions in `reference` are kept for tests and
// benchmarks. Accumulation is always in double.
namespace snnconv::kernels {

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }
  std::size_t in_size() const { return in_channels * in_h * in_w; }
  std::size_t out_size() const { return out_channels * out_h() * out_w(); }
  std::size_t weight_size() const { return out_channels * in_channels * kernel * kernel; }
};

struct PoolGeometry {
  std::size_t channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t kernel = 2;
  std::size_t stride = 2;

  std::size_t out_h() const { return (in_h - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w - kernel) / stride + 1; }
  std::size_t in_size() const { return channels * in_h * in_w; }
  std::size_t out_size() const { return channels * out_h() * out_w(); }
};

template <class T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::span<const T> in, std::span<const T> w,
                    std::span<T> out);
template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::size_t batch, std::span<const T> grad_out,
                           std::span<const T> w, std::span<T> grad_in);
// Overwrites grad_w with the batch sum.
template <class T>
void conv2d_backward_weights(const ConvGeometry& g, std::size_t batch, std::span<const T> in,
                             std::span<const T> grad_out, std::span<T> grad_w);

template <class T>
void linear_forward(std::size_t batch, std::size_t in_features, std::size_t out_features, std::span<const T> in,
                    std::span<const T> w, std::span<T> out);
template <class T>
void linear_backward_input(std::size_t batch, std::size_t in_features, std::size_t out_features,
                           std::span<const T> grad_out, std::span<const T> w, std::span<T> grad_in);
template <class T>
void linear_backward_weights(std::size_t batch, std::size_t in_features, std::size_t out_features,
                             std::span<const T> in, std::span<const T> grad_out, std::span<T> grad_w);

template <class T>
void avgpool_forward(const PoolGeometry& g, std::size_t batch, std::span<const T> in, std::span<T> out);
template <class T>
void avgpool_backward(const PoolGeometry& g, std::size_t batch, std::span<const T> grad_out, std::span<T> grad_in);

namespace reference {

template <class T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::span<const T> in, std::span<const T> w,
                    std::span<T> out);
template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::size_t batch, std::span<const T> grad_out,
                           std::span<const T> w, std::span<T> grad_in);
template <class T>
void conv2d_backward_weights(const ConvGeometry& g, std::size_t batch, std::span<const T> in,
                             std::span<const T> grad_out, std::span<T> grad_w);
template <class T>
void linear_forward(std::size_t batch, std::size_t in_features, std::size_t out_features, std::span<const T> in,
                    std::span<const T> w, std::span<T> out);
template <class T>
void avgpool_forward(const PoolGeometry& g, std::size_t batch, std::span<const T> in, std::span<T> out);

}  // namespace reference

}  // namespace snnconv::kernels
