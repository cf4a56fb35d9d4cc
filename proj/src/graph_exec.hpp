#pragma once

// Batched dense execution of a NetworkGraph, shared by the analog engine
// (float) and the trainer (float and double).

#include <algorithm>
#include <span>
#include <vector>

#include "snnconv/errors.hpp"
#include "snnconv/kernels.hpp"
#include "snnconv/netgraph.hpp"

namespace snnconv::detail {

inline kernels::ConvGeometry conv_geometry(const LayerSpec& l, const Shape& in) {
  return {in[0], in[1], in[2], static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.kernel),
          static_cast<std::size_t>(l.stride), static_cast<std::size_t>(l.padding)};
}

inline kernels::PoolGeometry pool_geometry(const LayerSpec& l, const Shape& in) {
  return {in[0], in[1], in[2], static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.stride)};
}

template <class T>
struct ExecBuffers {
  std::size_t batch = 0;
  std::vector<std::vector<T>> out;   // per layer, batch-major
  std::vector<std::vector<T>> grad;  // per layer gradient w.r.t. output
};

// Weights are indexed by layer position; non-synaptic layers hold empty vectors.
template <class T>
using WeightSet = std::vector<std::vector<T>>;

template <class T>
WeightSet<T> gather_weights(const NetworkGraph& g) {
  WeightSet<T> w(g.layers.size());
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    if (!is_synaptic(g.layers[i].kind)) continue;
    const auto& t = g.weight(g.layers[i].id);
    w[i].assign(t.data().begin(), t.data().end());
  }
  return w;
}

template <class T>
std::span<const T> layer_input(const Topology& topo, const ExecBuffers<T>& buf, std::span<const T> input,
                               std::size_t layer, std::size_t slot = 0) {
  const std::size_t src = topo.inputs[layer][slot];
  return src == kNetworkInput ? input : std::span<const T>(buf.out[src]);
}

// `dropout_scale`, when non-null, holds per-layer multiplicative masks for
// dropout layers (empty vector = inactive). Null means inference mode.
template <class T>
void forward(const NetworkGraph& g, const Topology& topo, const WeightSet<T>& w, std::span<const T> input,
             std::size_t batch, ExecBuffers<T>& buf, const std::vector<std::vector<T>>* dropout_scale = nullptr) {
  const std::size_t n = g.layers.size();
  buf.batch = batch;
  buf.out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = g.layers[i];
    const Shape& in_shape = topo.input_shape_of(i, g);
    const std::size_t in_size = shape_numel(in_shape);
    const std::size_t out_size = shape_numel(topo.output_shapes[i]);
    auto& out = buf.out[i];
    out.assign(batch * out_size, T(0));
    auto in = layer_input(topo, buf, input, i);
    switch (l.kind) {
      case LayerKind::conv2d:
        kernels::conv2d_forward<T>(conv_geometry(l, in_shape), batch, in, w[i], out);
        break;
      case LayerKind::linear:
        kernels::linear_forward<T>(batch, in_size, out_size, in, w[i], out);
        break;
      case LayerKind::avgpool2d:
        kernels::avgpool_forward<T>(pool_geometry(l, in_shape), batch, in, out);
        break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(T(0), in[k]);
        break;
      case LayerKind::dropout:
        if (dropout_scale && !(*dropout_scale)[i].empty()) {
          const auto& m = (*dropout_scale)[i];
          for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] * m[k];
        } else {
          std::copy(in.begin(), in.end(), out.begin());
        }
        break;
      case LayerKind::identity:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case LayerKind::add_junction: {
        auto other = layer_input(topo, buf, input, i, 1);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] + other[k];
        break;
      }
      case LayerKind::maxpool2d:
      case LayerKind::batchnorm:
        throw ConstraintError("layer '" + l.id + "' of kind " + std::string(to_string(l.kind)) +
                              " cannot be executed");
    }
  }
}

// Backpropagates buf.grad[output] (set by the caller) through the graph and
// writes weight gradients into `wgrad` (same layout as the weights).
template <class T>
void backward(const NetworkGraph& g, const Topology& topo, const WeightSet<T>& w, std::span<const T> input,
              ExecBuffers<T>& buf, WeightSet<T>& wgrad, const std::vector<std::vector<T>>* dropout_scale = nullptr) {
  const std::size_t n = g.layers.size();
  const std::size_t batch = buf.batch;
  buf.grad.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) buf.grad[i].assign(buf.out[i].size(), T(0));
  wgrad.resize(n);

  std::vector<T> scratch;
  auto accumulate = [&](std::size_t src, const std::vector<T>& g_in) {
    if (src == kNetworkInput) return;
    auto& dst = buf.grad[src];
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g_in[k];
  };

  for (std::size_t ii = n; ii-- > 0;) {
    const auto& l = g.layers[ii];
    const auto& gout = buf.grad[ii];
    const Shape& in_shape = topo.input_shape_of(ii, g);
    const std::size_t in_size = shape_numel(in_shape);
    const std::size_t out_size = shape_numel(topo.output_shapes[ii]);
    const std::size_t src = topo.inputs[ii][0];
    auto in = layer_input(topo, buf, input, ii);
    scratch.assign(batch * in_size, T(0));
    switch (l.kind) {
      case LayerKind::conv2d: {
        const auto geo = conv_geometry(l, in_shape);
        wgrad[ii].assign(w[ii].size(), T(0));
        kernels::conv2d_backward_weights<T>(geo, batch, in, gout, wgrad[ii]);
        if (src != kNetworkInput) kernels::conv2d_backward_input<T>(geo, batch, gout, w[ii], scratch);
        break;
      }
      case LayerKind::linear:
        wgrad[ii].assign(w[ii].size(), T(0));
        kernels::linear_backward_weights<T>(batch, in_size, out_size, in, gout, wgrad[ii]);
        if (src != kNetworkInput) kernels::linear_backward_input<T>(batch, in_size, out_size, gout, w[ii], scratch);
        break;
      case LayerKind::avgpool2d:
        kernels::avgpool_backward<T>(pool_geometry(l, in_shape), batch, gout, scratch);
        break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < scratch.size(); ++k) scratch[k] = in[k] > T(0) ? gout[k] : T(0);
        break;
      case LayerKind::dropout:
        if (dropout_scale && !(*dropout_scale)[ii].empty()) {
          const auto& m = (*dropout_scale)[ii];
          for (std::size_t k = 0; k < scratch.size(); ++k) scratch[k] = gout[k] * m[k];
        } else {
          std::copy(gout.begin(), gout.end(), scratch.begin());
        }
        break;
      case LayerKind::identity:
        std::copy(gout.begin(), gout.end(), scratch.begin());
        break;
      case LayerKind::add_junction:
        std::copy(gout.begin(), gout.end(), scratch.begin());
        accumulate(topo.inputs[ii][1], scratch);
        break;
      case LayerKind::maxpool2d:
      case LayerKind::batchnorm:
        throw ConstraintError("layer '" + l.id + "' cannot be differentiated");
    }
    accumulate(src, scratch);
  }
}

}  // namespace snnconv::detail
