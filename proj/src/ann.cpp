#include "snnconv/ann.hpp"

#include <algorithm>
#include <limits>

#include "graph_exec.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/kernels.hpp"

namespace snnconv {

Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding) {
  const bool batched = input.rank() == 4;
  if (!(input.rank() == 3 || batched) || weights.rank() != 4) {
    throw ShapeError("conv2d expects CHW/NCHW input and [out,in,k,k] weights");
  }
  const std::size_t batch = batched ? input.dim(0) : 1;
  const std::size_t off = batched ? 1 : 0;
  if (weights.dim(1) != input.dim(off)) {
    throw ShapeError("conv2d channel mismatch: input " + shape_to_string(input.shape()) + ", weights " +
                     shape_to_string(weights.shape()));
  }
  if (weights.dim(2) != weights.dim(3)) throw ShapeError("conv2d kernels must be square");
  if (stride <= 0 || padding < 0) throw ShapeError("conv2d stride must be positive and padding non-negative");
  kernels::ConvGeometry geo{input.dim(off),   input.dim(off + 1),
                            input.dim(off + 2), weights.dim(0),
                            weights.dim(2),   static_cast<std::size_t>(stride),
                            static_cast<std::size_t>(padding)};
  if (geo.in_h + 2 * geo.padding < geo.kernel || geo.in_w + 2 * geo.padding < geo.kernel) {
    throw ShapeError("conv2d kernel larger than padded input");
  }
  Shape out_shape{geo.out_channels, geo.out_h(), geo.out_w()};
  if (batched) out_shape.insert(out_shape.begin(), batch);
  Tensor out(out_shape);
  kernels::conv2d_forward<float>(geo, batch, input.data(), weights.data(), out.data());
  return out;
}

void ActivationTrace::merge_max(const ActivationTrace& other) {
  if (max_activation.empty()) {
    max_activation = other.max_activation;
    return;
  }
  for (std::size_t i = 0; i < max_activation.size(); ++i) {
    max_activation[i] = std::max(max_activation[i], other.max_activation[i]);
  }
}

AnnResult ann_forward(const NetworkGraph& graph, const Tensor& input, bool record_max) {
  const Topology topo = analyze_topology(graph);
  const bool batched = input.rank() == graph.input_shape.size() + 1;
  const Shape sample_shape = batched ? Shape(input.shape().begin() + 1, input.shape().end()) : input.shape();
  if (sample_shape != graph.input_shape) {
    throw ShapeError("input shape " + shape_to_string(input.shape()) + " does not match network input " +
                     shape_to_string(graph.input_shape));
  }
  const std::size_t batch = batched ? input.dim(0) : 1;

  const auto weights = detail::gather_weights<float>(graph);
  detail::ExecBuffers<float> buf;
  detail::forward<float>(graph, topo, weights, input.data(), batch, buf);

  AnnResult result;
  const std::size_t classes = shape_numel(topo.output_shapes[topo.output]);
  result.scores = Tensor({batch, classes}, buf.out[topo.output]);
  if (record_max) {
    ActivationTrace trace;
    for (std::size_t i = 0; i < graph.layers.size(); ++i) {
      Shape s = topo.output_shapes[i];
      s.insert(s.begin(), batch);
      const auto& v = buf.out[i];
      trace.max_activation.push_back(v.empty() ? 0.0 : static_cast<double>(*std::max_element(v.begin(), v.end())));
      trace.outputs.emplace_back(std::move(s), std::move(buf.out[i]));
    }
    result.trace = std::move(trace);
  }
  return result;
}

int argmax_lowest(std::span<const float> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> ann_predict(const NetworkGraph& graph, const Tensor& inputs) {
  const auto result = ann_forward(graph, inputs);
  const std::size_t n = result.scores.dim(0), c = result.scores.dim(1);
  std::vector<int> pred(n);
  for (std::size_t i = 0; i < n; ++i) pred[i] = argmax_lowest(result.scores.data().subspan(i * c, c));
  return pred;
}

std::vector<double> record_max_activations(const NetworkGraph& graph, const Tensor& samples) {
  if (samples.empty() || samples.rank() != graph.input_shape.size() + 1 || samples.dim(0) == 0) {
    throw ArgumentError("record_max_activations needs a non-empty NCHW sample batch");
  }
  const Topology topo = analyze_topology(graph);
  const auto sites = spiking_sites(graph, topo);
  const auto weights = detail::gather_weights<float>(graph);
  const std::size_t total = samples.dim(0);
  const std::size_t per = shape_numel(graph.input_shape);
  constexpr std::size_t kChunk = 64;

  std::vector<double> maxima(sites.size(), 0.0);
  detail::ExecBuffers<float> buf;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const std::size_t count = std::min(kChunk, total - start);
    detail::forward<float>(graph, topo, weights, samples.data().subspan(start * per, count * per), count, buf);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      for (float v : buf.out[sites[s]]) maxima[s] = std::max(maxima[s], static_cast<double>(v));
    }
  }
  return maxima;
}

}  // namespace snnconv
