#pragma once

#include <optional>
#include <vector>

#include "snnconv/netgraph.hpp"
#include "snnconv/tensor.hpp"

namespace snnconv {

// Cross-correlation of a CHW (or NCHW) input with an [out, in, k, k] kernel.
// Output spatial size is floor((H + 2*pad - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding);

struct ActivationTrace {
  std::vector<Tensor> outputs;      // per layer, [N, ...]
  std::vector<double> max_activation;  // per layer, running max over everything recorded

  void merge_max(const ActivationTrace& other);
};

struct AnnResult {
  Tensor scores;  // [N, classes]
  std::optional<ActivationTrace> trace;
};

// Input is CHW for a single sample or NCHW for a batch; inputs are expected
// to be preprocessed already (mean subtracted).
AnnResult ann_forward(const NetworkGraph& graph, const Tensor& input, bool record_max = false);

std::vector<int> ann_predict(const NetworkGraph& graph, const Tensor& inputs);

// Max over samples and neurons of each spiking site's analog output
// (positive part), aligned with spiking_sites(). Throws ArgumentError on an
// empty subset.
std::vector<double> record_max_activations(const NetworkGraph& graph, const Tensor& samples);

int argmax_lowest(std::span<const float> values);

}  // namespace snnconv
