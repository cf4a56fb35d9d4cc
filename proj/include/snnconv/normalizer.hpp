#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snnconv/netgraph.hpp"
#include "snnconv/tensor.hpp"
#include "snnconv/thresholds.hpp"

namespace snnconv {

struct NormalizeConfig {
  std::size_t timesteps = 2500;
  std::uint64_t seed = 0;
  // A site whose maximum is zero gets `floor` (with a warning) when enabled,
  // DegenerateLayerError otherwise.
  bool enable_floor = true;
  double floor = 1e-3;
  // Sites listed here keep the given value and are not re-measured; later
  // sites are balanced against them.
  std::optional<ThresholdSet> fixed;
  // Receives degenerate-layer warnings; stderr when empty.
  std::function<void(const std::string&)> on_warning;
};

// Max analog activation per spiking site (positive part), aligned with
// spiking_sites().
std::vector<double> ann_activation_maxima(const NetworkGraph& graph, const Tensor& samples);

// Effective firing thresholds from ANN maxima. Spikes are binary, so a site
// whose driving spikes stand for activation / lambda_src needs threshold
// lambda / lambda_src; lambda of the network input is the encoder scale.
// Junction sites use the source feeding their weighted branch.
ThresholdSet ann_based_thresholds(const NetworkGraph& graph, const Tensor& samples,
                                  const NormalizeConfig& config = {});

// Sites are balanced one at a time in topological order. For site k the
// network, with sites before k already fixed, is driven by the
// Poisson-encoded samples for T steps and the threshold becomes the largest
// weighted input seen at any step, sample and neuron. Sample i uses encoder
// seed derive_seed(seed, i).
ThresholdSet spike_norm(const NetworkGraph& graph, const Tensor& samples, const NormalizeConfig& config = {});

// Divides the weights driving each site by its threshold and returns the
// graph with unit thresholds. Throws ConstraintError when an identity
// shortcut drives a site whose threshold is not 1 (nothing to rescale) and
// ArgumentError for non-positive thresholds.
std::pair<NetworkGraph, ThresholdSet> to_weight_normalized(const NetworkGraph& graph, const ThresholdSet& thresholds);

}  // namespace snnconv
