#include "snnconv/normalizer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "snnconv/ann.hpp"
#include "snnconv/encoder.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/rng.hpp"
#include "snnconv/snn.hpp"

namespace snnconv {
namespace {

void check_samples(const NetworkGraph& graph, const Tensor& samples) {
  if (samples.rank() != graph.input_shape.size() + 1 || samples.dim(0) == 0) {
    throw ArgumentError("normalization needs a non-empty batch of samples");
  }
  Shape s(samples.shape().begin() + 1, samples.shape().end());
  if (s != graph.input_shape) throw ShapeError("sample shape does not match network input");
}

double apply_floor(double v, const std::string& layer, const NormalizeConfig& config) {
  if (v > 0.0) return v;
  if (!config.enable_floor) throw DegenerateLayerError(layer, "layer '" + layer + "' never activates");
  const std::string msg = "warning: layer '" + layer + "' never activates; threshold floored to " +
                          std::to_string(config.floor);
  if (config.on_warning) {
    config.on_warning(msg);
  } else {
    std::cerr << msg << '\n';
  }
  return config.floor;
}

// The spiking site (or network input) whose spikes feed the weighted path of
// `layer`, walking back through non-spiking layers.
std::size_t driving_site(const NetworkGraph& graph, const Topology& topo, const std::vector<int>& site_of,
                         std::size_t layer) {
  std::size_t cur = topo.inputs[layer][0];
  while (cur != kNetworkInput && site_of[cur] < 0) {
    const auto& l = graph.layers[cur];
    if (l.kind == LayerKind::add_junction) {
      // Follow the weighted branch.
      const auto& in = topo.inputs[cur];
      std::size_t pick = in[0];
      for (std::size_t src : in) {
        std::size_t probe = src;
        bool weighted = false;
        while (probe != kNetworkInput && site_of[probe] < 0) {
          if (is_synaptic(graph.layers[probe].kind)) {
            weighted = true;
            break;
          }
          probe = topo.inputs[probe][0];
        }
        if (weighted) {
          pick = src;
          break;
        }
      }
      cur = pick;
    } else {
      cur = topo.inputs[cur][0];
    }
  }
  return cur;
}

}  // namespace

std::vector<double> ann_activation_maxima(const NetworkGraph& graph, const Tensor& samples) {
  check_samples(graph, samples);
  return record_max_activations(graph, samples);
}

ThresholdSet ann_based_thresholds(const NetworkGraph& graph, const Tensor& samples, const NormalizeConfig& config) {
  const auto maxima = ann_activation_maxima(graph, samples);
  const Topology topo = analyze_topology(graph);
  const auto sites = spiking_sites(graph, topo);
  std::vector<int> site_of(graph.layers.size(), -1);
  for (std::size_t k = 0; k < sites.size(); ++k) site_of[sites[k]] = static_cast<int>(k);

  ThresholdSet set;
  set.method = ThresholdMethod::ann_based;
  std::vector<double> lambda(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto& id = graph.layers[sites[k]].id;
    lambda[k] = apply_floor(maxima[k], id, config);
    const std::size_t src = driving_site(graph, topo, site_of, sites[k]);
    const double prev = src == kNetworkInput ? graph.preprocessing.scale : lambda[static_cast<std::size_t>(site_of[src])];
    set.layers.push_back(id);
    set.values.push_back(lambda[k] / prev);
  }
  return set;
}

ThresholdSet spike_norm(const NetworkGraph& graph, const Tensor& samples, const NormalizeConfig& config) {
  check_samples(graph, samples);
  if (config.timesteps == 0) throw ArgumentError("timesteps must be at least 1");
  const Topology topo = analyze_topology(graph);
  const auto sites = spiking_sites(graph, topo);
  const std::size_t n = samples.dim(0);
  const std::size_t per = shape_numel(graph.input_shape);

  std::vector<double> thresholds(sites.size(), std::numeric_limits<double>::quiet_NaN());
  ThresholdSet set;
  set.method = ThresholdMethod::spike_norm;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto& id = graph.layers[sites[k]].id;
    set.layers.push_back(id);
    if (config.fixed) {
      if (const auto v = config.fixed->find(id)) {
        thresholds[k] = *v;
        set.values.push_back(*v);
        continue;
      }
    }
    double best = 0.0;
    const SpikingNetwork proto(graph, thresholds);
#pragma omp parallel reduction(max : best)
    {
      SpikingNetwork net = proto;
      EventList input;
#pragma omp for schedule(dynamic, 1)
      for (std::size_t i = 0; i < n; ++i) {
        net.reset();
        EncoderState enc(graph.preprocessing.scale, derive_seed(config.seed, i));
        const auto image = samples.data().subspan(i * per, per);
        for (std::size_t t = 0; t < config.timesteps; ++t) {
          poisson_events(image, enc, input);
          for (double v : net.probe(input, k)) best = std::max(best, v);
        }
      }
    }
    thresholds[k] = apply_floor(best, id, config);
    set.values.push_back(thresholds[k]);
  }
  return set;
}

std::pair<NetworkGraph, ThresholdSet> to_weight_normalized(const NetworkGraph& graph, const ThresholdSet& thresholds) {
  for (double v : thresholds.values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("thresholds must be positive to normalize weights");
  }
  const auto values = thresholds.aligned(graph);
  const Topology topo = analyze_topology(graph);
  const auto sites = spiking_sites(graph, topo);
  std::vector<int> site_of(graph.layers.size(), -1);
  for (std::size_t k = 0; k < sites.size(); ++k) site_of[sites[k]] = static_cast<int>(k);

  NetworkGraph out = graph;
  std::vector<bool> scaled(graph.layers.size(), false);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const double th = values[k];
    const auto& l = graph.layers[sites[k]];
    std::vector<std::size_t> stack;
    if (l.kind == LayerKind::relu) {
      stack.push_back(topo.inputs[sites[k]][0]);
    } else {
      stack.push_back(sites[k]);
    }
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const bool is_self = cur == sites[k];
      if (cur == kNetworkInput || (!is_self && site_of[cur] >= 0)) {
        if (th != 1.0) {
          throw ConstraintError("spiking layer '" + l.id +
                                "' is driven through an identity path; its threshold must be 1 to fold into weights");
        }
        continue;
      }
      const auto& cl = graph.layers[cur];
      if (is_synaptic(cl.kind)) {
        if (scaled[cur]) throw StructuralError("layer '" + cl.id + "' drives more than one spiking layer");
        scaled[cur] = true;
        if (th != 1.0) {
          auto& w = out.weights.at(cl.id).storage();
          for (auto& x : w) x = static_cast<float>(static_cast<double>(x) / th);
        }
        continue;
      }
      for (std::size_t src : topo.inputs[cur]) stack.push_back(src);
    }
  }
  return {std::move(out), unity_thresholds(out)};
}

}  // namespace snnconv
