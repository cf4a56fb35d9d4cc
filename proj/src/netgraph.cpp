#include "snnconv/netgraph.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "snnconv/errors.hpp"

namespace snnconv {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::linear, "linear"},
    {LayerKind::avgpool2d, "avgpool2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::add_junction, "add_junction"},
    {LayerKind::identity, "identity"},
    {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::batchnorm, "batchnorm"},
}};

std::size_t pooled_dim(std::size_t in, int kernel, int stride, int pad) {
  const long span = static_cast<long>(in) + 2L * pad - kernel;
  if (span < 0) return 0;
  return static_cast<std::size_t>(span / stride + 1);
}

[[noreturn]] void structural(const LayerSpec& l, const std::string& msg) {
  throw StructuralError("layer '" + l.id + "': " + msg);
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::size_t NetworkGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return i;
  }
  throw StructuralError("unknown layer id '" + id + "'");
}

const Tensor& NetworkGraph::weight(const std::string& id) const {
  auto it = weights.find(id);
  if (it == weights.end()) throw StructuralError("layer '" + id + "' has no weight tensor");
  return it->second;
}

Tensor& NetworkGraph::weight(const std::string& id) {
  auto it = weights.find(id);
  if (it == weights.end()) throw StructuralError("layer '" + id + "' has no weight tensor");
  return it->second;
}

Topology analyze_topology(const NetworkGraph& g) {
  if (g.layers.empty()) throw StructuralError("graph has no layers");
  if (g.input_shape.size() != 3 || shape_numel(g.input_shape) == 0) {
    throw StructuralError("input shape must be CHW with positive dimensions, got " + shape_to_string(g.input_shape));
  }

  const std::size_t n = g.layers.size();
  Topology topo;
  topo.inputs.resize(n);
  topo.consumers.resize(n);
  topo.output_shapes.resize(n);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = g.layers[i];
    if (l.id.empty()) throw StructuralError("layer " + std::to_string(i) + " has an empty id");
    if (!position.emplace(l.id, i).second) throw StructuralError("duplicate layer id '" + l.id + "'");
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = g.layers[i];
    if (l.inputs.empty()) {
      if (i != 0) structural(l, "only the first layer may read the network input");
      topo.inputs[i].push_back(kNetworkInput);
    }
    for (const auto& src : l.inputs) {
      auto it = position.find(src);
      if (it == position.end()) structural(l, "unknown predecessor '" + src + "'");
      if (it->second >= i) structural(l, "predecessor '" + src + "' is not earlier in the order (cycle)");
      topo.inputs[i].push_back(it->second);
      topo.consumers[it->second].push_back(i);
    }

    const std::size_t arity = topo.inputs[i].size();
    if (l.kind == LayerKind::add_junction) {
      if (arity != 2) structural(l, "add_junction needs exactly two predecessors");
    } else if (arity != 1) {
      structural(l, std::string(to_string(l.kind)) + " needs exactly one predecessor");
    }

    const Shape& in = topo.input_shape_of(i, g);
    Shape out;
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (in.size() != 3) structural(l, "conv2d input must be CHW, got " + shape_to_string(in));
        if (l.kernel <= 0 || l.stride <= 0 || l.padding < 0 || l.channels_out <= 0) {
          structural(l, "invalid conv2d parameters");
        }
        if (static_cast<std::size_t>(l.channels_in) != in[0]) {
          structural(l, "expects " + std::to_string(l.channels_in) + " input channels, predecessor has " +
                            std::to_string(in[0]));
        }
        const std::size_t oh = pooled_dim(in[1], l.kernel, l.stride, l.padding);
        const std::size_t ow = pooled_dim(in[2], l.kernel, l.stride, l.padding);
        if (oh == 0 || ow == 0) structural(l, "kernel larger than padded input");
        out = {static_cast<std::size_t>(l.channels_out), oh, ow};
        break;
      }
      case LayerKind::linear:
        if (l.channels_out <= 0) structural(l, "invalid linear width");
        if (static_cast<std::size_t>(l.channels_in) != shape_numel(in)) {
          structural(l, "expects " + std::to_string(l.channels_in) + " inputs, predecessor provides " +
                            std::to_string(shape_numel(in)));
        }
        out = {static_cast<std::size_t>(l.channels_out)};
        break;
      case LayerKind::avgpool2d:
      case LayerKind::maxpool2d: {
        if (in.size() != 3) structural(l, "pooling input must be CHW");
        if (l.kernel <= 0 || l.stride <= 0 || l.padding != 0) structural(l, "invalid pooling parameters");
        const std::size_t oh = pooled_dim(in[1], l.kernel, l.stride, 0);
        const std::size_t ow = pooled_dim(in[2], l.kernel, l.stride, 0);
        if (oh == 0 || ow == 0) structural(l, "pooling window larger than input");
        out = {in[0], oh, ow};
        break;
      }
      case LayerKind::add_junction: {
        const Shape& other = topo.input_shape_of(i, g, 1);
        if (other != in) {
          structural(l, "junction operands disagree: " + shape_to_string(in) + " vs " + shape_to_string(other));
        }
        out = in;
        break;
      }
      case LayerKind::relu:
      case LayerKind::dropout:
      case LayerKind::identity:
      case LayerKind::batchnorm:
        out = in;
        break;
    }
    topo.output_shapes[i] = std::move(out);

    if (is_synaptic(l.kind)) {
      Shape expected = l.kind == LayerKind::conv2d
                           ? Shape{static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in),
                                   static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)}
                           : Shape{static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in)};
      auto w = g.weights.find(l.id);
      if (w == g.weights.end()) structural(l, "missing weight tensor");
      if (w->second.shape() != expected) {
        structural(l, "weight shape " + shape_to_string(w->second.shape()) + " does not match " +
                          shape_to_string(expected));
      }
    }
  }

  for (const auto& [id, t] : g.weights) {
    if (!position.count(id) || !is_synaptic(g.layers[position[id]].kind)) {
      throw StructuralError("weight tensor '" + id + "' does not belong to a conv2d/linear layer");
    }
  }

  std::size_t sinks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (topo.consumers[i].empty()) ++sinks;
  }
  if (sinks != 1 || !topo.consumers[n - 1].empty()) {
    throw StructuralError("graph must have a single output, and it must be the last layer");
  }
  topo.output = n - 1;
  if (g.num_classes > 0 && shape_numel(topo.output_shapes[n - 1]) != static_cast<std::size_t>(g.num_classes)) {
    throw StructuralError("output layer width does not match class count");
  }
  return topo;
}

namespace {

// Skips dropout/identity hops; returns the first consumer that is neither.
std::vector<std::size_t> effective_consumers(const NetworkGraph& g, const Topology& topo, std::size_t i) {
  std::vector<std::size_t> out;
  for (std::size_t c : topo.consumers[i]) {
    const auto k = g.layers[c].kind;
    if (k == LayerKind::dropout || k == LayerKind::identity) {
      auto rest = effective_consumers(g, topo, c);
      out.insert(out.end(), rest.begin(), rest.end());
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

ValidationReport validate_convertibility(const NetworkGraph& g, ValidationOptions options) {
  const Topology topo = analyze_topology(g);
  ValidationReport report;
  auto flag = [&](const LayerSpec& l, std::string rule, std::string msg) {
    report.violations.push_back({l.id, std::move(rule), std::move(msg)});
  };

  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    if (l.has_bias) flag(l, "bias", "layer carries a bias term");
    if (l.kind == LayerKind::maxpool2d) flag(l, "pooling", "max pooling is not convertible; use average pooling");
    if (l.kind == LayerKind::batchnorm) flag(l, "batchnorm", "batch normalization is not convertible");
    if (l.kind == LayerKind::dropout && !(l.dropout_p >= 0.0 && l.dropout_p < 1.0)) {
      flag(l, "dropout", "dropout probability must lie in [0, 1)");
    }

    if (is_synaptic(l.kind) && i != topo.output) {
      bool ok = true;
      for (std::size_t c : effective_consumers(g, topo, i)) {
        const auto k = g.layers[c].kind;
        if (k == LayerKind::relu || k == LayerKind::add_junction) continue;
        if (k == LayerKind::avgpool2d) {
          auto after = effective_consumers(g, topo, c);
          if (!after.empty() && std::all_of(after.begin(), after.end(), [&](std::size_t a) {
                return g.layers[a].kind == LayerKind::relu;
              })) {
            continue;
          }
        }
        ok = false;
      }
      if (!ok) flag(l, "activation", "not followed by a relu");
    }

    if (options.strict_residual && l.kind == LayerKind::add_junction) {
      const auto& cons = topo.consumers[i];
      const bool has_relu = !cons.empty() && std::all_of(cons.begin(), cons.end(), [&](std::size_t c) {
        return g.layers[c].kind == LayerKind::relu;
      });
      if (!has_relu) flag(l, "junction-relu", "junction is not followed by a relu");
    }
  }
  return report;
}

void require_convertible(const NetworkGraph& graph, ValidationOptions options) {
  const auto report = validate_convertibility(graph, options);
  if (report.ok()) return;
  std::ostringstream os;
  os << report.violations.size() << " convertibility violation(s):";
  for (const auto& v : report.violations) os << " [" << v.layer << ": " << v.rule << "]";
  throw ConstraintError(os.str());
}

std::vector<std::size_t> spiking_sites(const NetworkGraph& g, const Topology& topo) {
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto k = g.layers[i].kind;
    if (k == LayerKind::relu) {
      sites.push_back(i);
    } else if (k == LayerKind::add_junction) {
      const auto& cons = topo.consumers[i];
      const bool relu_follows = std::any_of(cons.begin(), cons.end(), [&](std::size_t c) {
        return g.layers[c].kind == LayerKind::relu;
      });
      if (!relu_follows) sites.push_back(i);
    } else if (i == topo.output) {
      sites.push_back(i);
    }
  }
  return sites;
}

}  // namespace snnconv
