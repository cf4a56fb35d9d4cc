#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snnconv/tensor.hpp"

namespace snnconv {

// maxpool2d and batchnorm exist only so that foreign graphs can be represented
// and rejected by the validator; no engine executes them.
enum class LayerKind { conv2d, linear, avgpool2d, relu, dropout, add_junction, identity, maxpool2d, batchnorm };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::identity;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  int channels_in = 0;
  int channels_out = 0;
  double dropout_p = 0.0;
  // Predecessor ids. Empty means the layer reads the network input.
  std::vector<std::string> inputs;
  bool has_bias = false;
  // Set by graph rewrites that introduce fresh, untrained weights.
  bool needs_training = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct InputPreprocessing {
  Tensor mean;        // per-pixel mean subtracted before inference; empty = none
  double scale = 1.0;  // Poisson encoder normalization scale
  friend bool operator==(const InputPreprocessing&, const InputPreprocessing&) = default;
};

// Topologically ordered layer list plus weights. The last layer is the output.
struct NetworkGraph {
  Shape input_shape;  // CHW
  int num_classes = 0;
  std::vector<LayerSpec> layers;
  std::map<std::string, Tensor> weights;
  InputPreprocessing preprocessing;
  std::map<std::string, std::string> metadata;

  std::size_t index_of(const std::string& id) const;
  const LayerSpec& layer(const std::string& id) const { return layers[index_of(id)]; }
  const Tensor& weight(const std::string& id) const;
  Tensor& weight(const std::string& id);

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;
};

inline constexpr std::size_t kNetworkInput = std::numeric_limits<std::size_t>::max();

struct Topology {
  std::vector<std::vector<std::size_t>> inputs;     // kNetworkInput marks the graph input
  std::vector<std::vector<std::size_t>> consumers;
  std::vector<Shape> output_shapes;
  std::size_t output = 0;

  const Shape& input_shape_of(std::size_t layer, const NetworkGraph& g, std::size_t slot = 0) const {
    const std::size_t src = inputs[layer][slot];
    return src == kNetworkInput ? g.input_shape : output_shapes[src];
  }
};

// Resolves references and infers shapes. Throws StructuralError for cycles,
// dangling ids, multiple outputs, wrong arity, or inconsistent weight shapes.
Topology analyze_topology(const NetworkGraph& graph);

struct Violation {
  std::string layer;
  std::string rule;  // bias | pooling | batchnorm | activation | junction-relu | dropout
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

struct ValidationOptions {
  // Also require a relu directly after every add_junction.
  bool strict_residual = false;
};

ValidationReport validate_convertibility(const NetworkGraph& graph, ValidationOptions options = {});

// Throws ConstraintError naming every violation.
void require_convertible(const NetworkGraph& graph, ValidationOptions options = {});

// Layers that become integrate-and-fire populations after conversion, in
// topological order: every relu, every add_junction without a relu
// successor, and the output layer when it is not itself a relu.
std::vector<std::size_t> spiking_sites(const NetworkGraph& graph, const Topology& topo);

inline bool is_synaptic(LayerKind k) { return k == LayerKind::conv2d || k == LayerKind::linear; }

}  // namespace snnconv
