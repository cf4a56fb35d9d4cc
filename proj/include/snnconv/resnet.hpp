#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snnconv/netgraph.hpp"
#include "snnconv/thresholds.hpp"

namespace snnconv {

struct ResidualBlock {
  std::size_t junction = 0;
  std::size_t fork = 0;                    // layer whose output feeds both paths
  std::size_t identity_slot = 0;           // junction input index carrying the shortcut
  std::vector<std::size_t> branch;         // layers on the non-identity path
  std::optional<std::size_t> junction_relu;
};

enum class SiteRole { stem, residual, head };

struct ResidualStructure {
  std::vector<ResidualBlock> blocks;
  std::vector<std::size_t> sites;  // spiking_sites()
  std::vector<SiteRole> roles;     // aligned with sites
};

// Identifies identity-shortcut blocks. Throws StructuralError for projection
// shortcuts (both paths carrying weights) or junctions without a common fork.
ResidualStructure analyze_residual(const NetworkGraph& graph, const Topology& topo);

// Per layer: true for conv/linear layers on a residual (non-identity) path.
std::vector<bool> residual_path_mask(const NetworkGraph& graph, const Topology& topo);

// Adds a relu after every add_junction that lacks one. Idempotent.
NetworkGraph insert_junction_relus(NetworkGraph graph);

// Stem sites keep their values from `stem_thresholds`; every other spiking
// site (residual units and the head) gets `unit_threshold`. Both fan-in
// layers of each junction therefore share one value. Throws
// ConversionIncompleteError when a stem site is missing.
ThresholdSet apply_residual_threshold_policy(const NetworkGraph& graph, const ThresholdSet& stem_thresholds,
                                             double unit_threshold = 1.0);

struct StemReplacement {
  NetworkGraph graph;
  bool replaced = false;
  std::string notice;
};

// Replaces a leading wide-kernel conv (k > 3) by three 3x3 convs with the
// same output shape: the first carries the original stride, the first two
// are plain (relu after each), the third keeps the original layer id. New
// layers are zero-filled and marked needs_training.
StemReplacement replace_stem(const NetworkGraph& graph);

}  // namespace snnconv
