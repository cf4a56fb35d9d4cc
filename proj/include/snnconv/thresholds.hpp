#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snnconv/netgraph.hpp"

namespace snnconv {

enum class ThresholdMethod { ann_based, spike_norm, unity };

std::string_view to_string(ThresholdMethod m);
std::optional<ThresholdMethod> parse_threshold_method(std::string_view s);

// One firing threshold per spiking site, keyed by layer id, in topological
// order. Weights stay untouched; a site fires when its membrane reaches the
// value.
struct ThresholdSet {
  ThresholdMethod method = ThresholdMethod::unity;
  std::vector<std::string> layers;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  std::optional<double> find(const std::string& layer) const;

  // Values aligned with spiking_sites(graph). Throws
  // ConversionIncompleteError if any site is missing or non-positive.
  std::vector<double> aligned(const NetworkGraph& graph) const;

  friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

ThresholdSet unity_thresholds(const NetworkGraph& graph);

// Text sidecar: optional '#' comment lines, a "method <name>" line, then one
// "<layer-id> <value>" line per site with values printed round-trip exact.
void save_thresholds(const ThresholdSet& set, const std::filesystem::path& path,
                     const std::vector<std::string>& comments = {});
ThresholdSet load_thresholds(const std::filesystem::path& path);
std::string format_thresholds(const ThresholdSet& set, const std::vector<std::string>& comments = {});

}  // namespace snnconv
