#include "snnconv/thresholds.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "snnconv/errors.hpp"

namespace snnconv {

std::string_view to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::ann_based: return "ann-based";
    case ThresholdMethod::spike_norm: return "spike-norm";
    case ThresholdMethod::unity: return "unity";
  }
  return "unknown";
}

std::optional<ThresholdMethod> parse_threshold_method(std::string_view s) {
  if (s == "ann-based" || s == "ann" || s == "ann_based") return ThresholdMethod::ann_based;
  if (s == "spike-norm" || s == "spike_norm") return ThresholdMethod::spike_norm;
  if (s == "unity") return ThresholdMethod::unity;
  return std::nullopt;
}

std::optional<double> ThresholdSet::find(const std::string& layer) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i] == layer) return values.at(i);
  return std::nullopt;
}

std::vector<double> ThresholdSet::aligned(const NetworkGraph& graph) const {
  if (layers.size() != values.size()) throw ArgumentError("threshold set has mismatched layer and value counts");
  const auto sites = spiking_sites(graph, analyze_topology(graph));
  std::vector<double> out;
  out.reserve(sites.size());
  for (std::size_t s : sites) {
    const auto& id = graph.layers[s].id;
    const auto v = find(id);
    if (!v) throw ConversionIncompleteError("no threshold for spiking layer '" + id + "'");
    if (!(*v > 0.0) || !std::isfinite(*v))
      throw ConversionIncompleteError("threshold for spiking layer '" + id + "' is not positive");
    out.push_back(*v);
  }
  return out;
}

ThresholdSet unity_thresholds(const NetworkGraph& graph) {
  ThresholdSet set;
  set.method = ThresholdMethod::unity;
  for (std::size_t s : spiking_sites(graph, analyze_topology(graph))) {
    set.layers.push_back(graph.layers[s].id);
    set.values.push_back(1.0);
  }
  return set;
}

std::string format_thresholds(const ThresholdSet& set, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "method " << to_string(set.method) << '\n';
  char buf[64];
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", set.values[i]);
    out << set.layers.at(i) << ' ' << buf << '\n';
  }
  return out.str();
}

void save_thresholds(const ThresholdSet& set, const std::filesystem::path& path,
                     const std::vector<std::string>& comments) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << format_thresholds(set, comments);
  if (!f) throw IoError("write failed: " + path.string());
}

ThresholdSet load_thresholds(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  ThresholdSet set;
  bool have_method = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key >> value) || (ls >> extra))
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected two fields");
    if (!have_method) {
      const auto m = parse_threshold_method(value);
      if (key != "method" || !m) throw ParseError(path.string() + ": missing method line");
      set.method = *m;
      have_method = true;
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad value '" + value + "'");
    set.layers.push_back(key);
    set.values.push_back(v);
  }
  if (!have_method) throw ParseError(path.string() + ": missing method line");
  return set;
}

}  // namespace snnconv
