#include "snnconv/resnet.hpp"

#include <algorithm>
#include <set>

#include "snnconv/errors.hpp"

namespace snnconv {

namespace {

std::set<std::size_t> ancestors(const Topology& topo, std::size_t node) {
  std::set<std::size_t> seen;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    if (cur == kNetworkInput || !seen.insert(cur).second) continue;
    for (std::size_t p : topo.inputs[cur]) stack.push_back(p);
  }
  return seen;
}

void rewire_consumers(NetworkGraph& g, const std::string& from, const std::string& to, const std::string& except) {
  for (auto& l : g.layers) {
    if (l.id == except) continue;
    for (auto& in : l.inputs) {
      if (in == from) in = to;
    }
  }
}

}  // namespace

ResidualStructure analyze_residual(const NetworkGraph& g, const Topology& topo) {
  ResidualStructure rs;
  for (std::size_t j = 0; j < g.layers.size(); ++j) {
    if (g.layers[j].kind != LayerKind::add_junction) continue;
    const std::size_t a = topo.inputs[j][0], b = topo.inputs[j][1];
    const auto anc_a = ancestors(topo, a), anc_b = ancestors(topo, b);
    std::vector<std::size_t> common;
    std::set_intersection(anc_a.begin(), anc_a.end(), anc_b.begin(), anc_b.end(), std::back_inserter(common));
    if (common.empty()) throw StructuralError("junction '" + g.layers[j].id + "' has no common fork");
    const std::size_t fork = common.back();

    auto branch_of = [&](const std::set<std::size_t>& anc) {
      std::vector<std::size_t> out;
      for (std::size_t x : anc) {
        if (x > fork) out.push_back(x);
      }
      return out;
    };
    auto has_weights = [&](const std::vector<std::size_t>& nodes) {
      return std::any_of(nodes.begin(), nodes.end(), [&](std::size_t x) { return is_synaptic(g.layers[x].kind); });
    };
    const auto br_a = branch_of(anc_a), br_b = branch_of(anc_b);
    const bool wa = has_weights(br_a), wb = has_weights(br_b);
    if (wa == wb) {
      throw StructuralError("junction '" + g.layers[j].id + "' must join one identity path and one weighted path");
    }

    ResidualBlock block;
    block.junction = j;
    block.fork = fork;
    block.identity_slot = wa ? 1 : 0;
    block.branch = wa ? br_a : br_b;
    for (std::size_t c : topo.consumers[j]) {
      if (g.layers[c].kind == LayerKind::relu) block.junction_relu = c;
    }
    rs.blocks.push_back(std::move(block));
  }

  rs.sites = spiking_sites(g, topo);
  std::vector<bool> residual_unit(g.layers.size(), false);
  for (const auto& b : rs.blocks) {
    for (std::size_t x : b.branch) residual_unit[x] = true;
    residual_unit[b.junction] = true;
    if (b.junction_relu) residual_unit[*b.junction_relu] = true;
  }
  const std::size_t first_fork = rs.blocks.empty() ? g.layers.size() : rs.blocks.front().fork;
  for (std::size_t s : rs.sites) {
    if (residual_unit[s]) {
      rs.roles.push_back(SiteRole::residual);
    } else if (!rs.blocks.empty() && s <= first_fork) {
      rs.roles.push_back(SiteRole::stem);
    } else if (rs.blocks.empty()) {
      rs.roles.push_back(SiteRole::stem);
    } else {
      rs.roles.push_back(SiteRole::head);
    }
  }
  return rs;
}

std::vector<bool> residual_path_mask(const NetworkGraph& g, const Topology& topo) {
  std::vector<bool> mask(g.layers.size(), false);
  for (const auto& b : analyze_residual(g, topo).blocks) {
    for (std::size_t x : b.branch) {
      if (is_synaptic(g.layers[x].kind)) mask[x] = true;
    }
  }
  return mask;
}

NetworkGraph insert_junction_relus(NetworkGraph graph) {
  const Topology topo = analyze_topology(graph);
  std::vector<LayerSpec> out;
  std::vector<std::pair<std::string, std::string>> added;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    out.push_back(graph.layers[i]);
    const auto& l = graph.layers[i];
    if (l.kind != LayerKind::add_junction) continue;
    const auto& cons = topo.consumers[i];
    const bool has_relu = std::any_of(cons.begin(), cons.end(), [&](std::size_t c) {
      return graph.layers[c].kind == LayerKind::relu;
    });
    if (has_relu) continue;
    LayerSpec relu;
    relu.id = l.id + "_relu";
    relu.kind = LayerKind::relu;
    relu.inputs = {l.id};
    out.push_back(relu);
    added.emplace_back(l.id, relu.id);
  }
  graph.layers = std::move(out);
  for (const auto& [junction, relu] : added) rewire_consumers(graph, junction, relu, relu);
  analyze_topology(graph);
  return graph;
}

ThresholdSet apply_residual_threshold_policy(const NetworkGraph& graph, const ThresholdSet& stem_thresholds,
                                             double unit_threshold) {
  if (!(unit_threshold > 0.0)) throw ArgumentError("unit threshold must be positive");
  const Topology topo = analyze_topology(graph);
  const auto rs = analyze_residual(graph, topo);
  ThresholdSet out;
  out.method = stem_thresholds.method;
  for (std::size_t k = 0; k < rs.sites.size(); ++k) {
    const auto& id = graph.layers[rs.sites[k]].id;
    out.layers.push_back(id);
    if (rs.roles[k] == SiteRole::stem) {
      const auto v = stem_thresholds.find(id);
      if (!v) throw ConversionIncompleteError("stem layer '" + id + "' has no balanced threshold");
      out.values.push_back(*v);
    } else {
      out.values.push_back(unit_threshold);
    }
  }
  return out;
}

StemReplacement replace_stem(const NetworkGraph& graph) {
  const Topology topo = analyze_topology(graph);
  StemReplacement result{graph, false, {}};
  const auto& first = graph.layers.front();
  if (first.kind != LayerKind::conv2d) {
    result.notice = "first layer is not a convolution; stem left unchanged";
    return result;
  }
  if (first.kernel <= 3) {
    result.notice = "stem already uses 3x3 convolutions; unchanged";
    return result;
  }

  const int cin = first.channels_in, cout = first.channels_out;
  auto make_conv = [&](std::string id, int in_ch, int stride, std::vector<std::string> inputs) {
    LayerSpec c;
    c.id = std::move(id);
    c.kind = LayerKind::conv2d;
    c.kernel = 3;
    c.stride = stride;
    c.padding = 1;
    c.channels_in = in_ch;
    c.channels_out = cout;
    c.inputs = std::move(inputs);
    c.needs_training = true;
    return c;
  };
  auto make_relu = [](std::string id, std::string input) {
    LayerSpec r;
    r.id = std::move(id);
    r.kind = LayerKind::relu;
    r.inputs = {std::move(input)};
    return r;
  };

  NetworkGraph g = graph;
  const std::string a = first.id + "_a", b = first.id + "_b";
  std::vector<LayerSpec> stem{make_conv(a, cin, first.stride, {}), make_relu(a + "_relu", a),
                              make_conv(b, cout, 1, {a + "_relu"}), make_relu(b + "_relu", b),
                              make_conv(first.id, cout, 1, {b + "_relu"})};
  g.layers.erase(g.layers.begin());
  g.layers.insert(g.layers.begin(), stem.begin(), stem.end());
  for (const auto& c : {a, b, first.id}) {
    const auto& l = g.layer(c);
    g.weights[c] = Tensor({static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in), 3, 3});
  }

  bool same_shape = false;
  try {
    const Topology new_topo = analyze_topology(g);
    same_shape = new_topo.output_shapes[g.index_of(first.id)] == topo.output_shapes[0];
  } catch (const StructuralError&) {
    same_shape = false;
  }
  if (!same_shape) {
    result.notice = "three-3x3 stem cannot reproduce output shape " + shape_to_string(topo.output_shapes[0]) +
                    "; stem left unchanged";
    return result;
  }
  result.graph = std::move(g);
  result.replaced = true;
  result.notice = "replaced " + std::to_string(first.kernel) + "x" + std::to_string(first.kernel) +
                  " stem with three 3x3 convolutions; retraining required";
  return result;
}

}  // namespace snnconv
