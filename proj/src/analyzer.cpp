#include "snnconv/analyzer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "snnconv/errors.hpp"

namespace snnconv {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void put_comments(std::ostringstream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

}  // namespace

std::vector<LayerOps> synaptic_op_counts(const NetworkGraph& graph) {
  const Topology topo = analyze_topology(graph);
  std::vector<LayerOps> out;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& l = graph.layers[i];
    if (l.kind == LayerKind::conv2d) {
      const Shape& o = topo.output_shapes[i];
      const auto k = static_cast<std::uint64_t>(l.kernel);
      out.push_back({l.id, o[1] * o[2] * o[0] * static_cast<std::uint64_t>(l.channels_in) * k * k});
    } else if (l.kind == LayerKind::linear) {
      out.push_back({l.id, static_cast<std::uint64_t>(l.channels_out) * static_cast<std::uint64_t>(l.channels_in)});
    }
  }
  return out;
}

std::vector<SynapticFanout> synaptic_fanout(const NetworkGraph& graph) {
  const Topology topo = analyze_topology(graph);
  const auto sites = spiking_sites(graph, topo);
  std::vector<int> site_of(graph.layers.size(), -1);
  for (std::size_t k = 0; k < sites.size(); ++k) site_of[sites[k]] = static_cast<int>(k);

  std::vector<SynapticFanout> out;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& l = graph.layers[i];
    if (!is_synaptic(l.kind)) continue;
    const Shape& in = topo.input_shape_of(i, graph);
    std::vector<std::uint64_t> f(shape_numel(in), 0);
    if (l.kind == LayerKind::linear) {
      std::fill(f.begin(), f.end(), static_cast<std::uint64_t>(l.channels_out));
    } else {
      const Shape& o = topo.output_shapes[i];
      const long h = static_cast<long>(in[1]), w = static_cast<long>(in[2]);
      const long k = l.kernel, s = l.stride, p = l.padding;
      std::vector<std::uint64_t> plane(static_cast<std::size_t>(h * w), 0);
      for (long oy = 0; oy < static_cast<long>(o[1]); ++oy)
        for (long ox = 0; ox < static_cast<long>(o[2]); ++ox)
          for (long ky = 0; ky < k; ++ky)
            for (long kx = 0; kx < k; ++kx) {
              const long iy = oy * s + ky - p, ix = ox * s + kx - p;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w) plane[static_cast<std::size_t>(iy * w + ix)] += o[0];
            }
      for (std::size_t c = 0; c < in[0]; ++c) std::copy(plane.begin(), plane.end(), f.begin() + c * plane.size());
    }

    std::size_t cur = topo.inputs[i][0];
    while (cur != kNetworkInput && site_of[cur] < 0) {
      const auto& cl = graph.layers[cur];
      if (cl.kind == LayerKind::avgpool2d) {
        const Shape& pin = topo.input_shape_of(cur, graph);
        const Shape& po = topo.output_shapes[cur];
        std::vector<std::uint64_t> g(shape_numel(pin), 0);
        const std::size_t k = static_cast<std::size_t>(cl.kernel), s = static_cast<std::size_t>(cl.stride);
        for (std::size_t c = 0; c < po[0]; ++c)
          for (std::size_t oy = 0; oy < po[1]; ++oy)
            for (std::size_t ox = 0; ox < po[2]; ++ox)
              for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx)
                  g[(c * pin[1] + oy * s + ky) * pin[2] + ox * s + kx] += f[(c * po[1] + oy) * po[2] + ox];
        f = std::move(g);
      } else if (cl.kind != LayerKind::dropout && cl.kind != LayerKind::identity) {
        throw StructuralError("layer '" + l.id + "' is not driven by spikes");
      }
      cur = topo.inputs[cur][0];
    }
    out.push_back({l.id, cur == kNetworkInput ? kNetworkInput : static_cast<std::size_t>(site_of[cur]), std::move(f)});
  }
  return out;
}

OpCensus build_census(const NetworkGraph& graph, std::span<const RunProfile> profiles) {
  if (profiles.empty()) throw ArgumentError("census needs at least one run profile");
  const auto macs = synaptic_op_counts(graph);
  const auto fan = synaptic_fanout(graph);
  OpCensus census;
  census.runs = profiles.size();
  census.timesteps = profiles.front().timesteps;
  std::vector<std::uint64_t> sums(fan.size(), 0);
  for (const auto& p : profiles) {
    for (std::size_t j = 0; j < fan.size(); ++j) {
      const std::vector<std::uint32_t>* counts = nullptr;
      if (fan[j].source == kNetworkInput) {
        counts = &p.input_event_counts;
      } else if (fan[j].source < p.sites.size()) {
        counts = &p.sites[fan[j].source].spike_counts;
      }
      if (!counts || counts->size() != fan[j].per_neuron.size()) {
        throw ArgumentError("run profile lacks per-neuron spike counts for the source of '" + fan[j].layer + "'");
      }
      std::uint64_t acc = 0;
      for (std::size_t n = 0; n < counts->size(); ++n) acc += (*counts)[n] * fan[j].per_neuron[n];
      sums[j] += acc;
    }
  }
  for (std::size_t j = 0; j < fan.size(); ++j) {
    const double acs = static_cast<double>(sums[j]) / static_cast<double>(census.runs);
    census.rows.push_back({macs[j].layer, macs[j].macs, acs});
    census.total_macs += macs[j].macs;
    census.total_ac_events += sums[j];
  }
  census.total_acs = static_cast<double>(census.total_ac_events) / static_cast<double>(census.runs);
  return census;
}

double ac_mac_ratio(const OpCensus& census) {
  if (census.total_macs == 0) throw DegenerateLayerError("", "network has no synaptic operations");
  return census.total_acs / static_cast<double>(census.total_macs);
}

std::vector<LayerSpikes> spike_count_profile(std::span<const RunProfile> profiles) {
  if (profiles.empty()) throw ArgumentError("spike profile needs at least one run");
  const auto& first = profiles.front();
  std::vector<LayerSpikes> rows;
  for (const auto& s : first.sites) rows.push_back({s.layer, s.neurons, 0.0});
  for (const auto& p : profiles) {
    if (p.timesteps != first.timesteps) throw ArgumentError("profiles were recorded with different timestep counts");
    if (p.sites.size() != rows.size()) throw ArgumentError("profiles come from different networks");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (p.sites[k].layer != rows[k].layer || p.sites[k].neurons != rows[k].neurons) {
        throw ArgumentError("profiles come from different networks");
      }
      rows[k].avg_cumulative_spikes += p.sites[k].avg_per_neuron();
    }
  }
  for (auto& r : rows) r.avg_cumulative_spikes /= static_cast<double>(profiles.size());
  return rows;
}

std::vector<ConvergencePoint> convergence_from_runs(std::span<const InferenceResult> runs,
                                                    const std::vector<int>& labels,
                                                    const std::vector<std::size_t>& grid) {
  if (runs.size() != labels.size() || runs.empty()) throw ArgumentError("need one label per run");
  std::vector<ConvergencePoint> curve;
  for (std::size_t t : grid) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].profile.timesteps < t) throw ArgumentError("run shorter than snapshot t=" + std::to_string(t));
      const auto counts = runs[i].profile.output_counts_at(t);
      if (predict_from_counts(counts) != labels[i]) ++wrong;
    }
    curve.push_back({t, static_cast<double>(wrong) / static_cast<double>(runs.size())});
  }
  return curve;
}

std::vector<ConvergencePoint> convergence_curve(const NetworkGraph& graph, const ThresholdSet& thresholds,
                                                const Tensor& images, const std::vector<int>& labels,
                                                std::size_t t_max, std::uint64_t seed, std::vector<std::size_t> grid,
                                                int jobs) {
  if (grid.empty()) {
    for (std::size_t j = 0; j <= 10; ++j) grid.push_back(t_max * j / 10);
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  const std::size_t longest = *std::max_element(grid.begin(), grid.end());
  SimConfig config;
  config.timesteps = std::max<std::size_t>(longest, 1);
  config.seed = seed;
  const auto runs = simulate_batch(graph, thresholds, images, config, jobs);
  return convergence_from_runs(runs, labels, grid);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("spearman needs two equal series of length >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::string format_profile_csv(const std::vector<LayerSpikes>& rows, const std::vector<std::string>& comments) {
  std::ostringstream out;
  put_comments(out, comments);
  out << "layer,neurons,avg_cumulative_spikes\n";
  for (const auto& r : rows) out << r.layer << ',' << r.neurons << ',' << num(r.avg_cumulative_spikes) << '\n';
  return out.str();
}

std::string format_census_csv(const OpCensus& census, const std::vector<std::string>& comments) {
  std::ostringstream out;
  put_comments(out, comments);
  out << "layer,macs,acs\n";
  for (const auto& r : census.rows) out << r.layer << ',' << r.macs << ',' << num(r.acs) << '\n';
  return out.str();
}

std::string format_convergence_csv(const std::vector<ConvergencePoint>& curve,
                                   const std::vector<std::string>& comments) {
  std::ostringstream out;
  put_comments(out, comments);
  out << "t,error\n";
  for (const auto& p : curve) out << p.t << ',' << num(p.error) << '\n';
  return out.str();
}

std::string format_run_profile_csv(const NetworkGraph& graph, const RunProfile& profile,
                                   const std::vector<std::string>& comments) {
  std::ostringstream out;
  put_comments(out, comments);
  out << "layer,neurons,cumulative_spikes,avg_spikes_per_neuron,ac_events\n";
  const Topology topo = analyze_topology(graph);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& l = graph.layers[i];
    const SiteProfile* site = nullptr;
    for (const auto& s : profile.sites)
      if (s.layer == l.id) site = &s;
    std::optional<std::uint64_t> ac;
    for (std::size_t j = 0; j < profile.synaptic_layers.size(); ++j)
      if (profile.synaptic_layers[j] == l.id) ac = profile.ac_events.at(j);
    if (!site && !ac) continue;
    out << l.id << ',' << (site ? site->neurons : shape_numel(topo.output_shapes[i])) << ',' << (site ? site->total_spikes : 0) << ','
        << num(site ? site->avg_per_neuron() : 0.0) << ',' << ac.value_or(0) << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace snnconv
