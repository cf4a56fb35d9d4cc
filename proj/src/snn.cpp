#include "snnconv/snn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "snnconv/errors.hpp"
#include "snnconv/rng.hpp"

namespace snnconv {

SpikeMap if_layer_step(IFLayerState& state, std::span<const double> weighted_input) {
  if (weighted_input.size() != state.v_mem.size()) throw ShapeError("weighted input does not match layer size");
  SpikeMap out{{state.v_mem.size()}, std::vector<std::int8_t>(state.v_mem.size(), 0)};
  for (std::size_t i = 0; i < state.v_mem.size(); ++i) {
    state.v_mem[i] += weighted_input[i];
    if (state.v_mem[i] >= state.v_th) {
      out.values[i] = 1;
      state.v_mem[i] = 0.0;
    }
  }
  return out;
}

std::vector<std::uint32_t> RunProfile::output_counts_at(std::size_t t) const {
  std::vector<std::uint32_t> counts(output_spike_steps.size());
  for (std::size_t c = 0; c < output_spike_steps.size(); ++c) {
    const auto& steps = output_spike_steps[c];
    counts[c] = static_cast<std::uint32_t>(std::upper_bound(steps.begin(), steps.end(), t) - steps.begin());
  }
  return counts;
}

int predict_from_counts(std::span<const std::uint32_t> counts) {
  int best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

SpikingNetwork::SpikingNetwork(const NetworkGraph& graph, const ThresholdSet& thresholds)
    : SpikingNetwork(graph, thresholds.aligned(graph)) {}

SpikingNetwork::SpikingNetwork(const NetworkGraph& graph, std::vector<double> thresholds) : graph_(graph) {
  const Topology topo = analyze_topology(graph_);
  const auto site_layers = spiking_sites(graph_, topo);
  if (thresholds.size() != site_layers.size()) {
    throw ArgumentError("expected " + std::to_string(site_layers.size()) + " thresholds, got " +
                        std::to_string(thresholds.size()));
  }
  input_size_ = shape_numel(graph_.input_shape);
  const std::size_t n = graph_.layers.size();
  nodes_.resize(n);
  signals_.resize(n);

  auto resolve = [&](std::size_t src) {
    while (src != kNetworkInput) {
      const auto k = graph_.layers[src].kind;
      if (k != LayerKind::dropout && k != LayerKind::identity) break;
      src = topo.inputs[src][0];
    }
    return src;
  };

  for (std::size_t k = 0; k < site_layers.size(); ++k) {
    const auto kind = graph_.layers[site_layers[k]].kind;
    if (kind != LayerKind::relu && kind != LayerKind::add_junction && !is_synaptic(kind)) {
      throw StructuralError("output layer '" + graph_.layers[site_layers[k]].id +
                            "' must be a conv, linear, relu or junction to be simulated");
    }
    Site s;
    s.layer = site_layers[k];
    const std::size_t size = shape_numel(topo.output_shapes[s.layer]);
    s.state.v_mem.assign(size, 0.0);
    s.state.v_th = thresholds[k];
    s.counts.assign(size, 0);
    sites_.push_back(std::move(s));
    nodes_[site_layers[k]].site = static_cast<int>(k);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = graph_.layers[i];
    Node& node = nodes_[i];
    node.kind = l.kind;
    node.size = shape_numel(topo.output_shapes[i]);
    node.src0 = resolve(topo.inputs[i][0]);
    if (topo.inputs[i].size() > 1) node.src1 = resolve(topo.inputs[i][1]);
    const bool src_events = node.src0 == kNetworkInput || signals_[node.src0].events;

    switch (l.kind) {
      case LayerKind::conv2d:
      case LayerKind::linear: {
        if (!src_events) {
          throw StructuralError("layer '" + l.id + "' receives analog input; only spikes may drive synapses");
        }
        const Shape& in = topo.input_shape_of(i, graph_);
        const auto& w = graph_.weight(l.id).storage();
        node.out_c = static_cast<std::size_t>(l.channels_out);
        if (l.kind == LayerKind::conv2d) {
          node.in_c = in[0];
          node.in_h = in[1];
          node.in_w = in[2];
          node.out_h = topo.output_shapes[i][1];
          node.out_w = topo.output_shapes[i][2];
          node.k = static_cast<std::size_t>(l.kernel);
          node.stride = static_cast<std::size_t>(l.stride);
          node.pad = static_cast<std::size_t>(l.padding);
          node.wt.resize(w.size());
          const std::size_t kk = node.k * node.k;
          for (std::size_t oc = 0; oc < node.out_c; ++oc)
            for (std::size_t ic = 0; ic < node.in_c; ++ic)
              for (std::size_t t = 0; t < kk; ++t) node.wt[(ic * kk + t) * node.out_c + oc] = w[(oc * node.in_c + ic) * kk + t];
        } else {
          node.in_c = static_cast<std::size_t>(l.channels_in);
          node.wt.resize(w.size());
          for (std::size_t o = 0; o < node.out_c; ++o)
            for (std::size_t x = 0; x < node.in_c; ++x) node.wt[x * node.out_c + o] = w[o * node.in_c + x];
        }
        node.ac_slot = synaptic_ids_.size();
        synaptic_ids_.push_back(l.id);
        signals_[i].events = node.site >= 0;
        signals_[i].cur.assign(node.size, 0.0);
        break;
      }
      case LayerKind::avgpool2d: {
        const Shape& in = topo.input_shape_of(i, graph_);
        node.in_c = in[0];
        node.in_h = in[1];
        node.in_w = in[2];
        node.out_h = topo.output_shapes[i][1];
        node.out_w = topo.output_shapes[i][2];
        node.k = static_cast<std::size_t>(l.kernel);
        node.stride = static_cast<std::size_t>(l.stride);
        signals_[i].events = src_events;
        if (!src_events) signals_[i].cur.assign(node.size, 0.0);
        break;
      }
      case LayerKind::relu:
        signals_[i].events = true;
        signals_[i].cur.assign(node.size, 0.0);
        break;
      case LayerKind::add_junction:
        signals_[i].events = node.site >= 0;
        signals_[i].cur.assign(node.size, 0.0);
        break;
      case LayerKind::dropout:
      case LayerKind::identity:
        break;
      case LayerKind::maxpool2d:
      case LayerKind::batchnorm:
        throw ConstraintError("layer '" + l.id + "' of kind " + std::string(to_string(l.kind)) +
                              " has no spiking equivalent");
    }
  }
  ac_.assign(synaptic_ids_.size(), 0);
  input_counts_.assign(input_size_, 0);
  output_steps_.assign(sites_.back().state.v_mem.size(), {});
}

const std::string& SpikingNetwork::site_id(std::size_t k) const { return graph_.layers[sites_.at(k).layer].id; }

const EventList& SpikingNetwork::site_events(std::size_t k) const { return signals_[sites_.at(k).layer].ev; }

void SpikingNetwork::set_threshold(std::size_t k, double v) { sites_.at(k).state.v_th = v; }

void SpikingNetwork::reset() {
  for (auto& s : sites_) {
    std::fill(s.state.v_mem.begin(), s.state.v_mem.end(), 0.0);
    std::fill(s.counts.begin(), s.counts.end(), 0);
    s.total = 0;
  }
  for (auto& sig : signals_) sig.ev.clear();
  std::fill(ac_.begin(), ac_.end(), 0);
  std::fill(input_counts_.begin(), input_counts_.end(), 0);
  input_events_ = 0;
  for (auto& o : output_steps_) o.clear();
  t_ = 0;
}

void SpikingNetwork::check_thresholds(std::size_t upto) const {
  for (std::size_t k = 0; k < upto; ++k) {
    const double v = sites_[k].state.v_th;
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConversionIncompleteError("spiking layer '" + graph_.layers[sites_[k].layer].id + "' has no threshold");
    }
  }
}

const SpikingNetwork::Signal& SpikingNetwork::signal_of(std::size_t src, const EventList& input) const {
  (void)input;
  return src == kNetworkInput ? input_signal_ : signals_[src];
}

void SpikingNetwork::dense_into(const Signal& s, std::vector<double>& out) const {
  if (!s.events) {
    std::copy(s.cur.begin(), s.cur.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t e = 0; e < s.ev.size(); ++e) out[s.ev.index[e]] += s.ev.value[e];
}

void SpikingNetwork::fire(Site& site, std::span<const double> drive, EventList& out) {
  out.clear();
  auto& v = site.state.v_mem;
  const double th = site.state.v_th;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] += drive[i];
    if (v[i] >= th) {
      v[i] = 0.0;
      out.push(static_cast<std::uint32_t>(i), 1.0);
      ++site.counts[i];
    }
  }
  site.total += out.size();
}

void SpikingNetwork::run_node(std::size_t i, const EventList& input) {
  Node& node = nodes_[i];
  Signal& sig = signals_[i];
  switch (node.kind) {
    case LayerKind::conv2d: {
      const Signal& in = signal_of(node.src0, input);
      std::fill(sig.cur.begin(), sig.cur.end(), 0.0);
      const std::size_t plane = node.out_h * node.out_w, kk = node.k * node.k;
      std::uint64_t ops = 0;
      for (std::size_t e = 0; e < in.ev.size(); ++e) {
        const std::size_t idx = in.ev.index[e];
        const double val = in.ev.value[e];
        const std::size_t c = idx / (node.in_h * node.in_w);
        const std::size_t y = (idx / node.in_w) % node.in_h;
        const std::size_t x = idx % node.in_w;
        for (std::size_t ky = 0; ky < node.k; ++ky) {
          const long ny = static_cast<long>(y + node.pad) - static_cast<long>(ky);
          if (ny < 0 || ny % static_cast<long>(node.stride)) continue;
          const std::size_t oy = static_cast<std::size_t>(ny) / node.stride;
          if (oy >= node.out_h) continue;
          for (std::size_t kx = 0; kx < node.k; ++kx) {
            const long nx = static_cast<long>(x + node.pad) - static_cast<long>(kx);
            if (nx < 0 || nx % static_cast<long>(node.stride)) continue;
            const std::size_t ox = static_cast<std::size_t>(nx) / node.stride;
            if (ox >= node.out_w) continue;
            const float* w = node.wt.data() + (c * kk + ky * node.k + kx) * node.out_c;
            double* dst = sig.cur.data() + oy * node.out_w + ox;
            for (std::size_t oc = 0; oc < node.out_c; ++oc) dst[oc * plane] += val * w[oc];
            ops += node.out_c;
          }
        }
      }
      ac_[node.ac_slot] += ops;
      if (node.site >= 0) fire(sites_[static_cast<std::size_t>(node.site)], sig.cur, sig.ev);
      break;
    }
    case LayerKind::linear: {
      const Signal& in = signal_of(node.src0, input);
      std::fill(sig.cur.begin(), sig.cur.end(), 0.0);
      for (std::size_t e = 0; e < in.ev.size(); ++e) {
        const float* w = node.wt.data() + in.ev.index[e] * node.out_c;
        const double val = in.ev.value[e];
        for (std::size_t o = 0; o < node.out_c; ++o) sig.cur[o] += val * w[o];
      }
      ac_[node.ac_slot] += in.ev.size() * node.out_c;
      if (node.site >= 0) fire(sites_[static_cast<std::size_t>(node.site)], sig.cur, sig.ev);
      break;
    }
    case LayerKind::avgpool2d: {
      const Signal& in = signal_of(node.src0, input);
      const double inv = 1.0 / static_cast<double>(node.k * node.k);
      if (sig.events) {
        sig.ev.clear();
        for (std::size_t e = 0; e < in.ev.size(); ++e) {
          const std::size_t idx = in.ev.index[e];
          const std::size_t c = idx / (node.in_h * node.in_w);
          const std::size_t y = (idx / node.in_w) % node.in_h;
          const std::size_t x = idx % node.in_w;
          const std::size_t y_lo = y + 1 >= node.k ? (y + 1 - node.k + node.stride - 1) / node.stride : 0;
          const std::size_t x_lo = x + 1 >= node.k ? (x + 1 - node.k + node.stride - 1) / node.stride : 0;
          const std::size_t y_hi = std::min(node.out_h, y / node.stride + 1);
          const std::size_t x_hi = std::min(node.out_w, x / node.stride + 1);
          for (std::size_t oy = y_lo; oy < y_hi; ++oy)
            for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
              sig.ev.push(static_cast<std::uint32_t>((c * node.out_h + oy) * node.out_w + ox), in.ev.value[e] * inv);
            }
        }
      } else {
        for (std::size_t c = 0; c < node.in_c; ++c)
          for (std::size_t oy = 0; oy < node.out_h; ++oy)
            for (std::size_t ox = 0; ox < node.out_w; ++ox) {
              double acc = 0.0;
              for (std::size_t ky = 0; ky < node.k; ++ky)
                for (std::size_t kx = 0; kx < node.k; ++kx)
                  acc += in.cur[(c * node.in_h + oy * node.stride + ky) * node.in_w + ox * node.stride + kx];
              sig.cur[(c * node.out_h + oy) * node.out_w + ox] = acc * inv;
            }
      }
      break;
    }
    case LayerKind::relu: {
      const Signal& in = signal_of(node.src0, input);
      const std::vector<double>* drive = &in.cur;
      if (in.events) {
        dense_into(in, sig.cur);
        drive = &sig.cur;
      }
      fire(sites_[static_cast<std::size_t>(node.site)], *drive, sig.ev);
      break;
    }
    case LayerKind::add_junction: {
      scratch_.resize(node.size);
      dense_into(signal_of(node.src0, input), sig.cur);
      dense_into(signal_of(node.src1, input), scratch_);
      for (std::size_t k = 0; k < node.size; ++k) sig.cur[k] += scratch_[k];
      if (node.site >= 0) fire(sites_[static_cast<std::size_t>(node.site)], sig.cur, sig.ev);
      break;
    }
    default:
      break;
  }
}

const EventList& SpikingNetwork::step(const EventList& input) {
  check_thresholds(sites_.size());
  input_signal_.events = true;
  input_signal_.ev = input;
  ++t_;
  for (std::size_t e = 0; e < input.size(); ++e) ++input_counts_.at(input.index[e]);
  input_events_ += input.size();
  for (std::size_t i = 0; i < nodes_.size(); ++i) run_node(i, input);
  const EventList& out = signals_[sites_.back().layer].ev;
  for (std::size_t e = 0; e < out.size(); ++e) output_steps_[out.index[e]].push_back(t_);
  return out;
}

std::span<const double> SpikingNetwork::probe(const EventList& input, std::size_t k) {
  if (k >= sites_.size()) throw ArgumentError("probe site out of range");
  check_thresholds(k);
  input_signal_.events = true;
  input_signal_.ev = input;
  const std::size_t layer = sites_[k].layer;
  for (std::size_t i = 0; i < layer; ++i) run_node(i, input);

  Node& node = nodes_[layer];
  Signal& sig = signals_[layer];
  switch (node.kind) {
    case LayerKind::relu: {
      const Signal& in = signal_of(node.src0, input);
      if (!in.events) return in.cur;
      dense_into(in, sig.cur);
      return sig.cur;
    }
    default: {
      // Junction or output layer: compute its drive, skip integration.
      const int saved = node.site;
      node.site = -1;
      run_node(layer, input);
      node.site = saved;
      return sig.cur;
    }
  }
}

RunProfile SpikingNetwork::profile() const {
  RunProfile p;
  p.timesteps = t_;
  p.input_events = input_events_;
  p.input_event_counts = input_counts_;
  for (const auto& s : sites_) {
    p.sites.push_back({graph_.layers[s.layer].id, s.counts.size(), s.total, s.counts});
  }
  p.synaptic_layers = synaptic_ids_;
  p.ac_events = ac_;
  p.output_spike_steps = output_steps_;
  return p;
}

std::span<const std::uint32_t> SpikingNetwork::output_counts() const { return sites_.back().counts; }

SpikeMap snn_forward_step(SpikingNetwork& net, const SpikeMap& input_spikes) {
  if (input_spikes.values.size() != net.input_size()) throw ShapeError("input spike map does not match network input");
  const auto& out = net.step(to_events(input_spikes));
  const auto& g = net.graph();
  const Topology topo = analyze_topology(g);
  return to_spike_map(out, topo.output_shapes[topo.output]);
}

namespace {

InferenceResult simulate(SpikingNetwork& net, std::span<const float> image, double scale, std::uint64_t seed,
                         const SimConfig& config) {
  net.reset();
  EncoderState encoder(scale, seed);
  EventList input;
  for (std::size_t t = 0; t < config.timesteps; ++t) {
    poisson_events(image, encoder, input);
    net.step(input);
  }
  InferenceResult r;
  r.output_counts.assign(net.output_counts().begin(), net.output_counts().end());
  r.predicted = predict_from_counts(r.output_counts);
  r.profile = net.profile();
  if (!config.record_profile) {
    RunProfile slim;
    slim.timesteps = r.profile.timesteps;
    slim.output_spike_steps = std::move(r.profile.output_spike_steps);
    r.profile = std::move(slim);
  }
  return r;
}

}  // namespace

InferenceResult run_inference(const NetworkGraph& graph, const ThresholdSet& thresholds, const Tensor& image,
                              const SimConfig& config) {
  if (config.timesteps == 0) throw ArgumentError("timesteps must be at least 1");
  if (image.size() != shape_numel(graph.input_shape)) throw ShapeError("image does not match network input");
  SpikingNetwork net(graph, thresholds);
  return simulate(net, image.data(), graph.preprocessing.scale, config.seed, config);
}

std::vector<InferenceResult> simulate_batch(const NetworkGraph& graph, const ThresholdSet& thresholds,
                                            const Tensor& images, const SimConfig& config, int jobs) {
  if (config.timesteps == 0) throw ArgumentError("timesteps must be at least 1");
  const std::size_t per = shape_numel(graph.input_shape);
  if (images.rank() != graph.input_shape.size() + 1 || images.size() != images.dim(0) * per) {
    throw ShapeError("image batch " + shape_to_string(images.shape()) + " does not match network input");
  }
  const std::size_t n = images.dim(0);
  const SpikingNetwork proto(graph, thresholds);
  EncoderState check(graph.preprocessing.scale, 0);  // validates the scale up front
  (void)check;
  std::vector<InferenceResult> results(n);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
  {
    SpikingNetwork net = proto;
#pragma omp for schedule(dynamic, 1)
    for (std::size_t i = 0; i < n; ++i) {
      results[i] = simulate(net, images.data().subspan(i * per, per), graph.preprocessing.scale,
                            derive_seed(config.seed, i), config);
    }
  }
  return results;
}

}  // namespace snnconv
