#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnconv/encoder.hpp"
#include "snnconv/netgraph.hpp"
#include "snnconv/tensor.hpp"
#include "snnconv/thresholds.hpp"

namespace snnconv {

// Membrane state of one integrate-and-fire population (no leak, no
// refractory period, reset to zero).
struct IFLayerState {
  std::vector<double> v_mem;
  double v_th = 1.0;
};

// v_mem += weighted_input; neurons with v_mem >= v_th emit +1 and reset to 0.
SpikeMap if_layer_step(IFLayerState& state, std::span<const double> weighted_input);

struct SimConfig {
  std::size_t timesteps = 2500;
  std::uint64_t seed = 0;
  bool record_profile = false;
};

struct SiteProfile {
  std::string layer;
  std::size_t neurons = 0;
  std::uint64_t total_spikes = 0;
  std::vector<std::uint32_t> spike_counts;  // per neuron, cumulative

  double avg_per_neuron() const {
    return neurons ? static_cast<double>(total_spikes) / static_cast<double>(neurons) : 0.0;
  }
  friend bool operator==(const SiteProfile&, const SiteProfile&) = default;
};

struct RunProfile {
  std::size_t timesteps = 0;
  std::uint64_t input_events = 0;
  std::vector<std::uint32_t> input_event_counts;  // per input pixel
  std::vector<SiteProfile> sites;
  // Accumulate operations performed by each conv/linear layer, counted by
  // the engine as it scatters events.
  std::vector<std::string> synaptic_layers;
  std::vector<std::uint64_t> ac_events;
  // Per output class, the 1-based timesteps at which it spiked.
  std::vector<std::vector<std::uint32_t>> output_spike_steps;

  std::vector<std::uint32_t> output_counts_at(std::size_t t) const;
  friend bool operator==(const RunProfile&, const RunProfile&) = default;
};

// Lowest index wins ties.
int predict_from_counts(std::span<const std::uint32_t> counts);

// Compiled spiking network plus all mutable simulation state for one run.
// Spikes traverse the whole depth within a timestep. Average pooling is
// folded into event values (1/k^2 per spike); dropout and identity layers
// pass events through.
class SpikingNetwork {
 public:
  // `thresholds` aligned with spiking_sites(); NaN marks an unset site.
  SpikingNetwork(const NetworkGraph& graph, std::vector<double> thresholds);
  SpikingNetwork(const NetworkGraph& graph, const ThresholdSet& thresholds);

  void reset();

  // Throws ConversionIncompleteError if any site lacks a threshold.
  const EventList& step(const EventList& input);

  // Runs sites [0, k) for one timestep and returns site k's weighted input
  // without integrating it. Sites before k must have thresholds.
  std::span<const double> probe(const EventList& input, std::size_t k);

  std::size_t num_sites() const noexcept { return sites_.size(); }
  std::size_t site_layer(std::size_t k) const { return sites_[k].layer; }
  const std::string& site_id(std::size_t k) const;
  IFLayerState& state(std::size_t k) { return sites_[k].state; }
  const IFLayerState& state(std::size_t k) const { return sites_[k].state; }
  const EventList& site_events(std::size_t k) const;
  void set_threshold(std::size_t k, double v);
  std::size_t output_site() const noexcept { return sites_.size() - 1; }
  std::size_t input_size() const noexcept { return input_size_; }
  const NetworkGraph& graph() const noexcept { return graph_; }

  RunProfile profile() const;
  std::span<const std::uint32_t> output_counts() const;

 private:
  struct Signal {
    bool events = true;
    EventList ev;
    std::vector<double> cur;
  };
  struct Node {
    LayerKind kind;
    std::size_t size = 0;
    std::size_t src0 = kNetworkInput, src1 = kNetworkInput;  // alias-resolved
    int site = -1;
    // conv/linear
    std::vector<float> wt;  // [in][k][k][out] for conv, [in][out] for linear
    std::size_t in_c = 0, in_h = 0, in_w = 0, out_c = 0, out_h = 0, out_w = 0, k = 1, stride = 1, pad = 0;
    std::size_t ac_slot = 0;
  };
  struct Site {
    std::size_t layer = 0;
    IFLayerState state;
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;
  };

  const Signal& signal_of(std::size_t src, const EventList& input) const;
  void dense_into(const Signal& s, std::vector<double>& out) const;
  void run_node(std::size_t i, const EventList& input);
  void fire(Site& site, std::span<const double> drive, EventList& out);
  void check_thresholds(std::size_t upto) const;

  NetworkGraph graph_;
  std::vector<Node> nodes_;
  std::vector<Signal> signals_;
  std::vector<Site> sites_;
  std::vector<std::string> synaptic_ids_;
  std::vector<std::uint64_t> ac_;
  std::vector<std::uint32_t> input_counts_;
  std::uint64_t input_events_ = 0;
  std::vector<std::vector<std::uint32_t>> output_steps_;
  std::uint32_t t_ = 0;
  std::size_t input_size_ = 0;
  Signal input_signal_;
  std::vector<double> scratch_;
};

// Free-function form over dense spike maps.
SpikeMap snn_forward_step(SpikingNetwork& net, const SpikeMap& input_spikes);

struct InferenceResult {
  int predicted = 0;
  std::vector<std::uint32_t> output_counts;
  RunProfile profile;  // output_spike_steps always filled; the rest when record_profile
};

// Simulates one preprocessed image from zeroed membranes for T steps.
// Throws ArgumentError for T == 0.
InferenceResult run_inference(const NetworkGraph& graph, const ThresholdSet& thresholds, const Tensor& image,
                              const SimConfig& config);

// Runs every image of an [N, ...] batch independently; image i uses encoder
// seed derive_seed(config.seed, i). Results are in input order whatever the
// scheduling. jobs <= 0 uses the OpenMP default.
std::vector<InferenceResult> simulate_batch(const NetworkGraph& graph, const ThresholdSet& thresholds,
                                            const Tensor& images, const SimConfig& config, int jobs = 0);

}  // namespace snnconv
