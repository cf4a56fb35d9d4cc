#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snnconv/netgraph.hpp"
#include "snnconv/snn.hpp"
#include "snnconv/tensor.hpp"
#include "snnconv/thresholds.hpp"

namespace snnconv {

struct LayerOps {
  std::string layer;
  std::uint64_t macs = 0;
};

// Per conv/linear layer in graph order. conv: out_H*out_W*out_C*in_C*k^2
// (taps over padding included); linear: out*in. Pooling costs nothing here.
std::vector<LayerOps> synaptic_op_counts(const NetworkGraph& graph);

// For each conv/linear layer, the spiking source that drives it (site index,
// or kNetworkInput for the encoder) and how many accumulates one spike of
// each source neuron triggers in that layer, pooling windows included.
struct SynapticFanout {
  std::string layer;
  std::size_t source = kNetworkInput;
  std::vector<std::uint64_t> per_neuron;
};
std::vector<SynapticFanout> synaptic_fanout(const NetworkGraph& graph);

struct CensusRow {
  std::string layer;
  std::uint64_t macs = 0;
  double acs = 0.0;  // per inference, averaged over runs
};

struct OpCensus {
  std::vector<CensusRow> rows;
  std::size_t runs = 0;
  std::size_t timesteps = 0;
  std::uint64_t total_macs = 0;
  double total_acs = 0.0;            // per inference
  std::uint64_t total_ac_events = 0;  // summed over all runs, exact
};

// AC per layer is the dot product of cumulative source spike counts and the
// per-neuron fanout. Identity shortcuts carry no synapses and add nothing.
// Throws ArgumentError for an empty batch or profiles without spike counts.
OpCensus build_census(const NetworkGraph& graph, std::span<const RunProfile> profiles);

// Throws DegenerateLayerError when the graph has no MACs.
double ac_mac_ratio(const OpCensus& census);

struct LayerSpikes {
  std::string layer;
  std::size_t neurons = 0;
  double avg_cumulative_spikes = 0.0;  // per neuron, averaged over runs
};

// Throws ArgumentError for an empty batch or profiles of differing T or
// layout.
std::vector<LayerSpikes> spike_count_profile(std::span<const RunProfile> profiles);

struct ConvergencePoint {
  std::size_t t = 0;
  double error = 0.0;
};

// Error of count-based predictions at each grid point, from the output spike
// times of runs that lasted at least max(grid) steps.
std::vector<ConvergencePoint> convergence_from_runs(std::span<const InferenceResult> runs,
                                                    const std::vector<int>& labels, const std::vector<std::size_t>& grid);

// One simulation pass per image up to T_max, snapshotted on `grid` (default:
// every T_max/10 steps plus t = 0).
std::vector<ConvergencePoint> convergence_curve(const NetworkGraph& graph, const ThresholdSet& thresholds,
                                                const Tensor& images, const std::vector<int>& labels,
                                                std::size_t t_max, std::uint64_t seed,
                                                std::vector<std::size_t> grid = {}, int jobs = 0);

// Average-rank Spearman correlation; NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// CSV writers. Each comment becomes a leading "# ..." line.
std::string format_profile_csv(const std::vector<LayerSpikes>& rows, const std::vector<std::string>& comments = {});
std::string format_census_csv(const OpCensus& census, const std::vector<std::string>& comments = {});
std::string format_convergence_csv(const std::vector<ConvergencePoint>& curve,
                                   const std::vector<std::string>& comments = {});
// One row per spiking or synaptic layer in graph order:
// layer,neurons,cumulative_spikes,avg_spikes_per_neuron,ac_events. Synaptic
// layers that do not spike report zero spikes; pure spiking layers report
// zero AC events.
std::string format_run_profile_csv(const NetworkGraph& graph, const RunProfile& profile,
                                   const std::vector<std::string>& comments = {});
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace snnconv
