#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <optional>
#include <string_view>
#include <vector>

#include "snnconv/analyzer.hpp"
#include "snnconv/architectures.hpp"
#include "snnconv/dataset.hpp"
#include "snnconv/netgraph.hpp"
#include "snnconv/normalizer.hpp"
#include "snnconv/snn.hpp"
#include "snnconv/thresholds.hpp"
#include "snnconv/trainer.hpp"

namespace snnconv {

struct PreparedData {
  InputPreprocessing preprocessing;
  Dataset train;  // preprocessed
  Dataset test;   // preprocessed
};
PreparedData prepare_data(const TrainTestSplit& split);

// Fraction of misclassified samples; data must be preprocessed.
double ann_error(const NetworkGraph& graph, const Dataset& data);

struct SnnEvalConfig {
  std::size_t timesteps = 2500;
  std::uint64_t seed = 0;
  std::size_t repeats = 5;
  // Extra snapshot times for the convergence curve; timesteps is always added.
  std::vector<std::size_t> grid;
  bool record_profiles = false;  // keeps per-image profiles of the first repeat
  int jobs = 0;
};

struct RepeatResult {
  std::uint64_t seed = 0;
  double error = 0.0;  // at timesteps
  std::vector<ConvergencePoint> curve;
  std::vector<RunProfile> profiles;
};

// Repeat r uses seed derive_seed(config.seed, r).
std::vector<RepeatResult> evaluate_snn(const NetworkGraph& graph, const ThresholdSet& thresholds, const Dataset& data,
                                       const SnnEvalConfig& config);
double mean_error(const std::vector<RepeatResult>& runs);

// Residual conversion levels, cumulative:
//   basic            spike_norm on every site, no junction relus
//   junction_relu    as basic with a relu after every junction
//   unity_threshold  junction relus; every site at 1 except the head,
//                    which is balanced last
//   full             junction relus; stem balanced, residual units at 1,
//                    head balanced against them
enum class Constraints { basic, junction_relu, unity_threshold, full };
std::string_view to_string(Constraints c);
std::optional<Constraints> parse_constraints(std::string_view s);
bool wants_junction_relus(Constraints c);

// `graph` must already carry junction relus for every level but basic.
ThresholdSet convert_residual(const NetworkGraph& graph, Constraints level, const Tensor& samples,
                              const NormalizeConfig& config, double unit_threshold = 1.0);

// Random subset of `count` samples (all when count >= size), as a batch.
Tensor normalization_batch(const Dataset& data, std::size_t count, std::uint64_t seed);

// Inserts dropout (when p > 0), initializes, attaches the preprocessing and
// trains on data.train.
NetworkGraph train_network(NetworkGraph arch, const PreparedData& data, const TrainConfig& config, double dropout_p,
                           const std::function<void(int, double, double)>& on_epoch = {});

struct AblationConfig {
  ResNetConfig net;
  TrainConfig train;
  double dropout_p = 0.1;
  std::size_t timesteps = 500;
  std::size_t seeds = 5;
  std::size_t norm_batch = 256;
  std::size_t eval_limit = 0;  // 0 = whole test split
  std::uint64_t seed = 0;
  std::vector<Constraints> levels{Constraints::basic, Constraints::junction_relu, Constraints::unity_threshold,
                                  Constraints::full};
  int jobs = 0;
};

struct AblationRow {
  Constraints level = Constraints::basic;
  double ann_error = 0.0;
  std::vector<double> errors;  // one per seed
  double mean_error = 0.0;
  ThresholdSet thresholds;
};

struct AblationResult {
  NetworkGraph plain;        // trained without junction relus
  NetworkGraph with_relus;   // trained with junction relus
  std::vector<AblationRow> rows;
};

// Trains the two residual variants each level needs, converts and
// evaluates every level over `seeds` simulation seeds.
AblationResult run_ablation(const PreparedData& data, const AblationConfig& config,
                            const std::function<void(const std::string&)>& log = {});

}  // namespace snnconv
