#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snnconv/dataset.hpp"
#include "snnconv/netgraph.hpp"
#include "snnconv/rng.hpp"

namespace snnconv {

struct TrainConfig {
  double learning_rate = 0.05;
  // Epochs after which the rate is divided by decay_factor. Empty selects
  // milestones at 81/200 and 122/200 of the run.
  std::vector<int> lr_decay_epochs;
  double decay_factor = 10.0;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  // Overrides every dropout layer's probability when set.
  std::optional<double> dropout_p;
  int epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<int> milestones() const;
};

struct TrainResult {
  NetworkGraph graph;
  std::vector<double> loss_history;      // mean training loss per epoch
  std::vector<double> accuracy_history;  // training accuracy per epoch (with dropout active)
};

// Std of the zero-mean normal used for a conv/linear layer with kernel k and
// n output channels: sqrt(2 / (k^2 n)) normally, sqrt(2) / (k^2 n) on a
// residual (non-identity) path. Linear layers use k = 1.
double init_std(const LayerSpec& layer, bool residual_path);

NetworkGraph init_weights(NetworkGraph graph, std::uint64_t seed);

// Inserts a dropout layer after every relu that is not followed by pooling,
// skipping junction relus and relus that feed an identity shortcut.
// Idempotent.
NetworkGraph apply_dropout_placement(NetworkGraph graph, double p);

// Inverted dropout: each entry is 1/(1-p) with probability 1-p, else 0.
void fill_dropout_mask(std::span<float> mask, double p, SplitMix64& rng);

// Mini-batch SGD with momentum and weight decay on softmax cross-entropy.
// `data` must already be preprocessed. Throws TrainingDivergedError on NaN.
TrainResult train(NetworkGraph graph, const Dataset& data, const TrainConfig& config,
                  const std::function<void(int, double, double)>& on_epoch = {});

using WeightMap = std::map<std::string, std::vector<double>>;

WeightMap weights_as_double(const NetworkGraph& graph);

// Mean softmax cross-entropy in double precision with dropout inactive.
// Fills `grad` (same keys as `weights`) when non-null.
double cross_entropy(const NetworkGraph& graph, const WeightMap& weights, const Tensor& inputs,
                     const std::vector<int>& labels, WeightMap* grad = nullptr);

}  // namespace snnconv
