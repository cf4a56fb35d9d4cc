#include "snnconv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graph_exec.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/resnet.hpp"
#include "snnconv/rng.hpp"

namespace snnconv {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(decay_factor > 0.0)) throw ConfigError("decay_factor must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (dropout_p && !(*dropout_p >= 0.0 && *dropout_p < 1.0)) throw ConfigError("dropout_p must lie in [0, 1)");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

std::vector<int> TrainConfig::milestones() const {
  if (!lr_decay_epochs.empty()) return lr_decay_epochs;
  return {static_cast<int>(std::lround(epochs * 81.0 / 200.0)), static_cast<int>(std::lround(epochs * 122.0 / 200.0))};
}

double init_std(const LayerSpec& layer, bool residual_path) {
  const double k = layer.kind == LayerKind::conv2d ? layer.kernel : 1.0;
  const double n = layer.channels_out;
  return residual_path ? std::sqrt(2.0) / (k * k * n) : std::sqrt(2.0 / (k * k * n));
}

NetworkGraph init_weights(NetworkGraph graph, std::uint64_t seed) {
  const Topology topo = analyze_topology(graph);
  const auto residual = residual_path_mask(graph, topo);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    auto& l = graph.layers[i];
    if (!is_synaptic(l.kind)) continue;
    const double std = init_std(l, residual[i]);
    SplitMix64 rng(derive_seed(seed, i));
    auto& w = graph.weight(l.id);
    for (float& v : w.data()) v = static_cast<float>(std * rng.normal());
    l.needs_training = false;
  }
  return graph;
}

void fill_dropout_mask(std::span<float> mask, double p, SplitMix64& rng) {
  const double keep = 1.0 - p;
  const float scale = static_cast<float>(1.0 / keep);
  for (float& m : mask) m = rng.uniform() < keep ? scale : 0.0f;
}

NetworkGraph apply_dropout_placement(NetworkGraph graph, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1)");
  const Topology topo = analyze_topology(graph);
  const auto structure = analyze_residual(graph, topo);

  std::vector<bool> skip(graph.layers.size(), false);
  for (const auto& block : structure.blocks) {
    skip[block.fork] = true;
    if (block.junction_relu) skip[*block.junction_relu] = true;
  }

  std::vector<LayerSpec> out;
  std::vector<std::pair<std::string, std::string>> rewire;  // relu id -> dropout id
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    out.push_back(graph.layers[i]);
    const auto& l = graph.layers[i];
    if (l.kind != LayerKind::relu || skip[i] || i == topo.output) continue;
    const auto& cons = topo.consumers[i];
    const bool pooled_or_dropped = std::any_of(cons.begin(), cons.end(), [&](std::size_t c) {
      const auto k = graph.layers[c].kind;
      return k == LayerKind::avgpool2d || k == LayerKind::maxpool2d || k == LayerKind::dropout;
    });
    if (pooled_or_dropped) continue;
    LayerSpec drop;
    drop.id = l.id + "_drop";
    drop.kind = LayerKind::dropout;
    drop.dropout_p = p;
    drop.inputs = {l.id};
    out.push_back(drop);
    rewire.emplace_back(l.id, drop.id);
  }
  for (auto& l : out) {
    if (l.kind == LayerKind::dropout) continue;
    for (auto& in : l.inputs) {
      for (const auto& [from, to] : rewire) {
        if (in == from) in = to;
      }
    }
  }
  graph.layers = std::move(out);
  analyze_topology(graph);
  return graph;
}

namespace {

template <class T>
double softmax_xent(std::span<const T> logits, std::size_t batch, std::size_t classes, const std::vector<int>& labels,
                    std::size_t label_offset, std::vector<T>* grad, std::size_t* correct) {
  double loss = 0.0;
  if (grad) grad->assign(batch * classes, T(0));
  std::vector<double> p(classes);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* z = logits.data() + n * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += (p[c] = std::exp(static_cast<double>(z[c]) - zmax));
    const auto label = static_cast<std::size_t>(labels[label_offset + n]);
    loss += -(static_cast<double>(z[label]) - zmax - std::log(sum));
    if (correct) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c) {
        if (z[c] > z[best]) best = c;
      }
      if (best == label) ++*correct;
    }
    if (grad) {
      for (std::size_t c = 0; c < classes; ++c) {
        (*grad)[n * classes + c] =
            static_cast<T>((p[c] / sum - (c == label ? 1.0 : 0.0)) / static_cast<double>(batch));
      }
    }
  }
  return loss / static_cast<double>(batch);
}

}  // namespace

TrainResult train(NetworkGraph graph, const Dataset& data, const TrainConfig& config,
                  const std::function<void(int, double, double)>& on_epoch) {
  config.validate();
  if (data.size() == 0) throw ArgumentError("training set is empty");
  if (data.sample_shape() != graph.input_shape) throw ShapeError("training samples do not match network input");
  const Topology topo = analyze_topology(graph);
  const std::size_t classes = shape_numel(topo.output_shapes[topo.output]);
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ArgumentError("label outside the class range");
  }

  auto weights = detail::gather_weights<float>(graph);
  detail::WeightSet<float> velocity(weights.size()), wgrad;
  for (std::size_t i = 0; i < weights.size(); ++i) velocity[i].assign(weights[i].size(), 0.0f);

  std::vector<double> dropout_p(graph.layers.size(), 0.0);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].kind == LayerKind::dropout) dropout_p[i] = config.dropout_p.value_or(graph.layers[i].dropout_p);
  }

  const std::size_t per = shape_numel(graph.input_shape);
  const auto milestones = config.milestones();
  TrainResult result;
  detail::ExecBuffers<float> buf;
  std::vector<float> batch_input;
  std::vector<int> batch_labels;
  std::vector<std::vector<float>> masks(graph.layers.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.learning_rate;
    for (int m : milestones) {
      if (epoch >= m) lr /= config.decay_factor;
    }
    const auto order = random_indices(data.size(), data.size(), derive_seed(config.seed, 1000003ULL + epoch));
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0, step = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++step) {
      const std::size_t b = std::min(config.batch_size, order.size() - start);
      batch_input.resize(b * per);
      batch_labels.resize(b);
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t src = order[start + k];
        std::copy_n(data.images.data().begin() + static_cast<std::ptrdiff_t>(src * per), per,
                    batch_input.begin() + static_cast<std::ptrdiff_t>(k * per));
        batch_labels[k] = data.labels[src];
      }

      SplitMix64 mask_rng(derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)), step));
      for (std::size_t i = 0; i < graph.layers.size(); ++i) {
        masks[i].clear();
        if (graph.layers[i].kind != LayerKind::dropout || dropout_p[i] <= 0.0) continue;
        masks[i].resize(b * shape_numel(topo.output_shapes[i]));
        fill_dropout_mask(masks[i], dropout_p[i], mask_rng);
      }

      detail::forward<float>(graph, topo, weights, batch_input, b, buf, &masks);
      std::size_t batch_correct = 0;
      buf.grad.resize(graph.layers.size());
      const double loss = softmax_xent<float>(buf.out[topo.output], b, classes, batch_labels, 0,
                                              &buf.grad[topo.output], &batch_correct);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(epoch, "training diverged (non-finite loss) in epoch " + std::to_string(epoch));
      }
      detail::backward<float>(graph, topo, weights, batch_input, buf, wgrad, &masks);

      for (std::size_t i = 0; i < weights.size(); ++i) {
        auto& w = weights[i];
        auto& v = velocity[i];
        const auto& g = wgrad[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
          const float grad = g[k] + static_cast<float>(config.weight_decay) * w[k];
          v[k] = static_cast<float>(config.momentum) * v[k] + grad;
          w[k] -= static_cast<float>(lr) * v[k];
        }
      }
      loss_sum += loss * static_cast<double>(b);
      correct += batch_correct;
      seen += b;
    }

    const double epoch_loss = loss_sum / static_cast<double>(seen);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError(epoch, "training diverged (non-finite loss) in epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
    result.accuracy_history.push_back(static_cast<double>(correct) / static_cast<double>(seen));
    if (on_epoch) on_epoch(epoch, epoch_loss, result.accuracy_history.back());
  }

  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    auto& l = graph.layers[i];
    if (!is_synaptic(l.kind)) continue;
    for (float v : weights[i]) {
      if (!std::isfinite(v)) throw TrainingDivergedError(config.epochs - 1, "non-finite weight after training");
    }
    graph.weight(l.id) = Tensor(graph.weight(l.id).shape(), std::move(weights[i]));
    l.needs_training = false;
  }
  result.graph = std::move(graph);
  return result;
}

WeightMap weights_as_double(const NetworkGraph& graph) {
  WeightMap out;
  for (const auto& [id, t] : graph.weights) out[id].assign(t.data().begin(), t.data().end());
  return out;
}

double cross_entropy(const NetworkGraph& graph, const WeightMap& weights, const Tensor& inputs,
                     const std::vector<int>& labels, WeightMap* grad) {
  const Topology topo = analyze_topology(graph);
  const std::size_t batch = labels.size();
  if (inputs.size() != batch * shape_numel(graph.input_shape)) throw ShapeError("inputs do not match label count");
  detail::WeightSet<double> w(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (is_synaptic(graph.layers[i].kind)) w[i] = weights.at(graph.layers[i].id);
  }
  std::vector<double> x(inputs.data().begin(), inputs.data().end());
  detail::ExecBuffers<double> buf;
  detail::forward<double>(graph, topo, w, x, batch, buf);
  const std::size_t classes = shape_numel(topo.output_shapes[topo.output]);
  std::vector<double> gout;
  const double loss = softmax_xent<double>(buf.out[topo.output], batch, classes, labels, 0, grad ? &gout : nullptr,
                                           nullptr);
  if (grad) {
    buf.grad.assign(graph.layers.size(), {});
    buf.grad[topo.output] = std::move(gout);
    detail::WeightSet<double> wg;
    detail::backward<double>(graph, topo, w, x, buf, wg);
    grad->clear();
    for (std::size_t i = 0; i < graph.layers.size(); ++i) {
      if (is_synaptic(graph.layers[i].kind)) (*grad)[graph.layers[i].id] = std::move(wg[i]);
    }
  }
  return loss;
}

}  // namespace snnconv
