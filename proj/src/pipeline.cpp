#include "snnconv/pipeline.hpp"

#include <algorithm>

#include "snnconv/ann.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/resnet.hpp"
#include "snnconv/rng.hpp"

namespace snnconv {

PreparedData prepare_data(const TrainTestSplit& split) {
  PreparedData out;
  out.preprocessing = compute_preprocessing(split.train);
  out.train = preprocessed(out.preprocessing, split.train);
  out.test = preprocessed(out.preprocessing, split.test);
  return out;
}

double ann_error(const NetworkGraph& graph, const Dataset& data) {
  if (data.size() == 0) throw ArgumentError("empty evaluation set");
  const auto pred = ann_predict(graph, data.images);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != data.labels[i];
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::vector<RepeatResult> evaluate_snn(const NetworkGraph& graph, const ThresholdSet& thresholds, const Dataset& data,
                                       const SnnEvalConfig& config) {
  if (config.repeats == 0) throw ArgumentError("repeats must be at least 1");
  if (config.timesteps == 0) throw ArgumentError("timesteps must be at least 1");
  std::vector<std::size_t> grid = config.grid;
  grid.push_back(config.timesteps);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.back() > config.timesteps) throw ArgumentError("snapshot beyond the simulated horizon");

  std::vector<RepeatResult> out;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    SimConfig sim;
    sim.timesteps = config.timesteps;
    sim.seed = derive_seed(config.seed, r);
    sim.record_profile = config.record_profiles && r == 0;
    auto runs = simulate_batch(graph, thresholds, data.images, sim, config.jobs);
    RepeatResult res;
    res.seed = sim.seed;
    res.curve = convergence_from_runs(runs, data.labels, grid);
    res.error = res.curve.back().error;
    if (sim.record_profile) {
      res.profiles.reserve(runs.size());
      for (auto& run : runs) res.profiles.push_back(std::move(run.profile));
    }
    out.push_back(std::move(res));
  }
  return out;
}

double mean_error(const std::vector<RepeatResult>& runs) {
  if (runs.empty()) throw ArgumentError("no runs to average");
  double s = 0.0;
  for (const auto& r : runs) s += r.error;
  return s / static_cast<double>(runs.size());
}

std::string_view to_string(Constraints c) {
  switch (c) {
    case Constraints::basic: return "basic";
    case Constraints::junction_relu: return "junction-relu";
    case Constraints::unity_threshold: return "unity-threshold";
    case Constraints::full: return "full";
  }
  return "unknown";
}

std::optional<Constraints> parse_constraints(std::string_view s) {
  for (auto c : {Constraints::basic, Constraints::junction_relu, Constraints::unity_threshold, Constraints::full}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

bool wants_junction_relus(Constraints c) { return c != Constraints::basic; }

ThresholdSet convert_residual(const NetworkGraph& graph, Constraints level, const Tensor& samples,
                              const NormalizeConfig& config, double unit_threshold) {
  const Topology topo = analyze_topology(graph);
  const auto rs = analyze_residual(graph, topo);
  if (wants_junction_relus(level)) {
    for (const auto& b : rs.blocks) {
      if (!b.junction_relu) {
        throw ConstraintError("junction '" + graph.layers[b.junction].id + "' lacks a relu for level " +
                              std::string(to_string(level)));
      }
    }
  }
  if (level == Constraints::basic || level == Constraints::junction_relu) return spike_norm(graph, samples, config);

  auto fixed_except = [&](auto keep_free, const ThresholdSet& source) {
    ThresholdSet fixed;
    fixed.method = ThresholdMethod::spike_norm;
    for (std::size_t k = 0; k < rs.sites.size(); ++k) {
      if (keep_free(rs.roles[k])) continue;
      const auto& id = graph.layers[rs.sites[k]].id;
      fixed.layers.push_back(id);
      fixed.values.push_back(source.find(id).value_or(unit_threshold));
    }
    return fixed;
  };
  const ThresholdSet none;
  NormalizeConfig cfg = config;

  if (level == Constraints::unity_threshold) {
    cfg.fixed = fixed_except([](SiteRole r) { return r == SiteRole::head; }, none);
    return spike_norm(graph, samples, cfg);
  }

  cfg.fixed = fixed_except([](SiteRole r) { return r == SiteRole::stem; }, none);
  const ThresholdSet stem = spike_norm(graph, samples, cfg);
  const ThresholdSet policy = apply_residual_threshold_policy(graph, stem, unit_threshold);
  cfg.fixed = fixed_except([](SiteRole r) { return r == SiteRole::head; }, policy);
  ThresholdSet out = spike_norm(graph, samples, cfg);
  return out;
}

Tensor normalization_batch(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (data.size() == 0) throw ArgumentError("empty dataset");
  if (count >= data.size()) return data.images;
  return data.subset(random_indices(data.size(), count, seed)).images;
}

NetworkGraph train_network(NetworkGraph arch, const PreparedData& data, const TrainConfig& config, double dropout_p,
                           const std::function<void(int, double, double)>& on_epoch) {
  if (dropout_p > 0.0) arch = apply_dropout_placement(std::move(arch), dropout_p);
  arch = init_weights(std::move(arch), config.seed);
  arch.preprocessing = data.preprocessing;
  return train(std::move(arch), data.train, config, on_epoch).graph;
}

AblationResult run_ablation(const PreparedData& data, const AblationConfig& config,
                            const std::function<void(const std::string&)>& log) {
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  AblationResult out;
  const bool need_plain = std::find(config.levels.begin(), config.levels.end(), Constraints::basic) != config.levels.end();
  const bool need_relus = std::any_of(config.levels.begin(), config.levels.end(), wants_junction_relus);
  const Dataset eval = config.eval_limit ? data.test.head(config.eval_limit) : data.test;
  const Tensor batch = normalization_batch(data.train, config.norm_batch, derive_seed(config.seed, 1));

  if (need_plain) {
    ResNetConfig net = config.net;
    net.junction_relus = false;
    out.plain = train_network(build_resnet(net), data, config.train, config.dropout_p);
    say("trained residual net without junction relus: test error " + std::to_string(ann_error(out.plain, eval)));
  }
  if (need_relus) {
    ResNetConfig net = config.net;
    net.junction_relus = true;
    out.with_relus = train_network(build_resnet(net), data, config.train, config.dropout_p);
    say("trained residual net with junction relus: test error " + std::to_string(ann_error(out.with_relus, eval)));
  }

  for (Constraints level : config.levels) {
    const NetworkGraph& g = wants_junction_relus(level) ? out.with_relus : out.plain;
    AblationRow row;
    row.level = level;
    row.ann_error = ann_error(g, eval);
    NormalizeConfig nc;
    nc.timesteps = config.timesteps;
    nc.seed = derive_seed(config.seed, 2);
    row.thresholds = convert_residual(g, level, batch, nc);
    SnnEvalConfig ec;
    ec.timesteps = config.timesteps;
    ec.seed = derive_seed(config.seed, 3);
    ec.repeats = config.seeds;
    ec.jobs = config.jobs;
    for (const auto& r : evaluate_snn(g, row.thresholds, eval, ec)) row.errors.push_back(r.error);
    double sum = 0.0;
    for (double e : row.errors) sum += e;
    row.mean_error = sum / static_cast<double>(row.errors.size());
    say(std::string(to_string(level)) + ": mean SNN error " + std::to_string(row.mean_error));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace snnconv
