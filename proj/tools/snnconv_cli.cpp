// snnconv: validate, train, normalize, run, analyze and ablate spiking
// conversions of bias-free CNNs and residual nets.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "snnconv/analyzer.hpp"
#include "snnconv/architectures.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/model_io.hpp"
#include "snnconv/normalizer.hpp"
#include "snnconv/pipeline.hpp"
#include "snnconv/resnet.hpp"
#include "snnconv/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace snnconv;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Merged view of every option of `app` (file values and flags alike).
json config_snapshot(const CLI::App& app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help" || name == "-h" || name == "--config") continue;
    std::string key = opt->get_single_name();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[key] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      cfg[key] = opt->get_default_str();
    }
  }
  return cfg;
}

json make_manifest(const CLI::App& sub, std::uint64_t seed, const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs) {
  return json{{"command", sub.get_name()}, {"config", config_snapshot(sub)}, {"seed", seed},
              {"inputs", inputs},          {"outputs", outputs},            {"version", kVersion}};
}

std::vector<std::string> manifest_comment(const json& manifest) { return {"manifest: " + manifest.dump()}; }

fs::path sidecar_path(const fs::path& model) {
  fs::path p = model;
  p.replace_extension(".thresholds");
  return p;
}

// Loads the train/test split from `dir` (or the directory recorded in the
// model) and applies the model's own preprocessing.
PreparedData load_for_model(const NetworkGraph& g, const std::string& dir_flag) {
  std::string dir = dir_flag;
  if (dir.empty()) {
    auto it = g.metadata.find("data");
    if (it == g.metadata.end()) throw UsageError("no --data given and the model does not record a dataset");
    dir = it->second;
  }
  const auto split = load_dataset_dir(dir);
  PreparedData d;
  d.preprocessing = g.preprocessing;
  d.train = preprocessed(g.preprocessing, split.train);
  d.test = preprocessed(g.preprocessing, split.test);
  return d;
}

void print_thresholds(const ThresholdSet& set) {
  std::printf("%-24s %s\n", "layer", "threshold");
  for (std::size_t i = 0; i < set.size(); ++i) std::printf("%-24s %.6f\n", set.layers[i].c_str(), set.values[i]);
}

// ---- validate ----
struct ValidateArgs {
  std::string model;
  bool strict = false;
};

int cmd_validate(const ValidateArgs& a) {
  const NetworkGraph g = deserialize_model(read_file_bytes(a.model));
  const auto report = validate_convertibility(g, {a.strict});
  for (const auto& v : report.violations) std::printf("%s: [%s] %s\n", v.layer.c_str(), v.rule.c_str(), v.message.c_str());
  std::printf("%zu violations\n", report.violations.size());
  return report.violations.empty() ? 0 : 1;
}

// ---- train ----
struct TrainArgs {
  std::string arch = "cnn";
  std::string data;
  std::string out = "model.sfm";
  int epochs = 20;
  double lr = 0.05;
  std::size_t batch_size = 32;
  double dropout = 0.2;
  std::optional<std::uint64_t> seed;
  int conv1 = 16, conv2 = 32, hidden = 64;
  int width = 16, blocks = 3;
  bool junction_relus = false;
};

int cmd_train(const CLI::App& sub, const TrainArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const auto data = prepare_data(load_dataset_dir(a.data));
  NetworkGraph arch;
  const Shape in = data.train.sample_shape();
  if (a.arch == "cnn") {
    arch = build_cnn({in, data.train.num_classes, a.conv1, a.conv2, a.hidden});
  } else if (a.arch == "resnet") {
    arch = build_resnet({in, data.train.num_classes, a.width, a.blocks, a.junction_relus});
  } else {
    throw UsageError("--arch must be cnn or resnet");
  }
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch_size;
  tc.seed = seed;
  tc.validate();
  NetworkGraph g = train_network(std::move(arch), data, tc, a.dropout, [](int e, double loss, double acc) {
    std::printf("epoch %3d  loss %.4f  train accuracy %.4f\n", e + 1, loss, acc);
    std::fflush(stdout);
  });
  const double err = ann_error(g, data.test);
  std::printf("test error %.4f\n", err);
  g.metadata["data"] = fs::absolute(a.data).string();
  g.metadata["arch"] = a.arch;
  g.metadata["ann_test_error"] = std::to_string(err);
  g.metadata["manifest"] = make_manifest(sub, seed, {a.data}, {a.out}).dump();
  save_model(g, a.out);
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

// ---- normalize ----
struct NormalizeArgs {
  std::string model;
  std::string method = "spike-norm";
  std::size_t timesteps = 2500;
  std::size_t batch = 256;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string constraints;
  std::string out;
  bool no_floor = false;
};

int cmd_normalize(const CLI::App& sub, const NormalizeArgs& a) {
  const auto method = parse_threshold_method(a.method);
  if (!method || *method == ThresholdMethod::unity) throw UsageError("--method must be spike-norm or ann");
  const std::uint64_t seed = resolve_seed(a.seed);
  const NetworkGraph g = load_model(a.model);
  const auto data = load_for_model(g, a.data);
  const Tensor batch = normalization_batch(data.train, a.batch, derive_seed(seed, 1));
  NormalizeConfig nc;
  nc.timesteps = a.timesteps;
  nc.seed = derive_seed(seed, 2);
  nc.enable_floor = !a.no_floor;

  ThresholdSet set;
  if (!a.constraints.empty()) {
    const auto level = parse_constraints(a.constraints);
    if (!level) throw UsageError("--constraints must be basic, junction-relu, unity-threshold or full");
    if (*method != ThresholdMethod::spike_norm) throw UsageError("--constraints requires --method spike-norm");
    set = convert_residual(g, *level, batch, nc);
  } else if (*method == ThresholdMethod::spike_norm) {
    set = spike_norm(g, batch, nc);
  } else {
    set = ann_based_thresholds(g, batch, nc);
  }
  const fs::path out = a.out.empty() ? sidecar_path(a.model) : fs::path(a.out);
  const json manifest = make_manifest(sub, seed, {a.model}, {out.string()});
  save_thresholds(set, out, manifest_comment(manifest));
  print_thresholds(set);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

// ---- run ----
struct RunArgs {
  std::string model;
  std::string data;
  std::size_t timesteps = 2500;
  std::optional<std::uint64_t> seed;
  std::size_t repeats = 5;
  int jobs = 0;
  std::string thresholds;
  std::size_t limit = 0;
  std::size_t grid_step = 0;
  std::string out_dir = ".";
};

int cmd_run(const CLI::App& sub, const RunArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const NetworkGraph g = load_model(a.model);
  const fs::path th_path = a.thresholds.empty() ? sidecar_path(a.model) : fs::path(a.thresholds);
  if (!fs::exists(th_path)) throw UsageError("threshold file " + th_path.string() + " not found; run normalize first");
  const ThresholdSet th = load_thresholds(th_path);
  const auto data = load_for_model(g, a.data);
  const Dataset eval = a.limit ? data.test.head(a.limit) : data.test;

  SnnEvalConfig ec;
  ec.timesteps = a.timesteps;
  ec.seed = seed;
  ec.repeats = a.repeats;
  ec.jobs = a.jobs;
  ec.record_profiles = true;
  const std::size_t step = a.grid_step ? a.grid_step : std::max<std::size_t>(a.timesteps / 10, 1);
  for (std::size_t t = 0; t < a.timesteps; t += step) ec.grid.push_back(t);
  const auto runs = evaluate_snn(g, th, eval, ec);

  const double ann = ann_error(g, eval);
  for (std::size_t r = 0; r < runs.size(); ++r) std::printf("repeat %zu  error %.4f\n", r + 1, runs[r].error);
  const double mean = mean_error(runs);
  std::printf("ANN error %.4f  SNN mean error %.4f  increment %.2f pp\n", ann, mean, 100.0 * (mean - ann));

  std::vector<ConvergencePoint> curve = runs.front().curve;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double s = 0.0;
    for (const auto& r : runs) s += r.curve[i].error;
    curve[i].error = s / static_cast<double>(runs.size());
  }
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  const std::vector<std::string> outs{(dir / "convergence.csv").string(), (dir / "profile.csv").string(),
                                      (dir / "census.csv").string()};
  const auto comment = manifest_comment(make_manifest(sub, seed, {a.model, th_path.string()}, outs));
  const auto& profiles = runs.front().profiles;
  const OpCensus census = build_census(g, profiles);
  write_text_file(outs[0], format_convergence_csv(curve, comment));
  write_text_file(outs[1], format_profile_csv(spike_count_profile(profiles), comment));
  write_text_file(outs[2], format_census_csv(census, comment));
  std::printf("AC/MAC ratio %.4f\n", ac_mac_ratio(census));
  for (const auto& o : outs) std::printf("wrote %s\n", o.c_str());
  return 0;
}

// ---- analyze ----
struct AnalyzeArgs {
  std::string model;
  std::string data;
  std::string thresholds;
  std::size_t timesteps = 2500;
  std::size_t minibatch = 64;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out_dir = ".";
};

int cmd_analyze(const CLI::App& sub, const AnalyzeArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const NetworkGraph g = load_model(a.model);
  std::printf("%-24s %12s\n", "layer", "MACs");
  for (const auto& r : synaptic_op_counts(g)) std::printf("%-24s %12llu\n", r.layer.c_str(),
                                                         static_cast<unsigned long long>(r.macs));
  const fs::path th_path = a.thresholds.empty() ? sidecar_path(a.model) : fs::path(a.thresholds);
  if (!fs::exists(th_path)) {
    std::printf("no threshold file at %s; spike statistics skipped\n", th_path.string().c_str());
    return 0;
  }
  const ThresholdSet th = load_thresholds(th_path);
  const auto data = load_for_model(g, a.data);
  const Dataset mb = data.test.subset(random_indices(data.test.size(), std::min(a.minibatch, data.test.size()),
                                                     derive_seed(seed, 1)));
  SimConfig sim;
  sim.timesteps = a.timesteps;
  sim.seed = derive_seed(seed, 2);
  sim.record_profile = true;
  const auto results = simulate_batch(g, th, mb.images, sim, a.jobs);
  std::vector<RunProfile> profiles;
  for (const auto& r : results) profiles.push_back(r.profile);
  const OpCensus census = build_census(g, profiles);
  const auto spikes = spike_count_profile(profiles);

  std::printf("\n%-24s %12s %16s\n", "layer", "MACs", "ACs/inference");
  for (const auto& r : census.rows) std::printf("%-24s %12llu %16.1f\n", r.layer.c_str(),
                                               static_cast<unsigned long long>(r.macs), r.acs);
  std::printf("AC/MAC ratio %.4f over %zu samples, T=%zu\n", ac_mac_ratio(census), census.runs, census.timesteps);
  std::printf("\n%-24s %10s %22s\n", "layer", "neurons", "avg cumulative spikes");
  std::vector<double> depth, avg;
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    std::printf("%-24s %10zu %22.3f\n", spikes[k].layer.c_str(), spikes[k].neurons, spikes[k].avg_cumulative_spikes);
    depth.push_back(static_cast<double>(k));
    avg.push_back(spikes[k].avg_cumulative_spikes);
  }
  if (spikes.size() >= 2) std::printf("Spearman(depth, spikes/neuron) %.3f\n", spearman(depth, avg));

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  const std::vector<std::string> outs{(dir / "profile.csv").string(), (dir / "census.csv").string()};
  const auto comment = manifest_comment(make_manifest(sub, seed, {a.model, th_path.string()}, outs));
  write_text_file(outs[0], format_profile_csv(spikes, comment));
  write_text_file(outs[1], format_census_csv(census, comment));
  for (const auto& o : outs) std::printf("wrote %s\n", o.c_str());
  return 0;
}

// ---- ablate ----
struct AblateArgs {
  std::string data;
  std::vector<std::string> constraints;
  int epochs = 20;
  double dropout = 0.1;
  int width = 16, blocks = 3;
  std::size_t timesteps = 500;
  std::size_t seeds = 5;
  std::size_t batch = 256;
  std::size_t limit = 0;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out_dir = ".";
};

int cmd_ablate(const CLI::App& sub, const AblateArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const auto data = prepare_data(load_dataset_dir(a.data));
  AblationConfig cfg;
  cfg.net = {data.train.sample_shape(), data.train.num_classes, a.width, a.blocks, false};
  cfg.train.epochs = a.epochs;
  cfg.train.seed = seed;
  cfg.dropout_p = a.dropout;
  cfg.timesteps = a.timesteps;
  cfg.seeds = a.seeds;
  cfg.norm_batch = a.batch;
  cfg.eval_limit = a.limit;
  cfg.seed = seed;
  cfg.jobs = a.jobs;
  if (!a.constraints.empty()) {
    cfg.levels.clear();
    for (const auto& c : a.constraints) {
      const auto level = parse_constraints(c);
      if (!level) throw UsageError("unknown constraint level '" + c + "'");
      cfg.levels.push_back(*level);
    }
  }
  const auto result = run_ablation(data, cfg, [](const std::string& m) {
    std::printf("%s\n", m.c_str());
    std::fflush(stdout);
  });

  std::ostringstream csv;
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  const fs::path out = dir / "ablation.csv";
  csv << "# manifest: " << make_manifest(sub, seed, {a.data}, {out.string()}).dump() << '\n';
  csv << "constraints,ann_error,snn_error_mean,increment_pp\n";
  std::printf("\n%-18s %10s %10s %10s\n", "constraints", "ANN", "SNN mean", "incr (pp)");
  for (const auto& r : result.rows) {
    const double inc = 100.0 * (r.mean_error - r.ann_error);
    std::printf("%-18s %10.4f %10.4f %10.2f\n", std::string(to_string(r.level)).c_str(), r.ann_error, r.mean_error, inc);
    char line[160];
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.4f\n", std::string(to_string(r.level)).c_str(), r.ann_error,
                  r.mean_error, inc);
    csv << line;
  }
  write_text_file(out, csv.str());
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

}  // namespace

// CLI11 only reads config files attached to the top-level app, so the
// subcommand's --config is applied here. Flags given on the command line win.
void apply_config_file(CLI::App& sub) {
  const CLI::Option* cfg = sub.get_config_ptr();
  if (cfg == nullptr || cfg->count() == 0) return;
  const auto file = cfg->as<std::string>();
  std::vector<CLI::ConfigItem> items;
  try {
    items = sub.get_config_formatter()->from_file(file);
  } catch (const CLI::FileError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && item.parents != std::vector<std::string>{sub.get_name()}) continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr) opt = sub.get_option_no_throw(item.name);
    if (opt == nullptr || opt == cfg) throw ConfigError(file + ": unknown option '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(file + ": " + item.name + ": " + e.what());
    }
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Convert bias-free CNNs and residual nets into integrate-and-fire spiking networks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, CLI::Option*>> must;  // required, but may come from the config file

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check a model against the conversion constraints");
  must.push_back({validate, validate->add_option("model", va.model, "Model file (.sfm)")});
  validate->add_flag("--strict-residual", va.strict, "Also require a relu after every junction");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a bias-free network and save it as .sfm");
  train_cmd->add_option("--arch", ta.arch, "cnn or resnet")->capture_default_str();
  must.push_back({train_cmd, train_cmd->add_option("--data", ta.data, "Dataset directory")});
  train_cmd->add_option("--out,-o", ta.out, "Output model")->capture_default_str();
  train_cmd->add_option("--epochs", ta.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", ta.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", ta.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--dropout", ta.dropout, "Dropout probability (0 disables)")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed);
  train_cmd->add_option("--conv1", ta.conv1, "cnn: channels of the first conv pair")->capture_default_str();
  train_cmd->add_option("--conv2", ta.conv2, "cnn: channels of the second conv pair")->capture_default_str();
  train_cmd->add_option("--hidden", ta.hidden, "cnn: hidden linear width")->capture_default_str();
  train_cmd->add_option("--width", ta.width, "resnet: channel width")->capture_default_str();
  train_cmd->add_option("--blocks", ta.blocks, "resnet: residual blocks")->capture_default_str();
  train_cmd->add_flag("--junction-relus", ta.junction_relus, "resnet: relu after every junction");

  NormalizeArgs na;
  auto* normalize = app.add_subcommand("normalize", "Compute per-layer firing thresholds");
  must.push_back({normalize, normalize->add_option("model", na.model, "Model file (.sfm)")});
  normalize->add_option("--method", na.method, "spike-norm or ann")->capture_default_str();
  normalize->add_option("--timesteps", na.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  normalize->add_option("--batch", na.batch, "Normalization subset size")->capture_default_str()->check(CLI::PositiveNumber);
  normalize->add_option("--seed", na.seed);
  normalize->add_option("--data", na.data, "Dataset directory (default: the one recorded at training)");
  normalize->add_option("--constraints", na.constraints, "Residual level: basic|junction-relu|unity-threshold|full");
  normalize->add_option("--out,-o", na.out, "Threshold file (default: <model>.thresholds)");
  normalize->add_flag("--no-floor", na.no_floor, "Fail on never-active layers instead of flooring");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Simulate the spiking network on the test split");
  must.push_back({run, run->add_option("model", ra.model, "Model file (.sfm)")});
  run->add_option("data", ra.data, "Dataset directory (default: the one recorded at training)");
  run->add_option("--timesteps", ra.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--seed", ra.seed);
  run->add_option("--repeats", ra.repeats, "Independent runs to average")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--jobs,-j", ra.jobs, "Worker threads (0: OpenMP default)")->capture_default_str();
  run->add_option("--thresholds", ra.thresholds, "Threshold file (default: <model>.thresholds)");
  run->add_option("--limit", ra.limit, "Evaluate only the first N test samples")->capture_default_str();
  run->add_option("--grid-step", ra.grid_step, "Convergence snapshot spacing (default T/10)");
  run->add_option("--out-dir", ra.out_dir)->capture_default_str();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "MAC/AC census and per-layer spike profile");
  must.push_back({analyze, analyze->add_option("model", aa.model, "Model file (.sfm)")});
  analyze->add_option("--data", aa.data, "Dataset directory (default: the one recorded at training)");
  analyze->add_option("--thresholds", aa.thresholds, "Threshold file (default: <model>.thresholds)");
  analyze->add_option("--timesteps", aa.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--minibatch", aa.minibatch, "Random test samples to average over")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--seed", aa.seed);
  analyze->add_option("--jobs,-j", aa.jobs)->capture_default_str();
  analyze->add_option("--out-dir", aa.out_dir)->capture_default_str();

  AblateArgs ba;
  auto* ablate = app.add_subcommand("ablate", "Residual conversion ladder, one error figure per level");
  must.push_back({ablate, ablate->add_option("--data", ba.data, "Dataset directory")});
  ablate->add_option("--constraints", ba.constraints, "Levels to run (default: all four)");
  ablate->add_option("--epochs", ba.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  ablate->add_option("--dropout", ba.dropout)->capture_default_str();
  ablate->add_option("--width", ba.width)->capture_default_str();
  ablate->add_option("--blocks", ba.blocks)->capture_default_str();
  ablate->add_option("--timesteps", ba.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  ablate->add_option("--seeds", ba.seeds, "Simulation seeds per level")->capture_default_str()->check(CLI::PositiveNumber);
  ablate->add_option("--batch", ba.batch, "Normalization subset size")->capture_default_str();
  ablate->add_option("--limit", ba.limit, "Evaluate only the first N test samples")->capture_default_str();
  ablate->add_option("--seed", ba.seed);
  ablate->add_option("--jobs,-j", ba.jobs)->capture_default_str();
  ablate->add_option("--out-dir", ba.out_dir)->capture_default_str();

  for (auto* sub : {validate, train_cmd, normalize, run, analyze, ablate}) {
    sub->set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) apply_config_file(*sub);
    for (const auto& [sub, opt] : must)
      if (sub->parsed() && opt->count() == 0) throw UsageError(sub->get_name() + ": " + opt->get_name() + " is required");
    if (*validate) return cmd_validate(va);
    if (*train_cmd) return cmd_train(*train_cmd, ta);
    if (*normalize) return cmd_normalize(*normalize, na);
    if (*run) return cmd_run(*run, ra);
    if (*analyze) return cmd_analyze(*analyze, aa);
    if (*ablate) return cmd_ablate(*ablate, ba);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
