// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Runs the digit-scale experiments end to end, so it takes a while.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "snnconv/analyzer.hpp"
#include "snnconv/ann.hpp"
#include "snnconv/model_io.hpp"
#include "snnconv/normalizer.hpp"
#include "snnconv/pipeline.hpp"
#include "snnconv/snn.hpp"
#include "snnconv/trainer.hpp"
#include "test_util.hpp"

using namespace snnconv;
using namespace testutil;

namespace {

using Clock = std::chrono::steady_clock;

struct Report {
  int failed = 0;
  void line(bool pass, const std::string& name, const std::string& detail, Clock::time_point start) {
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("%s  %-34s %s  [%.1f s]\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    failed += !pass;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

// One input pixel held at p (scale 1) driving one IF neuron through weight w.
double single_neuron_rate(float w, double theta, double p, std::size_t T, std::uint64_t seed) {
  auto g = make_graph({1, 1, 1}, 1, {linear("n", "", 1, 1)});
  g.weights["n"].storage() = {w};
  g.preprocessing.scale = 1.0;
  const ThresholdSet th{ThresholdMethod::unity, {"n"}, {theta}};
  const auto r = run_inference(g, th, Tensor({1, 1, 1}, {float(p)}), {T, seed, false});
  return double(r.output_counts[0]) / double(T);
}

// Same input train, reset by subtraction instead of to zero. Not part of the
// engine; printed next to the IF rate result for comparison.
double subtractive_rate(double w, double theta, double p, std::size_t T, std::uint64_t seed) {
  EncoderState enc(1.0, seed);
  const Tensor x({1, 1, 1}, {float(p)});
  double v = 0.0;
  std::size_t spikes = 0;
  for (std::size_t t = 0; t < T; ++t) {
    v += w * poisson_step(x, enc).values[0];
    if (v >= theta) {
      v -= theta;
      ++spikes;
    }
  }
  return double(spikes) / double(T);
}

// Exhaustive MAC count: every (output, input channel, tap) triple, padding
// taps included.
std::uint64_t enumerated_macs(const LayerSpec& l, const Shape& in) {
  std::uint64_t n = 0;
  if (l.kind == LayerKind::linear) {
    for (int o = 0; o < l.channels_out; ++o)
      for (int i = 0; i < l.channels_in; ++i) ++n;
    return n;
  }
  const long h = long(in[1]), w = long(in[2]);
  for (int o = 0; o < l.channels_out; ++o)
    for (long y = -l.padding; y + l.kernel <= h + l.padding; y += l.stride)
      for (long x = -l.padding; x + l.kernel <= w + l.padding; x += l.stride)
        for (int c = 0; c < l.channels_in; ++c)
          for (int a = 0; a < l.kernel * l.kernel; ++a) ++n;
  return n;
}

double worst_gradient_error(const NetworkGraph& g, const Tensor& x, const std::vector<int>& y) {
  WeightMap w = weights_as_double(g), grad;
  cross_entropy(g, w, x, y, &grad);
  double worst = 0.0;
  const double eps = 1e-6;
  for (auto& [id, vals] : w) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + eps;
      const double up = cross_entropy(g, w, x, y);
      vals[i] = keep - eps;
      const double down = cross_entropy(g, w, x, y);
      vals[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grad.at(id)[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

std::vector<double> curve_mean(const std::vector<RepeatResult>& runs) {
  std::vector<double> out(runs.front().curve.size(), 0.0);
  for (const auto& r : runs)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r.curve[i].error / double(runs.size());
  return out;
}

}  // namespace

int main() {
  Report rep;
  const std::uint64_t kSeed = 20240501;

  // ---- single neuron ----
  {
    const auto t0 = Clock::now();
    const double rate = single_neuron_rate(0.8f, 2.0, 0.5, 100000, kSeed);
    const double sub = subtractive_rate(0.8, 2.0, 0.5, 100000, kSeed);
    rep.line(std::abs(rate - 0.2) <= 0.01 && std::chrono::duration<double>(Clock::now() - t0).count() < 1.0,
             "if_rate_equivalence",
             fmt("rate %.4f, target 0.2 +- 0.01 (reset to zero fires every ceil(2/0.8)=3 input spikes: p/3 = %.4f; "
                 "reset by subtraction would give %.4f)",
                 rate, 0.5 / 3.0, sub),
             t0);
  }
  {
    const auto t0 = Clock::now();
    const double rate = single_neuron_rate(-0.8f, 2.0, 0.5, 100000, kSeed);
    rep.line(rate == 0.0, "negative_weight_silence", fmt("%.0f output spikes", rate * 100000), t0);
  }
  {
    const auto t0 = Clock::now();
    auto g = make_graph({2, 1, 1}, 1, {linear("n", "", 2, 1), simple("nr", LayerKind::relu, "n")});
    g.weights["n"].storage() = {1.0f, 1.0f};
    g.preprocessing.scale = 1.0;
    const Tensor x({1, 2, 1, 1}, {0.5f, 1.0f});
    const double ann = ann_based_thresholds(g, x).values.at(0);
    NormalizeConfig nc;
    nc.timesteps = 1000;
    nc.seed = kSeed;
    const double sn = spike_norm(g, x, nc).values.at(0);
    rep.line(ann == 1.5 && sn == 2.0, "threshold_gap", fmt("ann_based %.6g, spike_norm(T=1000) %.6g", ann, sn), t0);
  }

  // ---- weight normalization vs threshold balancing ----
  {
    const auto t0 = Clock::now();
    auto g = init_weights(build_cnn({{1, 8, 8}, 10, 8, 8, 16}), kSeed);
    const Tensor samples = random_tensor({16, 1, 8, 8}, kSeed + 1);
    g.preprocessing.scale = 1.0;
    NormalizeConfig nc;
    nc.timesteps = 200;
    nc.seed = kSeed;
    const auto th = spike_norm(g, samples, nc);
    const auto [wn, unit] = to_weight_normalized(g, th);
    SpikingNetwork a(g, th), b(wn, unit);
    std::uint64_t mismatches = 0, events = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      a.reset();
      b.reset();
      EncoderState enc(1.0, derive_seed(kSeed, i));
      const auto img = samples.slice(i);
      EventList in;
      for (std::size_t t = 0; t < 200; ++t) {
        poisson_events(img.data(), enc, in);
        a.step(in);
        b.step(in);
        for (std::size_t k = 0; k < a.num_sites(); ++k) {
          const auto& ea = a.site_events(k);
          const auto& eb = b.site_events(k);
          events += ea.size();
          mismatches += ea.index != eb.index;
        }
      }
    }
    rep.line(mismatches == 0 && events > 0, "weight_norm_equals_threshold",
             fmt("%llu mismatching site-steps, %llu spikes compared", (unsigned long long)mismatches,
                 (unsigned long long)events),
             t0);
  }

  // ---- gradient check ----
  {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      worst = std::max(worst, worst_gradient_error(small_cnn(100 + s), random_tensor({3, 1, 8, 8}, 200 + s), {0, 3, 1}));
      for (bool jr : {false, true})
        worst = std::max(worst,
                         worst_gradient_error(small_resnet(jr, 300 + s), random_tensor({2, 1, 4, 4}, 400 + s), {2, 0}));
    }
    rep.line(worst <= 1e-3, "gradient_check", fmt("max relative error %.3g (limit 1e-3)", worst), t0);
  }

  // ---- MAC formulas on random architectures ----
  {
    const auto t0 = Clock::now();
    std::size_t bad = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto g = random_chain(1000 + s);
      const auto topo = analyze_topology(g);
      const auto ops = synaptic_op_counts(g);
      std::size_t j = 0;
      for (std::size_t i = 0; i < g.layers.size(); ++i) {
        const auto& l = g.layers[i];
        if (l.kind != LayerKind::conv2d && l.kind != LayerKind::linear) continue;
        const Shape in = l.inputs.empty() ? g.input_shape : topo.output_shapes[g.index_of(l.inputs[0])];
        bad += j >= ops.size() || ops[j].layer != l.id || ops[j].macs != enumerated_macs(l, in);
        ++j;
      }
      bad += j != ops.size();
    }
    rep.line(bad == 0, "mac_formula_oracle", fmt("%zu mismatches over 50 random architectures", bad), t0);
  }

  // ---- digit-scale CNN ----
  const PreparedData data = prepare_data(load_dataset_dir(SNNCONV_DATA_DIR));
  const auto cnn_start = Clock::now();
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = kSeed;
  const NetworkGraph cnn = train_network(build_cnn({}), data, tc, 0.2);
  const double cnn_ann = ann_error(cnn, data.test);
  std::printf("info  cnn trained: test error %.4f  [%.1f s]\n", cnn_ann,
              std::chrono::duration<double>(Clock::now() - cnn_start).count());

  const Tensor norm_batch = normalization_batch(data.train, 256, derive_seed(kSeed, 1));
  NormalizeConfig nc;
  nc.timesteps = 2500;
  nc.seed = derive_seed(kSeed, 2);
  const ThresholdSet sn_th = spike_norm(cnn, norm_batch, nc);
  SnnEvalConfig ec;
  ec.timesteps = 2500;
  ec.seed = derive_seed(kSeed, 3);
  ec.repeats = 5;
  ec.grid = {250};
  const auto sn_runs = evaluate_snn(cnn, sn_th, data.test, ec);
  const double sn_err = mean_error(sn_runs);
  {
    const double mins = std::chrono::duration<double>(Clock::now() - cnn_start).count() / 60.0;
    const double inc = 100.0 * (sn_err - cnn_ann);
    rep.line(cnn_ann <= 0.02 && inc <= 1.0 && mins <= 30.0, "cnn_conversion_fidelity",
             fmt("ANN accuracy %.2f%%, spike_norm SNN error %.2f%% over 5 runs, increment %.2f pp (limit 1.0), %.1f min",
                 100.0 * (1.0 - cnn_ann), 100.0 * sn_err, inc, mins),
             cnn_start);
  }
  {
    const auto t0 = Clock::now();
    const auto curve = curve_mean(sn_runs);
    const auto& pts = sn_runs.front().curve;
    double e250 = NAN, e2500 = NAN;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].t == 250) e250 = curve[i];
      if (pts[i].t == 2500) e2500 = curve[i];
    }
    rep.line(e2500 <= e250, "convergence_monotone",
             fmt("error %.4f at T=250, %.4f at T=2500 on %zu samples", e250, e2500, data.test.size()), t0);
  }
  {
    const auto t0 = Clock::now();
    const ThresholdSet ann_th = ann_based_thresholds(cnn, norm_batch, nc);
    SnnEvalConfig c = ec;
    c.grid.clear();
    const double ann_err = mean_error(evaluate_snn(cnn, ann_th, data.test, c));
    rep.line(sn_err <= ann_err, "spike_norm_not_worse_than_ann",
             fmt("mean SNN error %.2f%% spike_norm vs %.2f%% ann_based", 100.0 * sn_err, 100.0 * ann_err), t0);
  }

  // ---- analyzer exactness on the trained CNN ----
  {
    const auto t0 = Clock::now();
    const Dataset few = data.test.head(10);
    const auto res = simulate_batch(cnn, sn_th, few.images, {500, kSeed, true});
    std::vector<RunProfile> profiles;
    for (const auto& r : res) profiles.push_back(r.profile);
    const OpCensus census = build_census(cnn, profiles);
    std::uint64_t engine = 0;
    for (const auto& p : profiles)
      for (auto n : p.ac_events) engine += n;
    bool rows_ok = true;
    for (std::size_t l = 0; l < census.rows.size(); ++l) {
      std::uint64_t per_layer = 0;
      for (const auto& p : profiles) {
        const auto it = std::find(p.synaptic_layers.begin(), p.synaptic_layers.end(), census.rows[l].layer);
        per_layer += p.ac_events[std::size_t(it - p.synaptic_layers.begin())];
      }
      rows_ok = rows_ok && census.rows[l].acs * double(profiles.size()) == double(per_layer);
    }
    rep.line(rows_ok && census.total_ac_events == engine && engine > 0, "analyzer_ac_exact",
             fmt("census %llu AC events, engine counted %llu", (unsigned long long)census.total_ac_events,
                 (unsigned long long)engine),
             t0);
  }

  // ---- determinism ----
  {
    const auto t0 = Clock::now();
    auto artifacts = [&]() {
      std::vector<std::uint64_t> h;
      TrainConfig t;
      t.epochs = 1;
      t.seed = kSeed;
      const auto g = train_network(build_cnn({{1, 8, 8}, 10, 4, 4, 8}), data, t, 0.2);
      const auto bytes = serialize_model(g);
      h.push_back(fnv1a(std::string(bytes.begin(), bytes.end())));
      const Tensor batch = normalization_batch(data.train, 32, kSeed);
      NormalizeConfig n;
      n.timesteps = 200;
      n.seed = kSeed;
      const auto th = spike_norm(g, batch, n);
      h.push_back(fnv1a(format_thresholds(th)));
      SnnEvalConfig e;
      e.timesteps = 200;
      e.seed = kSeed;
      e.repeats = 2;
      e.record_profiles = true;
      const auto runs = evaluate_snn(g, th, data.test.head(40), e);
      h.push_back(fnv1a(format_convergence_csv(runs.front().curve)));
      h.push_back(fnv1a(format_profile_csv(spike_count_profile(runs.front().profiles))));
      h.push_back(fnv1a(format_census_csv(build_census(g, runs.front().profiles))));
      h.push_back(fnv1a(format_run_profile_csv(g, runs.front().profiles.front())));
      return h;
    };
    const auto a = artifacts(), b = artifacts();
    rep.line(a == b, "determinism", fmt("%zu artifacts hashed twice, %s", a.size(), a == b ? "identical" : "differ"),
             t0);
  }

  // ---- residual constraint ladder ----
  {
    const auto t0 = Clock::now();
    // Each seed trains both variants, converts and simulates 5 times.
    const std::size_t seeds = 5;
    double basic = 0.0, jr = 0.0, full = 0.0, full_ann = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      AblationConfig ac;
      ac.net = {data.train.sample_shape(), data.train.num_classes, 16, 3, false};
      ac.train.epochs = 20;
      ac.train.seed = derive_seed(kSeed, 100 + s);
      ac.seed = derive_seed(kSeed, 200 + s);
      ac.levels = {Constraints::basic, Constraints::junction_relu, Constraints::full};
      const auto res = run_ablation(data, ac, [s](const std::string& m) { std::printf("info  seed %zu: %s\n", s, m.c_str()); });
      basic += res.rows[0].mean_error / double(seeds);
      jr += res.rows[1].mean_error / double(seeds);
      full += res.rows[2].mean_error / double(seeds);
      full_ann += res.rows[2].ann_error / double(seeds);
    }
    const double inc = 100.0 * (full - full_ann);
    rep.line(full <= jr && jr <= basic && inc <= 2.5, "resnet_constraint_ladder",
             fmt("mean SNN error over %zu seeds: full %.2f%%, junction-relu %.2f%%, basic %.2f%%; full increment "
                 "%.2f pp (limit 2.5)",
                 seeds, 100.0 * full, 100.0 * jr, 100.0 * basic, inc),
             t0);
  }

  std::printf("%d failed\n", rep.failed);
  return rep.failed ? 1 : 0;
}
