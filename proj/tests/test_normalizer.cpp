#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "snnconv/ann.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/normalizer.hpp"
#include "snnconv/resnet.hpp"
#include "snnconv/snn.hpp"
#include "test_util.hpp"

using namespace snnconv;
using namespace testutil;

namespace {

NetworkGraph two_input_neuron() {
  auto g = make_graph({2, 1, 1}, 1, {linear("n", "", 2, 1), simple("nr", LayerKind::relu, "n")});
  g.weights["n"] = Tensor({1, 2}, {1, 1});
  g.preprocessing.scale = 1.0;
  return g;
}

std::vector<std::size_t> sites_of(const NetworkGraph& g) { return spiking_sites(g, analyze_topology(g)); }

Tensor batch_of(const Shape& shape, std::size_t n, std::uint64_t seed) {
  Shape s{n};
  s.insert(s.end(), shape.begin(), shape.end());
  return random_tensor(s, seed);
}

// Independent replay of the balancing loop on the dense reference: for each
// site in order, simulate every sample with the earlier sites fixed and take
// the largest weighted input seen.
std::vector<double> replay_spike_norm(const NetworkGraph& g, const Tensor& samples, std::size_t steps,
                                      std::uint64_t seed) {
  const auto sites = sites_of(g);
  const std::size_t per = shape_numel(g.input_shape);
  std::vector<double> th(sites.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    double best = 0.0;
    for (std::size_t i = 0; i < samples.dim(0); ++i) {
      DenseSnn ref(g, sites, th);
      EncoderState enc(g.preprocessing.scale, derive_seed(seed, i));
      EventList ev;
      for (std::size_t t = 0; t < steps; ++t) {
        poisson_events(samples.data().subspan(i * per, per), enc, ev);
        ref.step(dense(ev, per));
        for (double d : ref.drive[k]) best = std::max(best, d);
      }
    }
    th[k] = best;
  }
  return th;
}

std::size_t raster_mismatches(const NetworkGraph& a, const std::vector<double>& ta, const NetworkGraph& b,
                              const std::vector<double>& tb, const Tensor& img, std::size_t steps, std::uint64_t seed,
                              std::size_t* events = nullptr) {
  SpikingNetwork na(a, ta), nb(b, tb);
  EncoderState ea(a.preprocessing.scale, seed), eb(b.preprocessing.scale, seed);
  EventList ia, ib;
  std::size_t bad = 0, total = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    poisson_events(img.data(), ea, ia);
    poisson_events(img.data(), eb, ib);
    na.step(ia);
    nb.step(ib);
    for (std::size_t k = 0; k < na.num_sites(); ++k) {
      const auto& x = na.site_events(k).index;
      const auto& y = nb.site_events(k).index;
      total += x.size();
      if (x != y) ++bad;
    }
  }
  if (events) *events = total;
  return bad;
}

}  // namespace

TEST(AnnBased, MotivatingNeuron) {
  const auto g = two_input_neuron();
  const auto th = ann_based_thresholds(g, Tensor({1, 2, 1, 1}, {0.5f, 1.0f}));
  ASSERT_EQ(th.values.size(), 1u);
  EXPECT_EQ(th.values[0], 1.5);
  EXPECT_EQ(th.method, ThresholdMethod::ann_based);
  EXPECT_EQ(th.layers, (std::vector<std::string>{"nr"}));
}

TEST(AnnBased, PassThroughNeuron) {
  auto g = make_graph({1, 1, 1}, 1, {linear("n", "", 1, 1), simple("nr", LayerKind::relu, "n")});
  g.weights["n"].storage() = {1.0f};
  g.preprocessing.scale = 1.0;
  EXPECT_EQ(ann_based_thresholds(g, Tensor({3, 1, 1, 1}, {0.2f, 1.0f, -0.5f})).values[0], 1.0);
}

TEST(AnnBased, MaximaEqualBruteForceOverSamples) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_chain(seed);
    const Tensor samples = batch_of(g.input_shape, 12, seed + 100);
    const auto maxima = ann_activation_maxima(g, samples);
    const auto sites = sites_of(g);
    ASSERT_EQ(maxima.size(), sites.size());
    std::vector<double> brute(sites.size(), 0.0), naive(sites.size(), 0.0);
    for (std::size_t i = 0; i < samples.dim(0); ++i) {
      const Tensor one = samples.slice(i);
      const auto r = ann_forward(g, one, true);
      for (std::size_t k = 0; k < sites.size(); ++k)
        for (float v : r.trace->outputs[sites[k]].data()) brute[k] = std::max(brute[k], double(v));
      const std::vector<double> x(one.data().begin(), one.data().end());
      walk_dense(g, x, [&](std::size_t layer, std::vector<double>& val, const std::vector<double>&) {
        for (std::size_t k = 0; k < sites.size(); ++k)
          if (sites[k] == layer)
            for (double v : val) naive[k] = std::max(naive[k], v);
      });
    }
    for (std::size_t k = 0; k < sites.size(); ++k) {
      EXPECT_EQ(maxima[k], brute[k]) << seed << " site " << k;
      EXPECT_NEAR(maxima[k], naive[k], 1e-5 * std::max(1.0, naive[k]));
    }
  }
}

TEST(AnnBased, ThresholdsAreRatiosOfConsecutiveMaxima) {
  auto g = small_cnn(3);
  g.preprocessing.scale = 1.25;
  const Tensor samples = batch_of(g.input_shape, 16, 4);
  const auto maxima = ann_activation_maxima(g, samples);
  const auto th = ann_based_thresholds(g, samples);
  ASSERT_EQ(th.size(), maxima.size());
  EXPECT_DOUBLE_EQ(th.values[0], maxima[0] / 1.25);
  for (std::size_t k = 1; k < th.size(); ++k) EXPECT_DOUBLE_EQ(th.values[k], maxima[k] / maxima[k - 1]);
}

TEST(AnnBased, ResidualJunctionUsesWeightedBranch) {
  auto g = small_resnet(false, 2);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 8, 5);
  const auto maxima = ann_activation_maxima(g, samples);
  const auto th = ann_based_thresholds(g, samples);
  // sites: s1r, ar, add, fc; add's weighted branch comes from ar.
  ASSERT_EQ(th.layers, (std::vector<std::string>{"s1r", "ar", "add", "fc"}));
  EXPECT_DOUBLE_EQ(th.values[2], maxima[2] / maxima[1]);
  EXPECT_DOUBLE_EQ(th.values[3], maxima[3] / maxima[2]);
}

TEST(SpikeNorm, MotivatingNeuronReachesTwo) {
  const auto g = two_input_neuron();
  NormalizeConfig c;
  c.timesteps = 1000;
  c.seed = 3;
  const auto th = spike_norm(g, Tensor({1, 2, 1, 1}, {0.5f, 1.0f}), c);
  EXPECT_EQ(th.values[0], 2.0);
  EXPECT_GT(th.values[0], ann_based_thresholds(g, Tensor({1, 2, 1, 1}, {0.5f, 1.0f})).values[0]);
}

TEST(SpikeNorm, AlwaysSpikingInputGivesWeight) {
  auto g = make_graph({1, 1, 1}, 1, {linear("n", "", 1, 1), simple("nr", LayerKind::relu, "n")});
  g.weights["n"].storage() = {0.7f};
  g.preprocessing.scale = 1.0;
  NormalizeConfig c;
  c.timesteps = 10;
  EXPECT_EQ(spike_norm(g, Tensor({1, 1, 1, 1}, {1.0f}), c).values[0], double(0.7f));
}

TEST(SpikeNorm, MatchesExhaustiveReplay) {
  auto g = make_graph({1, 5, 5}, 3,
                      {conv("c", "", 1, 3, 3, 1, 1), simple("cr", LayerKind::relu, "c"), pool("p", "cr"),
                       linear("f", "p", 12, 3)});
  randomize_weights(g, 4, 0.6);
  quantize_weights(g);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 4, 8);
  NormalizeConfig c;
  c.timesteps = 50;
  c.seed = 21;
  const auto th = spike_norm(g, samples, c);
  EXPECT_EQ(th.values, replay_spike_norm(g, samples, 50, 21));
}

TEST(SpikeNorm, MatchesReplayOnResidualNet) {
  auto g = small_resnet(true, 6);
  quantize_weights(g);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 3, 9);
  NormalizeConfig c;
  c.timesteps = 40;
  c.seed = 2;
  EXPECT_EQ(spike_norm(g, samples, c).values, replay_spike_norm(g, samples, 40, 2));
}

TEST(SpikeNorm, LaterLayersCannotChangeEarlierThresholds) {
  auto g = small_cnn(5);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 6, 10);
  NormalizeConfig c;
  c.timesteps = 60;
  const auto base = spike_norm(g, samples, c);
  auto perturbed = g;
  for (float& w : perturbed.weights["f1"].storage()) w *= -1.7f;
  const auto th = spike_norm(perturbed, samples, c);
  // f1 drives r4 (site 3): sites 0..2 must agree.
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(th.values[k], base.values[k]);
  EXPECT_NE(th.values[3], base.values[3]);
}

TEST(SpikeNorm, DeterministicAndSeedSensitive) {
  auto g = small_cnn(6);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 5, 11);
  NormalizeConfig c;
  c.timesteps = 80;
  c.seed = 5;
  const auto a = spike_norm(g, samples, c), b = spike_norm(g, samples, c);
  EXPECT_EQ(a, b);
  c.seed = 6;
  EXPECT_NE(spike_norm(g, samples, c).values, a.values);
}

TEST(SpikeNorm, FixedSitesAreKept) {
  auto g = small_cnn(6);
  g.preprocessing.scale = 1.0;
  const Tensor samples = batch_of(g.input_shape, 4, 11);
  NormalizeConfig c;
  c.timesteps = 30;
  ThresholdSet fixed;
  fixed.layers = {"r2"};
  fixed.values = {0.625};
  c.fixed = fixed;
  const auto th = spike_norm(g, samples, c);
  EXPECT_EQ(*th.find("r2"), 0.625);
  EXPECT_EQ(th.size(), sites_of(g).size());
}

TEST(Degenerate, FloorOrError) {
  auto g = make_graph({2, 1, 1}, 1, {linear("n", "", 2, 1), simple("nr", LayerKind::relu, "n")});
  g.weights["n"] = Tensor({1, 2}, {-1, -1});
  g.preprocessing.scale = 1.0;
  const Tensor samples({1, 2, 1, 1}, {0.5f, 1.0f});
  std::vector<std::string> warnings;
  NormalizeConfig c;
  c.timesteps = 20;
  c.on_warning = [&](const std::string& m) { warnings.push_back(m); };
  EXPECT_EQ(spike_norm(g, samples, c).values[0], 1e-3);
  EXPECT_EQ(ann_based_thresholds(g, samples, c).values[0], 1e-3);
  EXPECT_EQ(warnings.size(), 2u);
  c.enable_floor = false;
  try {
    spike_norm(g, samples, c);
    FAIL() << "expected DegenerateLayerError";
  } catch (const DegenerateLayerError& e) {
    EXPECT_EQ(e.layer(), "nr");
  }
  EXPECT_THROW(ann_based_thresholds(g, samples, c), DegenerateLayerError);
}

TEST(SpikeNorm, RejectsBadArguments) {
  const auto g = two_input_neuron();
  NormalizeConfig c;
  c.timesteps = 0;
  EXPECT_THROW(spike_norm(g, Tensor({1, 2, 1, 1}, {0.5f, 1.0f}), c), ArgumentError);
  EXPECT_THROW(ann_based_thresholds(g, Tensor({1, 3, 1, 1}, {0.5f, 1.0f, 0.0f})), ShapeError);
}

TEST(WeightNormalized, UnityThresholdsLeaveGraphUnchanged) {
  const auto g = small_cnn(2);
  const auto [out, th] = to_weight_normalized(g, unity_thresholds(g));
  EXPECT_EQ(out, g);
  EXPECT_EQ(th, unity_thresholds(g));
}

TEST(WeightNormalized, SingleLayerArithmetic) {
  auto g = two_input_neuron();
  ThresholdSet th{ThresholdMethod::spike_norm, {"nr"}, {2.0}};
  const auto [out, unity] = to_weight_normalized(g, th);
  EXPECT_EQ(out.weight("n").storage(), (std::vector<float>{0.5f, 0.5f}));
  EXPECT_EQ(unity.values, (std::vector<double>{1.0}));
  EXPECT_EQ(unity.method, ThresholdMethod::unity);
  th.values = {0.0};
  EXPECT_THROW(to_weight_normalized(g, th), ArgumentError);
}

TEST(WeightNormalized, RasterMatchesBalancedNetwork) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto g = small_cnn(seed);
    g.preprocessing.scale = 1.0;
    NormalizeConfig c;
    c.timesteps = 100;
    c.seed = seed;
    const Tensor samples = batch_of(g.input_shape, 4, seed);
    const auto th = spike_norm(g, samples, c);
    const auto [norm, unity] = to_weight_normalized(g, th);
    std::size_t events = 0;
    EXPECT_EQ(raster_mismatches(g, th.aligned(g), norm, unity.aligned(norm), samples.slice(0), 200, seed, &events), 0u);
    EXPECT_GT(events, 0u);
  }
}

TEST(WeightNormalized, ResidualPolicyThresholdsFold) {
  auto g = small_resnet(true, 3);
  g.preprocessing.scale = 1.0;
  ThresholdSet stem{ThresholdMethod::spike_norm, {"s1r"}, {1.0}};
  const auto th = apply_residual_threshold_policy(g, stem);
  const auto [norm, unity] = to_weight_normalized(g, th);
  EXPECT_EQ(norm, g);

  // The junction relu is fed through the identity path: nothing to rescale.
  ThresholdSet bad = th;
  for (std::size_t k = 0; k < bad.size(); ++k)
    if (bad.layers[k] == "add_relu") bad.values[k] = 2.0;
  EXPECT_THROW(to_weight_normalized(g, bad), ConstraintError);
}
