#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "snnconv/errors.hpp"
#include "snnconv/snn.hpp"
#include "test_util.hpp"

using namespace snnconv;
using namespace testutil;

namespace {

std::vector<double> random_thresholds(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.3, 1.5);
  std::vector<double> th(n);
  for (auto& v : th) v = u(rng);
  return th;
}

std::vector<std::size_t> sites_of(const NetworkGraph& g) { return spiking_sites(g, analyze_topology(g)); }

// Steps the engine and the dense reference side by side and compares every
// site's spikes at every step. Returns the number of spikes compared.
std::size_t compare_with_reference(const NetworkGraph& g, const std::vector<double>& th, std::size_t steps,
                                   std::uint64_t seed) {
  SpikingNetwork net(g, th);
  DenseSnn ref(g, sites_of(g), th);
  const Tensor img = random_tensor(g.input_shape, seed);
  EncoderState enc(1.0, seed);
  EventList in;
  std::size_t spikes = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    poisson_events(img.data(), enc, in);
    net.step(in);
    ref.step(dense(in, img.size()));
    for (std::size_t k = 0; k < net.num_sites(); ++k) {
      const auto got = dense(net.site_events(k), ref.last[k].size());
      for (std::size_t n = 0; n < got.size(); ++n) {
        EXPECT_EQ(got[n], double(ref.last[k][n])) << "site " << net.site_id(k) << " neuron " << n << " t " << t;
        spikes += ref.last[k][n];
      }
      EXPECT_EQ(net.state(k).v_mem, ref.v[k]) << net.site_id(k);
    }
  }
  return spikes;
}

NetworkGraph chain3() {
  auto g = make_graph({1, 1, 1}, 1,
                      {linear("l1", "", 1, 1), simple("r1", LayerKind::relu, "l1"), linear("l2", "r1", 1, 1),
                       simple("r2", LayerKind::relu, "l2"), linear("l3", "r2", 1, 1)});
  for (auto& [id, w] : g.weights) w.storage() = {1.0f};
  return g;
}

}  // namespace

TEST(IfLayer, FiresAtThresholdAndResets) {
  IFLayerState s{{0.0}, 1.5};
  const std::vector<double> drive{1.0 + 1.0};
  EXPECT_EQ(if_layer_step(s, drive).values, (std::vector<std::int8_t>{1}));
  EXPECT_EQ(s.v_mem[0], 0.0);

  IFLayerState eq{{0.0}, 1.0};
  EXPECT_EQ(if_layer_step(eq, std::vector<double>{1.0}).values[0], 1);  // >= at equality

  IFLayerState below{{0.0}, 1.0};
  EXPECT_EQ(if_layer_step(below, std::vector<double>{0.25}).values[0], 0);
  EXPECT_EQ(below.v_mem[0], 0.25);
  EXPECT_THROW(if_layer_step(below, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(IfLayer, NegativeWeightNeverSpikes) {
  IFLayerState s{{0.0}, 1.0};
  SplitMix64 rng(3);
  for (int t = 0; t < 10000; ++t) {
    const double x = rng.uniform() < 0.5 ? 1.0 : 0.0;
    ASSERT_EQ(if_layer_step(s, std::vector<double>{-0.8 * x}).values[0], 0);
  }
}

TEST(IfLayer, RateIsInputRateTimesWeightOverThreshold) {
  // w divides v_th, so reset-to-zero loses nothing.
  IFLayerState s{{0.0}, 2.0};
  SplitMix64 rng(11);
  const int steps = 100000;
  int out = 0;
  for (int t = 0; t < steps; ++t) {
    const double x = rng.uniform() < 0.5 ? 1.0 : 0.0;
    out += if_layer_step(s, std::vector<double>{x}).values[0];
  }
  EXPECT_NEAR(double(out) / steps, 0.25, 0.01);
}

TEST(IfLayer, ResetToZeroRateIsInputRateOverCeilRatio) {
  // With reset to zero the residue above threshold is discarded: a neuron
  // needs ceil(v_th / w) input events per spike.
  for (double w : {0.8, 0.6, 0.45}) {
    IFLayerState s{{0.0}, 2.0};
    SplitMix64 rng(5);
    const int steps = 100000;
    const double p = 0.5;
    int out = 0;
    for (int t = 0; t < steps; ++t) out += if_layer_step(s, std::vector<double>{rng.uniform() < p ? w : 0.0}).values[0];
    const double expect = p / std::ceil(2.0 / w);
    EXPECT_NEAR(double(out) / steps, expect, 3 * std::sqrt(expect * (1 - expect) / steps) + 2e-3) << w;
  }
}

TEST(Engine, MatchesDenseReferenceOnCnn) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto g = small_cnn(seed);
    quantize_weights(g);
    const auto th = random_thresholds(sites_of(g).size(), seed);
    EXPECT_GT(compare_with_reference(g, th, 60, seed), 0u);
  }
}

TEST(Engine, MatchesDenseReferenceOnResidualNets) {
  for (bool jr : {false, true}) {
    auto g = small_resnet(jr, 4);
    quantize_weights(g);
    const auto th = random_thresholds(sites_of(g).size(), 9);
    EXPECT_GT(compare_with_reference(g, th, 60, 4), 0u) << jr;
  }
}

TEST(Engine, MatchesDenseReferenceOnRandomChains) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = random_chain(seed);
    quantize_weights(g);
    compare_with_reference(g, random_thresholds(sites_of(g).size(), seed), 30, seed);
  }
}

TEST(Engine, ZeroInputLeavesStateUntouched) {
  auto g = small_cnn(1);
  SpikingNetwork net(g, random_thresholds(sites_of(g).size(), 1));
  for (int t = 0; t < 10; ++t) EXPECT_TRUE(net.step({}).empty());
  for (std::size_t k = 0; k < net.num_sites(); ++k)
    for (double v : net.state(k).v_mem) EXPECT_EQ(v, 0.0);
}

TEST(Engine, SpikesTraverseDepthWithinOneStep) {
  SpikingNetwork net(chain3(), std::vector<double>{1e-3, 1e-3, 1e-3});
  EventList in;
  in.push(0, 1.0);
  for (int t = 1; t <= 5; ++t) {
    const auto& out = net.step(in);
    ASSERT_EQ(out.size(), 1u) << "t " << t;
  }
  EXPECT_EQ(net.profile().output_spike_steps[0], (std::vector<std::uint32_t>{1, 2, 3, 4, 5}));
}

TEST(Engine, IdentityPathAloneFiresJunction) {
  auto g = make_graph({1, 1, 1}, 1,
                      {linear("s", "", 1, 1), simple("sr", LayerKind::relu, "s"), linear("a", "sr", 1, 1),
                       simple("ar", LayerKind::relu, "a"), linear("b", "ar", 1, 1), junction("add", "b", "sr"),
                       linear("fc", "add", 1, 1)});
  g.weights["s"].storage() = {1.0f};
  g.weights["fc"].storage() = {1.0f};
  SpikingNetwork net(g, std::vector<double>{1, 1, 1, 1});
  ASSERT_EQ(net.site_id(2), "add");
  EventList in;
  in.push(0, 1.0);
  net.step(in);
  EXPECT_EQ(net.site_events(1).size(), 0u);  // ar: the weighted path is silent
  EXPECT_EQ(net.site_events(2).size(), 1u);
  EXPECT_EQ(net.output_counts()[0], 1u);
}

TEST(Engine, PassThroughPredictsHotPixel) {
  auto g = make_graph({3, 1, 1}, 3, {linear("o", "", 3, 3)});
  g.weights["o"].storage() = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  g.preprocessing.scale = 1.0;
  for (int j = 0; j < 3; ++j) {
    std::vector<float> px(3, 0.0f);
    px[std::size_t(j)] = 1.0f;
    const auto r = run_inference(g, unity_thresholds(g), Tensor({3, 1, 1}, px), {20, 0, false});
    EXPECT_EQ(r.predicted, j);
    EXPECT_EQ(r.output_counts[std::size_t(j)], 20u);
  }
}

TEST(Engine, DeterministicRunsAndBatchOrder) {
  auto g = small_cnn(2);
  g.preprocessing.scale = 1.0;
  ThresholdSet th{ThresholdMethod::spike_norm, {}, random_thresholds(sites_of(g).size(), 2)};
  for (auto s : sites_of(g)) th.layers.push_back(g.layers[s].id);
  const Tensor imgs = random_tensor({6, 1, 8, 8}, 3);
  SimConfig cfg{80, 17, true};
  const auto a = run_inference(g, th, imgs.slice(2), cfg), b = run_inference(g, th, imgs.slice(2), cfg);
  EXPECT_EQ(a.profile, b.profile);
  EXPECT_EQ(a.predicted, b.predicted);

  const auto batch1 = simulate_batch(g, th, imgs, cfg, 1);
  const auto batch3 = simulate_batch(g, th, imgs, cfg, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    SimConfig single = cfg;
    single.seed = derive_seed(cfg.seed, i);
    const auto r = run_inference(g, th, imgs.slice(i), single);
    EXPECT_EQ(batch1[i].profile, r.profile);
    EXPECT_EQ(batch3[i].profile, r.profile);
  }
}

TEST(Engine, ConservationAndReset) {
  auto g = small_cnn(6);
  quantize_weights(g);
  const auto th = random_thresholds(sites_of(g).size(), 6);
  SpikingNetwork net(g, th);
  DenseSnn ref(g, sites_of(g), th);
  const Tensor img = random_tensor(g.input_shape, 6);
  EncoderState enc(1.0, 6);
  EventList in;
  for (int t = 0; t < 40; ++t) {
    std::vector<std::vector<double>> before;
    for (std::size_t k = 0; k < net.num_sites(); ++k) before.push_back(net.state(k).v_mem);
    poisson_events(img.data(), enc, in);
    net.step(in);
    ref.step(dense(in, img.size()));
    for (std::size_t k = 0; k < net.num_sites(); ++k) {
      const auto fired = dense(net.site_events(k), before[k].size());
      for (std::size_t n = 0; n < before[k].size(); ++n) {
        if (fired[n] != 0.0) {
          EXPECT_EQ(net.state(k).v_mem[n], 0.0);
        } else {
          EXPECT_EQ(net.state(k).v_mem[n] - before[k][n], ref.drive[k][n]);
        }
      }
    }
  }
}

TEST(Engine, ScalingWeightsAndThresholdTogetherKeepsRaster) {
  auto g = small_cnn(7);
  quantize_weights(g);
  const auto th = random_thresholds(sites_of(g).size(), 7);
  auto scaled = g;
  for (float& w : scaled.weights["c3"].storage()) w *= 3.0f;
  auto th2 = th;
  // c3 drives site r3 (index 2).
  ASSERT_EQ(scaled.layers[sites_of(g)[2]].id, "r3");
  th2[2] *= 3.0;
  SpikingNetwork a(g, th), b(scaled, th2);
  const Tensor img = random_tensor(g.input_shape, 7);
  EncoderState ea(1.0, 1), eb(1.0, 1);
  EventList ia, ib;
  std::size_t spikes = 0;
  for (int t = 0; t < 200; ++t) {
    poisson_events(img.data(), ea, ia);
    poisson_events(img.data(), eb, ib);
    a.step(ia);
    b.step(ib);
    for (std::size_t k = 0; k < a.num_sites(); ++k) {
      ASSERT_EQ(a.site_events(k).index, b.site_events(k).index);
      spikes += a.site_events(k).size();
    }
  }
  EXPECT_GT(spikes, 0u);
}

TEST(Engine, CountsAreMonotoneInTime) {
  auto g = small_cnn(8);
  g.preprocessing.scale = 1.0;
  const auto r = run_inference(g, unity_thresholds(g),
                               random_tensor(g.input_shape, 8), {100, 3, false});
  std::vector<std::uint32_t> prev(4, 0);
  for (std::size_t t = 0; t <= 100; ++t) {
    const auto c = r.profile.output_counts_at(t);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_GE(c[i], prev[i]);
    prev = c;
  }
  EXPECT_EQ(prev, r.output_counts);
}

TEST(Engine, ErrorsForBadConfiguration) {
  auto g = small_cnn(1);
  g.preprocessing.scale = 1.0;
  EXPECT_THROW(run_inference(g, unity_thresholds(g), random_tensor(g.input_shape, 1), {0, 0, false}), ArgumentError);
  auto th = sites_of(g);
  std::vector<double> values(th.size(), 1.0);
  values[3] = std::numeric_limits<double>::quiet_NaN();
  SpikingNetwork net(g, values);
  EventList in;
  in.push(0, 1.0);
  EXPECT_THROW(net.step(in), ConversionIncompleteError);
  ThresholdSet partial = unity_thresholds(g);
  partial.layers.pop_back();
  partial.values.pop_back();
  EXPECT_THROW(SpikingNetwork(g, partial), ConversionIncompleteError);
  EXPECT_THROW(SpikingNetwork(g, std::vector<double>{1.0}), ArgumentError);
}

TEST(Engine, PredictionTiesGoToLowestIndex) {
  EXPECT_EQ(predict_from_counts(std::vector<std::uint32_t>{0, 0, 0}), 0);
  EXPECT_EQ(predict_from_counts(std::vector<std::uint32_t>{1, 3, 3}), 1);
}

TEST(Engine, ForwardStepOverSpikeMaps) {
  auto g = make_graph({2, 1, 1}, 2, {linear("o", "", 2, 2)});
  g.weights["o"].storage() = {1, 0, 0, -1};
  SpikingNetwork net(g, std::vector<double>{1});
  const SpikeMap out = snn_forward_step(net, SpikeMap{{2}, {1, -1}});
  EXPECT_EQ(out.values, (std::vector<std::int8_t>{1, 1}));
  EXPECT_THROW(snn_forward_step(net, SpikeMap{{3}, {0, 0, 0}}), ShapeError);
}
