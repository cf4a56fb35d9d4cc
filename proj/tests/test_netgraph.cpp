#include <gtest/gtest.h>

#include "snnconv/errors.hpp"
#include "snnconv/netgraph.hpp"
#include "test_util.hpp"

using namespace snnconv;
using namespace testutil;

namespace {

NetworkGraph conv_relu_pool_linear() {
  return make_graph({1, 4, 4}, 3,
                    {conv("c", "", 1, 2, 3, 1, 1), simple("r", LayerKind::relu, "c"), pool("p", "r"),
                     linear("fc", "p", 8, 3)});
}

std::size_t count_rule(const ValidationReport& r, const std::string& rule) {
  std::size_t n = 0;
  for (const auto& v : r.violations) n += v.rule == rule;
  return n;
}

}  // namespace

TEST(Validate, CompliantGraphHasNoViolations) {
  EXPECT_TRUE(validate_convertibility(conv_relu_pool_linear()).ok());
}

TEST(Validate, MaxPoolNamedOnce) {
  auto g = conv_relu_pool_linear();
  g.layers[2].kind = LayerKind::maxpool2d;
  const auto r = validate_convertibility(g);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].layer, "p");
  EXPECT_EQ(r.violations[0].rule, "pooling");
}

TEST(Validate, BiasAndBatchNormFlagged) {
  auto g = conv_relu_pool_linear();
  g.layers[0].has_bias = true;
  LayerSpec bn = simple("bn", LayerKind::batchnorm, "c");
  g.layers.insert(g.layers.begin() + 1, bn);
  g.layers[2].inputs = {"bn"};
  const auto r = validate_convertibility(g);
  EXPECT_EQ(count_rule(r, "bias"), 1u);
  EXPECT_EQ(count_rule(r, "batchnorm"), 1u);
}

TEST(Validate, ConvWithoutReluFlagged) {
  auto g = make_graph({1, 4, 4}, 2, {conv("c", "", 1, 2, 3), conv("c2", "c", 2, 2, 2)});
  const auto r = validate_convertibility(g);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].layer, "c");
  EXPECT_EQ(r.violations[0].rule, "activation");
}

TEST(Validate, JunctionReluOnlyInStrictMode) {
  const auto g = small_resnet(false, 1);
  EXPECT_TRUE(validate_convertibility(g).ok());
  const auto r = validate_convertibility(g, {true});
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].layer, "add");
  EXPECT_EQ(r.violations[0].rule, "junction-relu");
  EXPECT_TRUE(validate_convertibility(small_resnet(true, 1), {true}).ok());
}

TEST(Validate, DropoutProbabilityRange) {
  auto g = conv_relu_pool_linear();
  LayerSpec d = simple("d", LayerKind::dropout, "r");
  d.dropout_p = 1.0;
  g.layers.insert(g.layers.begin() + 2, d);
  g.layers[3].inputs = {"d"};
  EXPECT_EQ(count_rule(validate_convertibility(g), "dropout"), 1u);
  EXPECT_THROW(require_convertible(g), ConstraintError);
}

TEST(Validate, PassingGraphsContainNoForbiddenKinds) {
  // Exhaustive scan over every single-layer mutation of a compliant graph.
  const auto base = conv_relu_pool_linear();
  for (std::size_t i = 0; i < base.layers.size(); ++i) {
    for (auto kind : {LayerKind::maxpool2d, LayerKind::batchnorm}) {
      auto g = base;
      g.layers[i].kind = kind;
      bool ok = false;
      try {
        ok = validate_convertibility(g).ok();
      } catch (const StructuralError&) {
        continue;
      }
      EXPECT_FALSE(ok) << "layer " << i;
    }
    auto g = base;
    g.layers[i].has_bias = true;
    EXPECT_FALSE(validate_convertibility(g).ok());
  }
}

TEST(Topology, StructuralErrorsAreDistinct) {
  auto dangling = conv_relu_pool_linear();
  dangling.layers[1].inputs = {"nope"};
  EXPECT_THROW(analyze_topology(dangling), StructuralError);

  auto forward_ref = conv_relu_pool_linear();
  forward_ref.layers[0].inputs = {"r"};
  EXPECT_THROW(analyze_topology(forward_ref), StructuralError);

  auto bad_weights = conv_relu_pool_linear();
  bad_weights.weights["c"] = Tensor({2, 1, 2, 2});
  EXPECT_THROW(analyze_topology(bad_weights), StructuralError);

  auto shape = conv_relu_pool_linear();
  shape.layers[3].channels_in = 7;
  shape.weights["fc"] = Tensor({3, 7});
  EXPECT_THROW(analyze_topology(shape), Error);

  auto two_outputs = conv_relu_pool_linear();
  two_outputs.layers.push_back(linear("extra", "p", 8, 3));
  two_outputs.weights["extra"] = Tensor({3, 8});
  EXPECT_THROW(analyze_topology(two_outputs), StructuralError);
}

TEST(Topology, ShapesInferred) {
  const auto g = conv_relu_pool_linear();
  const auto t = analyze_topology(g);
  EXPECT_EQ(t.output_shapes[0], (Shape{2, 4, 4}));
  EXPECT_EQ(t.output_shapes[2], (Shape{2, 2, 2}));
  EXPECT_EQ(t.output_shapes[3], (Shape{3}));
  EXPECT_EQ(t.output, 3u);
}

TEST(SpikingSites, ReluJunctionAndOutput) {
  const auto g = small_resnet(false, 1);
  const auto t = analyze_topology(g);
  std::vector<std::string> ids;
  for (auto s : spiking_sites(g, t)) ids.push_back(g.layers[s].id);
  EXPECT_EQ(ids, (std::vector<std::string>{"s1r", "ar", "add", "fc"}));

  const auto g2 = small_resnet(true, 1);
  ids.clear();
  for (auto s : spiking_sites(g2, analyze_topology(g2))) ids.push_back(g2.layers[s].id);
  EXPECT_EQ(ids, (std::vector<std::string>{"s1r", "ar", "add_relu", "fc"}));
}
