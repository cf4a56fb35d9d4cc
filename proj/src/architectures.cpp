#include "snnconv/architectures.hpp"

#include "snnconv/errors.hpp"

namespace snnconv {
namespace {

class Builder {
 public:
  explicit Builder(NetworkGraph& g) : g_(g) {}

  std::string conv(const std::string& id, const std::string& in, int cin, int cout) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::conv2d;
    l.kernel = 3;
    l.padding = 1;
    l.channels_in = cin;
    l.channels_out = cout;
    return add(std::move(l), in);
  }
  std::string linear(const std::string& id, const std::string& in, int cin, int cout) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::linear;
    l.channels_in = cin;
    l.channels_out = cout;
    return add(std::move(l), in);
  }
  std::string relu(const std::string& id, const std::string& in) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::relu;
    return add(std::move(l), in);
  }
  std::string pool(const std::string& id, const std::string& in) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::avgpool2d;
    l.kernel = 2;
    l.stride = 2;
    return add(std::move(l), in);
  }
  std::string junction(const std::string& id, const std::string& a, const std::string& b) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::add_junction;
    l.inputs = {a, b};
    g_.layers.push_back(std::move(l));
    return id;
  }

 private:
  std::string add(LayerSpec l, const std::string& in) {
    if (!in.empty()) l.inputs = {in};
    if (l.kind == LayerKind::conv2d) {
      g_.weights[l.id] = Tensor({static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in),
                                 static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)});
    } else if (l.kind == LayerKind::linear) {
      g_.weights[l.id] = Tensor({static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in)});
    }
    const std::string id = l.id;
    g_.layers.push_back(std::move(l));
    return id;
  }
  NetworkGraph& g_;
};

void check_input(const Shape& s) {
  if (s.size() != 3 || s[1] % 4 != 0 || s[2] % 4 != 0 || s[1] == 0 || s[2] == 0) {
    throw ConfigError("input must be CHW with height and width divisible by 4");
  }
}

}  // namespace

NetworkGraph build_cnn(const CnnConfig& c) {
  check_input(c.input_shape);
  NetworkGraph g;
  g.input_shape = c.input_shape;
  g.num_classes = c.num_classes;
  Builder b(g);
  const int in_c = static_cast<int>(c.input_shape[0]);
  auto x = b.relu("relu1", b.conv("conv1", "", in_c, c.conv1));
  x = b.pool("pool1", b.relu("relu2", b.conv("conv2", x, c.conv1, c.conv1)));
  x = b.relu("relu3", b.conv("conv3", x, c.conv1, c.conv2));
  x = b.pool("pool2", b.relu("relu4", b.conv("conv4", x, c.conv2, c.conv2)));
  const int flat = c.conv2 * static_cast<int>(c.input_shape[1] / 4 * c.input_shape[2] / 4);
  x = b.relu("relu5", b.linear("fc1", x, flat, c.hidden));
  b.linear("fc2", x, c.hidden, c.num_classes);
  analyze_topology(g);
  return g;
}

NetworkGraph build_resnet(const ResNetConfig& c) {
  check_input(c.input_shape);
  if (c.blocks < 0) throw ConfigError("block count must be non-negative");
  NetworkGraph g;
  g.input_shape = c.input_shape;
  g.num_classes = c.num_classes;
  Builder b(g);
  const int in_c = static_cast<int>(c.input_shape[0]);
  auto x = b.relu("stem1_relu", b.conv("stem1", "", in_c, c.width));
  x = b.relu("stem2_relu", b.conv("stem2", x, c.width, c.width));
  for (int k = 1; k <= c.blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    auto y = b.relu(p + "_relu_a", b.conv(p + "_conv_a", x, c.width, c.width));
    y = b.conv(p + "_conv_b", y, c.width, c.width);
    x = b.junction(p + "_add", y, x);
    if (c.junction_relus) x = b.relu(p + "_add_relu", x);
  }
  x = b.pool("pool", x);
  const int flat = c.width * static_cast<int>(c.input_shape[1] / 2 * c.input_shape[2] / 2);
  b.linear("fc", x, flat, c.num_classes);
  analyze_topology(g);
  return g;
}

}  // namespace snnconv
