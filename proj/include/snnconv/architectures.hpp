#pragma once

#include <cstddef>

#include "snnconv/netgraph.hpp"

namespace snnconv {

// conv3x3 -> relu -> conv3x3 -> relu -> avgpool2, twice, then
// linear -> relu -> linear. All convs keep the spatial size (padding 1).
// Weights are zero; see init_weights().
struct CnnConfig {
  Shape input_shape{1, 8, 8};
  int num_classes = 10;
  int conv1 = 16;
  int conv2 = 32;
  int hidden = 64;
};
NetworkGraph build_cnn(const CnnConfig& config);

// Two stem convs followed by `blocks` identity-shortcut blocks of two convs
// each at constant width, a 2x2 average pool and a linear classifier.
struct ResNetConfig {
  Shape input_shape{1, 8, 8};
  int num_classes = 10;
  int width = 16;
  int blocks = 3;
  bool junction_relus = false;
};
NetworkGraph build_resnet(const ResNetConfig& config);

}  // namespace snnconv
