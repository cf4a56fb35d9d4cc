#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snnconv/rng.hpp"
#include "snnconv/tensor.hpp"

namespace snnconv {

// Dense per-timestep event map: -1/0/+1 at the input, 0/+1 elsewhere.
struct SpikeMap {
  Shape shape;
  std::vector<std::int8_t> values;

  std::size_t count() const;
  friend bool operator==(const SpikeMap&, const SpikeMap&) = default;
};

// Sparse events for one timestep: flat neuron index and signed value.
struct EventList {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  void clear() {
    index.clear();
    value.clear();
  }
  void push(std::uint32_t i, double v) {
    index.push_back(i);
    value.push_back(v);
  }
  std::size_t size() const noexcept { return index.size(); }
  bool empty() const noexcept { return index.empty(); }
};

SpikeMap to_spike_map(const EventList& events, const Shape& shape);
EventList to_events(const SpikeMap& map);

class EncoderState {
 public:
  // Throws ConfigError unless scale > 0.
  EncoderState(double scale, std::uint64_t seed);

  double scale() const noexcept { return scale_; }
  SplitMix64& rng() noexcept { return rng_; }

 private:
  double scale_;
  SplitMix64 rng_;
};

// One Poisson draw per pixel in row-major order: with u ~ U[0,1), the pixel
// emits sign(x) when u < |x| / scale (probability clipped to 1).
SpikeMap poisson_step(const Tensor& image, EncoderState& state);
void poisson_events(std::span<const float> image, EncoderState& state, EventList& out);

}  // namespace snnconv
