#include "snnconv/encoder.hpp"

#include <cmath>

#include "snnconv/errors.hpp"

namespace snnconv {

std::size_t SpikeMap::count() const {
  std::size_t n = 0;
  for (auto v : values) n += v != 0;
  return n;
}

SpikeMap to_spike_map(const EventList& events, const Shape& shape) {
  SpikeMap map{shape, std::vector<std::int8_t>(shape_numel(shape), 0)};
  for (std::size_t k = 0; k < events.size(); ++k) {
    map.values.at(events.index[k]) = static_cast<std::int8_t>(events.value[k] > 0 ? 1 : -1);
  }
  return map;
}

EventList to_events(const SpikeMap& map) {
  EventList ev;
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    if (map.values[i] != 0) ev.push(static_cast<std::uint32_t>(i), map.values[i]);
  }
  return ev;
}

EncoderState::EncoderState(double scale, std::uint64_t seed) : scale_(scale), rng_(seed) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("encoder scale must be positive and finite");
}

void poisson_events(std::span<const float> image, EncoderState& state, EventList& out) {
  out.clear();
  const double inv = 1.0 / state.scale();
  auto& rng = state.rng();
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double u = rng.uniform();
    const double x = image[i];
    if (u < std::fabs(x) * inv) out.push(static_cast<std::uint32_t>(i), x > 0 ? 1.0 : -1.0);
  }
}

SpikeMap poisson_step(const Tensor& image, EncoderState& state) {
  EventList ev;
  poisson_events(image.data(), state, ev);
  return to_spike_map(ev, image.shape());
}

}  // namespace snnconv
