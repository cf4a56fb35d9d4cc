#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snnconv/netgraph.hpp"

namespace snnconv {

// .sfm layout: uint64 little-endian manifest length, UTF-8 JSON manifest,
// then the weight blob (float32 little-endian, row-major, concatenated in
// manifest layer order, followed by the preprocessing mean if present).
inline constexpr int kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const NetworkGraph& graph);
NetworkGraph deserialize_model(const std::vector<std::uint8_t>& bytes);

// save_model refuses graphs that fail validate_convertibility.
void save_model(const NetworkGraph& graph, const std::filesystem::path& path);
NetworkGraph load_model(const std::filesystem::path& path);

// Raw float32 LE helpers shared with the dataset container.
void append_f32_le(std::vector<std::uint8_t>& out, std::span<const float> values);
std::vector<float> read_f32_le(const std::uint8_t* bytes, std::size_t count);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace snnconv
