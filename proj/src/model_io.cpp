#include "snnconv/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "snnconv/errors.hpp"

namespace snnconv {

using nlohmann::json;

void append_f32_le(std::vector<std::uint8_t>& out, std::span<const float> values) {
  const std::size_t base = out.size();
  out.resize(base + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[base + 4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
}

std::vector<float> read_f32_le(const std::uint8_t* bytes, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<std::uint8_t> serialize_model(const NetworkGraph& graph) {
  analyze_topology(graph);

  std::vector<std::uint8_t> blob;
  json layers = json::array();
  for (const auto& l : graph.layers) {
    json params = json::object();
    switch (l.kind) {
      case LayerKind::conv2d:
        params = {{"kernel", l.kernel},           {"stride", l.stride},
                  {"padding", l.padding},         {"channels_in", l.channels_in},
                  {"channels_out", l.channels_out}};
        break;
      case LayerKind::linear:
        params = {{"channels_in", l.channels_in}, {"channels_out", l.channels_out}};
        break;
      case LayerKind::avgpool2d:
      case LayerKind::maxpool2d:
        params = {{"kernel", l.kernel}, {"stride", l.stride}};
        break;
      case LayerKind::dropout:
        params = {{"p", l.dropout_p}, {"inference_active", false}};
        break;
      default:
        break;
    }
    json entry = {{"id", l.id}, {"kind", std::string(to_string(l.kind))}, {"params", params}, {"inputs", l.inputs}};
    if (l.needs_training) entry["needs_training"] = true;
    if (is_synaptic(l.kind)) {
      const Tensor& w = graph.weight(l.id);
      entry["weight_offset"] = blob.size();
      entry["weight_length"] = w.size() * 4;
      append_f32_le(blob, w.data());
    }
    layers.push_back(std::move(entry));
  }

  json pre = {{"scale", graph.preprocessing.scale}};
  if (!graph.preprocessing.mean.empty()) {
    pre["mean_shape"] = graph.preprocessing.mean.shape();
    pre["mean_offset"] = blob.size();
    pre["mean_length"] = graph.preprocessing.mean.size() * 4;
    append_f32_le(blob, graph.preprocessing.mean.data());
  }

  json manifest = {{"format_version", kModelFormatVersion},
                   {"input_shape", graph.input_shape},
                   {"num_classes", graph.num_classes},
                   {"layers", std::move(layers)},
                   {"preprocessing", std::move(pre)},
                   {"metadata", graph.metadata}};
  const std::string text = manifest.dump(1);

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + blob.size());
  const std::uint64_t len = text.size();
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(len >> (8 * b)));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

namespace {

int get_int(const json& obj, const char* key, int fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) throw ParseError(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

struct BlobRef {
  std::size_t offset = 0;
  std::size_t length = 0;
};

}  // namespace

NetworkGraph deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw ParseError("file too short for manifest length prefix");
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) len |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  if (len > bytes.size() - 8) throw ParseError("manifest length exceeds file size");

  json manifest;
  try {
    manifest = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len));
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::uint8_t* blob = bytes.data() + 8 + len;
  const std::size_t blob_size = bytes.size() - 8 - len;

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw VersionMismatchError("unsupported format_version " + std::to_string(version) + " (expected " +
                                 std::to_string(kModelFormatVersion) + ")");
    }

    NetworkGraph g;
    g.input_shape = manifest.at("input_shape").get<Shape>();
    g.num_classes = manifest.value("num_classes", 0);
    if (manifest.contains("metadata")) g.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();

    std::vector<std::pair<std::string, BlobRef>> refs;
    std::size_t expected_end = 0;
    for (const auto& entry : manifest.at("layers")) {
      LayerSpec l;
      l.id = entry.at("id").get<std::string>();
      const auto kind_name = entry.at("kind").get<std::string>();
      auto kind = parse_layer_kind(kind_name);
      if (!kind) throw ParseError("layer '" + l.id + "' has unknown kind '" + kind_name + "'");
      l.kind = *kind;
      if (entry.contains("bias_offset") || entry.contains("bias_length") || entry.contains("bias")) {
        throw ConstraintError("layer '" + l.id + "' declares a bias array; convertible networks are bias-free");
      }
      const json params = entry.value("params", json::object());
      l.kernel = get_int(params, "kernel", 0);
      l.stride = get_int(params, "stride", 1);
      l.padding = get_int(params, "padding", 0);
      l.channels_in = get_int(params, "channels_in", 0);
      l.channels_out = get_int(params, "channels_out", 0);
      l.dropout_p = params.value("p", 0.0);
      l.inputs = entry.value("inputs", std::vector<std::string>{});
      l.needs_training = entry.value("needs_training", false);

      if (entry.contains("weight_offset") != entry.contains("weight_length")) {
        throw ManifestMismatchError("layer '" + l.id + "' has an incomplete weight reference");
      }
      if (entry.contains("weight_offset")) {
        if (!is_synaptic(l.kind)) throw ManifestMismatchError("layer '" + l.id + "' cannot carry weights");
        BlobRef ref{entry.at("weight_offset").get<std::size_t>(), entry.at("weight_length").get<std::size_t>()};
        expected_end = std::max(expected_end, ref.offset + ref.length);
        refs.emplace_back(l.id, ref);
      } else if (is_synaptic(l.kind)) {
        throw ManifestMismatchError("layer '" + l.id + "' has no weight reference");
      }
      g.layers.push_back(std::move(l));
    }

    const json pre = manifest.value("preprocessing", json::object());
    g.preprocessing.scale = pre.value("scale", 1.0);
    std::optional<BlobRef> mean_ref;
    Shape mean_shape;
    if (pre.contains("mean_offset")) {
      mean_ref = BlobRef{pre.at("mean_offset").get<std::size_t>(), pre.at("mean_length").get<std::size_t>()};
      mean_shape = pre.at("mean_shape").get<Shape>();
      expected_end = std::max(expected_end, mean_ref->offset + mean_ref->length);
    }

    if (blob_size < expected_end) throw TruncatedBlobError(expected_end, blob_size);
    if (blob_size > expected_end) {
      throw ManifestMismatchError("weight blob has " + std::to_string(blob_size - expected_end) +
                                  " trailing bytes not described by the manifest");
    }

    for (const auto& [id, ref] : refs) {
      const auto& l = g.layer(id);
      const Shape shape = l.kind == LayerKind::conv2d
                              ? Shape{static_cast<std::size_t>(l.channels_out), static_cast<std::size_t>(l.channels_in),
                                      static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)}
                              : Shape{static_cast<std::size_t>(l.channels_out),
                                      static_cast<std::size_t>(l.channels_in)};
      if (ref.length != shape_numel(shape) * 4) {
        throw ManifestMismatchError("layer '" + id + "' declares " + std::to_string(ref.length) +
                                    " weight bytes but its shape " + shape_to_string(shape) + " needs " +
                                    std::to_string(shape_numel(shape) * 4));
      }
      g.weights.emplace(id, Tensor(shape, read_f32_le(blob + ref.offset, shape_numel(shape))));
    }
    if (mean_ref) {
      if (mean_ref->length != shape_numel(mean_shape) * 4) {
        throw ManifestMismatchError("preprocessing mean length disagrees with its shape");
      }
      g.preprocessing.mean = Tensor(mean_shape, read_f32_le(blob + mean_ref->offset, shape_numel(mean_shape)));
    }

    analyze_topology(g);
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

void save_model(const NetworkGraph& graph, const std::filesystem::path& path) {
  require_convertible(graph);
  write_file_bytes(path, serialize_model(graph));
}

NetworkGraph load_model(const std::filesystem::path& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace snnconv
