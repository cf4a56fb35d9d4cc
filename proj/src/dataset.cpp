#include "snnconv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "snnconv/errors.hpp"
#include "snnconv/model_io.hpp"
#include "snnconv/rng.hpp"

namespace snnconv {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) throw ParseError("IDX header truncated");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  const Shape inner = sample_shape();
  const std::size_t per = shape_numel(inner);
  Shape shape = inner;
  shape.insert(shape.begin(), indices.size());
  Dataset out;
  out.num_classes = num_classes;
  std::vector<float> data(indices.size() * per);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw ArgumentError("subset index out of range");
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(i * per), per,
                data.begin() + static_cast<std::ptrdiff_t>(k * per));
    out.labels.push_back(labels[i]);
  }
  out.images = Tensor(shape, std::move(data));
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> idx(std::min(count, size()));
  std::iota(idx.begin(), idx.end(), 0);
  return subset(idx);
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto ib = read_file_bytes(images);
  const auto lb = read_file_bytes(labels);
  if (read_be32(ib, 0) != 0x00000803) throw ParseError("'" + images.string() + "' is not an IDX3 ubyte file");
  if (read_be32(lb, 0) != 0x00000801) throw ParseError("'" + labels.string() + "' is not an IDX1 ubyte file");
  const std::size_t n = read_be32(ib, 4), h = read_be32(ib, 8), w = read_be32(ib, 12);
  const std::size_t nl = read_be32(lb, 4);
  if (n != nl) throw ParseError("image and label counts differ");
  if (ib.size() < 16 + n * h * w || lb.size() < 8 + n) throw ParseError("IDX payload truncated");

  const std::uint8_t peak = n * h * w != 0 ? *std::max_element(ib.begin() + 16, ib.begin() + 16 + n * h * w) : 1;
  const float inv = 1.0f / static_cast<float>(std::max<std::uint8_t>(peak, 1));
  std::vector<float> data(n * h * w);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(ib[16 + i]) * inv;

  Dataset d;
  d.images = Tensor({n, 1, h, w}, std::move(data));
  d.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = lb[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = std::max(10, max_label + 1);
  return d;
}

TrainTestSplit load_dataset_dir(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / "train.index.json")) {
    return {load_dataset(dir / "train"), load_dataset(dir / "test")};
  }
  if (!std::filesystem::exists(dir / "train-images-idx3-ubyte")) {
    throw IoError("'" + dir.string() + "' contains neither IDX files nor a dataset container");
  }
  return {load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
          load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
}

void save_dataset(const Dataset& data, const std::filesystem::path& prefix) {
  nlohmann::json index = {{"format_version", 1},
                          {"sample_shape", data.sample_shape()},
                          {"count", data.size()},
                          {"num_classes", data.num_classes},
                          {"labels", data.labels}};
  const std::string text = index.dump(1);
  write_file_bytes(prefix.string() + ".index.json", std::vector<std::uint8_t>(text.begin(), text.end()));
  std::vector<std::uint8_t> blob;
  append_f32_le(blob, data.images.data());
  write_file_bytes(prefix.string() + ".bin", blob);
}

Dataset load_dataset(const std::filesystem::path& prefix) {
  const auto text = read_file_bytes(prefix.string() + ".index.json");
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset index is not valid JSON: ") + e.what());
  }
  if (index.value("format_version", 0) != 1) throw VersionMismatchError("unsupported dataset format_version");
  Shape shape = index.at("sample_shape").get<Shape>();
  const std::size_t count = index.at("count").get<std::size_t>();
  const auto blob = read_file_bytes(prefix.string() + ".bin");
  const std::size_t expected = count * shape_numel(shape) * 4;
  if (blob.size() < expected) throw TruncatedBlobError(expected, blob.size());
  if (blob.size() > expected) throw ManifestMismatchError("dataset blob has trailing bytes");
  Dataset d;
  shape.insert(shape.begin(), count);
  d.images = Tensor(shape, read_f32_le(blob.data(), expected / 4));
  d.labels = index.at("labels").get<std::vector<int>>();
  d.num_classes = index.at("num_classes").get<int>();
  if (d.labels.size() != count) throw ManifestMismatchError("label count disagrees with sample count");
  return d;
}

InputPreprocessing compute_preprocessing(const Dataset& train) {
  if (train.size() == 0) throw ArgumentError("cannot compute preprocessing from an empty dataset");
  const Shape inner = train.sample_shape();
  const std::size_t per = shape_numel(inner);
  std::vector<double> sum(per, 0.0);
  for (std::size_t n = 0; n < train.size(); ++n) {
    for (std::size_t k = 0; k < per; ++k) sum[k] += train.images[n * per + k];
  }
  std::vector<float> mean(per);
  for (std::size_t k = 0; k < per; ++k) mean[k] = static_cast<float>(sum[k] / static_cast<double>(train.size()));
  double scale = 0.0;
  for (std::size_t n = 0; n < train.size(); ++n) {
    for (std::size_t k = 0; k < per; ++k) {
      scale = std::max(scale, std::fabs(static_cast<double>(train.images[n * per + k] - mean[k])));
    }
  }
  return {Tensor(inner, std::move(mean)), scale > 0.0 ? scale : 1.0};
}

Tensor apply_preprocessing(const InputPreprocessing& pre, const Tensor& images) {
  if (pre.mean.empty()) return images;
  const std::size_t per = pre.mean.size();
  if (images.size() % per != 0) throw ShapeError("images do not match preprocessing mean shape");
  Tensor out = images;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= pre.mean[i % per];
  return out;
}

Dataset preprocessed(const InputPreprocessing& pre, const Dataset& data) {
  Dataset out = data;
  out.images = apply_preprocessing(pre, data.images);
  return out;
}

std::vector<std::size_t> random_indices(std::size_t population, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 rng(seed);
  count = std::min(count, population);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next() % (population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

}  // namespace snnconv
