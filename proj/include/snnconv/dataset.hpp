#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "snnconv/netgraph.hpp"
#include "snnconv/tensor.hpp"

namespace snnconv {

struct Dataset {
  Tensor images;  // [N, C, H, W]
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }
  Dataset subset(const std::vector<std::size_t>& indices) const;
  Dataset head(std::size_t count) const;
};

// Reads an IDX3 image file and IDX1 label file. Pixel values are divided by
// the largest pixel value present so they land in [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Loads {train,t10k}-{images-idx3,labels-idx1}-ubyte from `dir`, or the
// container pair train.index.json/train.bin + test.index.json/test.bin.
TrainTestSplit load_dataset_dir(const std::filesystem::path& dir);

// Container format: `<prefix>.index.json` (format_version, sample_shape,
// count, num_classes, labels) and `<prefix>.bin` (float32 LE, row-major).
void save_dataset(const Dataset& data, const std::filesystem::path& prefix);
Dataset load_dataset(const std::filesystem::path& prefix);

// Per-pixel training mean, and encoder scale = max |x - mean| over the set.
InputPreprocessing compute_preprocessing(const Dataset& train);
Tensor apply_preprocessing(const InputPreprocessing& pre, const Tensor& images);
Dataset preprocessed(const InputPreprocessing& pre, const Dataset& data);

// Deterministic sample without replacement.
std::vector<std::size_t> random_indices(std::size_t population, std::size_t count, std::uint64_t seed);

}  // namespace snnconv
