#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "snnconv/dataset.hpp"
#include "snnconv/errors.hpp"
#include "test_util.hpp"

using namespace snnconv;

TEST(Dataset, LoadsDigitIdx) {
  const auto split = load_dataset_dir(SNNCONV_DATA_DIR);
  EXPECT_EQ(split.train.size(), 1297u);
  EXPECT_EQ(split.test.size(), 500u);
  EXPECT_EQ(split.train.sample_shape(), (Shape{1, 8, 8}));
  EXPECT_EQ(split.train.num_classes, 10);
  const auto [lo, hi] = std::minmax_element(split.train.images.storage().begin(), split.train.images.storage().end());
  EXPECT_EQ(*lo, 0.0f);
  EXPECT_EQ(*hi, 1.0f);
}

TEST(Dataset, PreprocessingMeanAndScale) {
  const auto split = load_dataset_dir(SNNCONV_DATA_DIR);
  const auto pre = compute_preprocessing(split.train);
  const auto p = preprocessed(pre, split.train);
  const std::size_t n = p.size(), per = 64;
  double peak = 0.0;
  for (std::size_t j = 0; j < per; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p.images[i * per + j];
    EXPECT_NEAR(mean / double(n), 0.0, 1e-5);
  }
  for (float v : p.images.data()) peak = std::max(peak, std::abs(double(v)));
  EXPECT_NEAR(pre.scale, peak, 1e-6);
}

TEST(Dataset, ContainerRoundTrip) {
  const auto split = load_dataset_dir(SNNCONV_DATA_DIR);
  const auto d = split.test.head(37);
  const auto prefix = std::filesystem::temp_directory_path() / "snnconv_ds";
  save_dataset(d, prefix);
  const auto back = load_dataset(prefix);
  EXPECT_TRUE(bit_equal(back.images, d.images));
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.num_classes, d.num_classes);
}

TEST(Dataset, MissingFilesAreIoErrors) {
  EXPECT_THROW(load_dataset_dir("/nonexistent/dir"), Error);
}

TEST(Dataset, RandomIndicesDeterministicWithoutReplacement) {
  const auto a = random_indices(100, 30, 5);
  EXPECT_EQ(a, random_indices(100, 30, 5));
  EXPECT_NE(a, random_indices(100, 30, 6));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 30u);
  for (auto i : a) EXPECT_LT(i, 100u);
  EXPECT_EQ(random_indices(10, 11, 0).size(), 10u);
}

TEST(Dataset, SubsetPicksRows) {
  const auto split = load_dataset_dir(SNNCONV_DATA_DIR);
  const auto s = split.test.subset({4, 2});
  EXPECT_EQ(s.labels[0], split.test.labels[4]);
  EXPECT_EQ(s.labels[1], split.test.labels[2]);
  EXPECT_EQ(s.images.slice(1), split.test.images.slice(2));
}
