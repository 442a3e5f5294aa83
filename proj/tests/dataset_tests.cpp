#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "ges/dataset.hpp"
#include "ges/errors.hpp"
#include "ges/rng.hpp"

using ges::BatchIterator;
using ges::BlobsSpec;
using ges::Dataset;
using ges::IoError;
using ges::rng::Xoshiro256pp;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_gzip(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  gzFile gz = gzopen(path.string().c_str(), "wb");
  REQUIRE(gz != nullptr);
  const int written =
      gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size()));
  REQUIRE(written == static_cast<int>(bytes.size()));
  gzclose(gz);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("idx image buffers round-trip through encode and parse") {
  Eigen::MatrixXd images(3, 4);  // 3 samples of 2x2 pixels
  images << 0.0, 1.0, 0.5, 0.25,
      1.0, 0.75, 0.0, 0.5,
      0.25, 0.25, 1.0, 0.0;
  const auto bytes = ges::encode_idx_images(images, 2, 2);
  const Eigen::MatrixXd back = ges::parse_idx_images_buffer(bytes);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  // Pixels quantize to bytes, so round-tripping is exact only to 1/255.
  CHECK((back - images).cwiseAbs().maxCoeff() <= 0.5 / 255.0);
}

TEST_CASE("idx label buffers round-trip exactly") {
  Eigen::VectorXi labels(5);
  labels << 0, 9, 3, 1, 7;
  const auto bytes = ges::encode_idx_labels(labels);
  CHECK(ges::parse_idx_labels_buffer(bytes) == labels);
}

TEST_CASE("idx magic numbers are enforced") {
  Eigen::VectorXi labels(2);
  labels << 1, 2;
  auto bytes = ges::encode_idx_labels(labels);
  bytes[3] = 0x05;  // corrupt the type byte of the magic
  CHECK_THROWS_AS(ges::parse_idx_labels_buffer(bytes), IoError);

  Eigen::MatrixXd images(1, 1);
  images << 0.5;
  auto img_bytes = ges::encode_idx_images(images, 1, 1);
  img_bytes[3] = 0x01;  // wrong dimension count for an image file
  CHECK_THROWS_AS(ges::parse_idx_images_buffer(img_bytes), IoError);
}

TEST_CASE("truncated idx payloads are rejected") {
  Eigen::VectorXi labels(4);
  labels << 0, 1, 2, 3;
  auto bytes = ges::encode_idx_labels(labels);
  bytes.pop_back();
  CHECK_THROWS_AS(ges::parse_idx_labels_buffer(bytes), IoError);
}

TEST_CASE("idx files load plain and gzip alike") {
  Eigen::MatrixXd images(2, 4);
  images << 0.1, 0.9, 0.3, 0.6,
      0.8, 0.0, 1.0, 0.2;
  Eigen::VectorXi labels(2);
  labels << 1, 0;
  const auto image_bytes = ges::encode_idx_images(images, 2, 2);
  const auto label_bytes = ges::encode_idx_labels(labels);

  const auto img_plain = temp_file("ges_test_images.idx");
  const auto lab_plain = temp_file("ges_test_labels.idx");
  const auto img_gz = temp_file("ges_test_images.idx.gz");
  const auto lab_gz = temp_file("ges_test_labels.idx.gz");
  write_bytes(img_plain, image_bytes);
  write_bytes(lab_plain, label_bytes);
  write_gzip(img_gz, image_bytes);
  write_gzip(lab_gz, label_bytes);

  const Dataset plain =
      ges::load_idx_dataset(img_plain.string(), lab_plain.string());
  const Dataset gz = ges::load_idx_dataset(img_gz.string(), lab_gz.string());
  CHECK(plain.features == gz.features);
  CHECK(plain.labels == gz.labels);
  CHECK(plain.size() == 2);
  CHECK(plain.dim() == 4);
  CHECK(plain.classes == 2);  // max label + 1

  for (const auto& p : {img_plain, lab_plain, img_gz, lab_gz}) {
    std::filesystem::remove(p);
  }
}

TEST_CASE("missing idx files raise an io error") {
  CHECK_THROWS_AS(ges::parse_idx_images("/nonexistent/images.idx"), IoError);
}

TEST_CASE("mismatched image and label counts are rejected") {
  Eigen::MatrixXd images(2, 1);
  images << 0.5, 0.5;
  Eigen::VectorXi labels(3);
  labels << 0, 1, 0;
  const auto img = temp_file("ges_test_mismatch.idx");
  const auto lab = temp_file("ges_test_mismatch_labels.idx");
  write_bytes(img, ges::encode_idx_images(images, 1, 1));
  write_bytes(lab, ges::encode_idx_labels(labels));
  CHECK_THROWS_AS(ges::load_idx_dataset(img.string(), lab.string()), IoError);
  std::filesystem::remove(img);
  std::filesystem::remove(lab);
}

TEST_CASE("synthetic blobs have the requested shape and are deterministic") {
  BlobsSpec spec;
  spec.samples = 120;
  spec.dim = 6;
  spec.classes = 4;
  Xoshiro256pp g1(77), g2(77);
  const Dataset a = ges::synthetic_blobs(spec, g1);
  const Dataset b = ges::synthetic_blobs(spec, g2);
  CHECK(a.size() == 120);
  CHECK(a.dim() == 6);
  CHECK(a.classes == 4);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.labels.minCoeff() >= 0);
  CHECK(a.labels.maxCoeff() < 4);
  // All classes show up in a sample this large.
  std::vector<int> counts(4, 0);
  for (Eigen::Index i = 0; i < a.size(); ++i) ++counts[a.labels[i]];
  CHECK(*std::min_element(counts.begin(), counts.end()) > 0);
}

TEST_CASE("blob classes are separable by their centers") {
  // With wide spread and small noise the class centroids stay far apart.
  BlobsSpec spec;
  spec.samples = 400;
  spec.dim = 8;
  spec.classes = 3;
  spec.center_spread = 10.0;
  spec.noise = 0.1;
  Xoshiro256pp gen(5);
  const Dataset data = ges::synthetic_blobs(spec, gen);
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(3, 8);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    centroids.row(data.labels[i]) += data.features.row(i);
    counts[data.labels[i]] += 1.0;
  }
  for (int c = 0; c < 3; ++c) centroids.row(c) /= counts[c];
  for (int c = 0; c < 3; ++c) {
    for (int d = c + 1; d < 3; ++d) {
      CHECK((centroids.row(c) - centroids.row(d)).norm() > 1.0);
    }
  }
}

TEST_CASE("batch iterator covers each epoch exactly once") {
  BatchIterator it(10, 3, 99);
  std::vector<int> seen(10, 0);
  // 10 / 3 -> three batches per epoch, remainder of one index skipped.
  std::vector<Eigen::Index> skipped_epoch0;
  for (int b = 0; b < 3; ++b) {
    const auto batch = it.next();
    REQUIRE(batch.size() == 3);
    CHECK(it.epoch() == 0);
    for (Eigen::Index i : batch) ++seen[i];
  }
  CHECK(*std::max_element(seen.begin(), seen.end()) == 1);
  const auto next_epoch = it.next();
  CHECK(it.epoch() == 1);
  REQUIRE(next_epoch.size() == 3);
}

TEST_CASE("batch iterator reshuffles between epochs but not within") {
  BatchIterator a(12, 4, 7), b(12, 4, 7);
  for (int i = 0; i < 9; ++i) CHECK(a.next() == b.next());  // same seed
  BatchIterator c(12, 4, 8);
  bool any_different = false;
  BatchIterator d(12, 4, 7);
  for (int i = 0; i < 9; ++i) {
    if (c.next() != d.next()) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("batch equal to the dataset size is one full epoch") {
  BatchIterator it(4, 4, 1);
  const auto batch = it.next();
  REQUIRE(batch.size() == 4);
  std::vector<Eigen::Index> sorted = batch;
  std::sort(sorted.begin(), sorted.end());
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("degenerate batch and blob specs are rejected") {
  CHECK_THROWS_AS(BatchIterator(4, 5, 1), ges::ConfigError);
  CHECK_THROWS_AS(BatchIterator(0, 1, 1), ges::ConfigError);
  BlobsSpec bad;
  bad.classes = 1;
  Xoshiro256pp gen(1);
  CHECK_THROWS_AS(ges::synthetic_blobs(bad, gen), ges::ConfigError);
}

}  // TEST_SUITE
