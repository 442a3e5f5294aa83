#pragma once

// Training data: IDX container parsing (plain or gzip), synthetic Gaussian
// blob generation, and a seeded epoch-permutation batch iterator.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "ges/rng.hpp"

namespace ges {

struct Dataset {
  Eigen::MatrixXd features;  // one row per sample
  Eigen::VectorXi labels;
  int classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct BlobsSpec {
  Eigen::Index samples = 1000;
  Eigen::Index dim = 32;
  int classes = 10;
  double center_spread = 1.5;
  double noise = 1.0;
};

// Gaussian class centers (scale center_spread) plus per-sample unit-scale
// noise. Draw order: centers (class-major), then per sample its label
// followed by its coordinates.
Dataset synthetic_blobs(const BlobsSpec& spec, rng::Xoshiro256pp& gen);

// IDX image file: magic 2051, unsigned bytes, dimensions rows x r x c.
// Pixels are scaled to [0, 1]. Gzip files are detected and inflated.
Eigen::MatrixXd parse_idx_images(const std::string& path);

// IDX label file: magic 2049, unsigned bytes, one dimension.
Eigen::VectorXi parse_idx_labels(const std::string& path);

Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path);

// In-memory IDX serialization (round-trip testing and fixture generation).
std::vector<std::uint8_t> encode_idx_images(const Eigen::MatrixXd& images,
                                            int rows, int cols);
std::vector<std::uint8_t> encode_idx_labels(const Eigen::VectorXi& labels);
Eigen::MatrixXd parse_idx_images_buffer(const std::vector<std::uint8_t>& data);
Eigen::VectorXi parse_idx_labels_buffer(const std::vector<std::uint8_t>& data);

// Yields disjoint index blocks of a fixed batch size; a fresh seeded
// permutation starts each epoch and any remainder smaller than one batch is
// skipped.
class BatchIterator {
 public:
  BatchIterator(Eigen::Index count, Eigen::Index batch, std::uint64_t seed);

  std::vector<Eigen::Index> next();

  Eigen::Index batch_size() const { return batch_; }
  long epoch() const { return epoch_; }

 private:
  void reshuffle();

  Eigen::Index count_;
  Eigen::Index batch_;
  rng::Xoshiro256pp gen_;
  std::vector<Eigen::Index> order_;
  Eigen::Index cursor_ = 0;
  long epoch_ = -1;
};

}  // namespace ges
