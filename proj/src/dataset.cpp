#include "ges/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ges/errors.hpp"

namespace ges {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return data;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed) {
  z_stream strm{};
  if (inflateInit2(&strm, 15 + 32) != Z_OK) {
    throw IoError("zlib initialization failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 16);
  strm.next_in = const_cast<Bytef*>(compressed.data());
  strm.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    strm.next_out = chunk.data();
    strm.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&strm, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&strm);
      throw IoError("gzip payload is corrupt");
    }
    out.insert(out.end(), chunk.data(),
               chunk.data() + (chunk.size() - strm.avail_out));
    if (rc == Z_OK && strm.avail_in == 0 && strm.avail_out != 0) {
      inflateEnd(&strm);
      throw IoError("gzip payload is truncated");
    }
  }
  inflateEnd(&strm);
  return out;
}

std::vector<std::uint8_t> maybe_gunzip(std::vector<std::uint8_t> data) {
  if (data.size() >= 2 && data[0] == 0x1f && data[1] == 0x8b) {
    return gunzip(data);
  }
  return data;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& data,
                        std::size_t offset) {
  if (offset + 4 > data.size()) throw IoError("idx header is truncated");
  return (static_cast<std::uint32_t>(data[offset]) << 24) |
         (static_cast<std::uint32_t>(data[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(data[offset + 2]) << 8) |
         static_cast<std::uint32_t>(data[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  out.push_back(static_cast<std::uint8_t>(value >> 24));
  out.push_back(static_cast<std::uint8_t>(value >> 16));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
  out.push_back(static_cast<std::uint8_t>(value));
}

}  // namespace

Dataset synthetic_blobs(const BlobsSpec& spec, rng::Xoshiro256pp& gen) {
  if (spec.samples <= 0 || spec.dim <= 0 || spec.classes <= 1) {
    throw ConfigError("blobs need samples > 0, dim > 0, classes > 1");
  }
  Eigen::MatrixXd centers(spec.classes, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    for (Eigen::Index d = 0; d < spec.dim; ++d) {
      centers(c, d) = spec.center_spread * gen.gaussian();
    }
  }
  Dataset out;
  out.classes = spec.classes;
  out.features.resize(spec.samples, spec.dim);
  out.labels.resize(spec.samples);
  for (Eigen::Index i = 0; i < spec.samples; ++i) {
    const int label = static_cast<int>(
        gen.below(static_cast<std::uint64_t>(spec.classes)));
    out.labels[i] = label;
    for (Eigen::Index d = 0; d < spec.dim; ++d) {
      out.features(i, d) = centers(label, d) + spec.noise * gen.gaussian();
    }
  }
  return out;
}

Eigen::MatrixXd parse_idx_images_buffer(const std::vector<std::uint8_t>& data) {
  if (read_be32(data, 0) != kImagesMagic) {
    throw IoError("not an idx image file (bad magic)");
  }
  const std::uint32_t count = read_be32(data, 4);
  const std::uint32_t rows = read_be32(data, 8);
  const std::uint32_t cols = read_be32(data, 12);
  const std::size_t pixels =
      static_cast<std::size_t>(count) * rows * cols;
  if (data.size() != 16 + pixels) {
    throw IoError("idx image payload size mismatch");
  }
  Eigen::MatrixXd images(count, static_cast<Eigen::Index>(rows) * cols);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t base = 16 + static_cast<std::size_t>(i) * rows * cols;
    for (std::uint32_t px = 0; px < rows * cols; ++px) {
      images(i, px) = static_cast<double>(data[base + px]) / 255.0;
    }
  }
  return images;
}

Eigen::VectorXi parse_idx_labels_buffer(const std::vector<std::uint8_t>& data) {
  if (read_be32(data, 0) != kLabelsMagic) {
    throw IoError("not an idx label file (bad magic)");
  }
  const std::uint32_t count = read_be32(data, 4);
  if (data.size() != 8 + count) {
    throw IoError("idx label payload size mismatch");
  }
  Eigen::VectorXi labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    labels[i] = static_cast<int>(data[8 + i]);
  }
  return labels;
}

Eigen::MatrixXd parse_idx_images(const std::string& path) {
  return parse_idx_images_buffer(maybe_gunzip(read_file(path)));
}

Eigen::VectorXi parse_idx_labels(const std::string& path) {
  return parse_idx_labels_buffer(maybe_gunzip(read_file(path)));
}

Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path) {
  Dataset out;
  out.features = parse_idx_images(images_path);
  out.labels = parse_idx_labels(labels_path);
  if (out.features.rows() != out.labels.size()) {
    throw IoError("idx image and label counts differ");
  }
  out.classes = out.labels.size() > 0 ? out.labels.maxCoeff() + 1 : 0;
  return out;
}

std::vector<std::uint8_t> encode_idx_images(const Eigen::MatrixXd& images,
                                            int rows, int cols) {
  if (images.cols() != static_cast<Eigen::Index>(rows) * cols) {
    throw IoError("image width does not match rows*cols");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(images.size()));
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.rows()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (Eigen::Index i = 0; i < images.rows(); ++i) {
    for (Eigen::Index px = 0; px < images.cols(); ++px) {
      const double clamped = std::min(1.0, std::max(0.0, images(i, px)));
      out.push_back(static_cast<std::uint8_t>(clamped * 255.0 + 0.5));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Eigen::VectorXi& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + static_cast<std::size_t>(labels.size()));
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 255) {
      throw IoError("label outside byte range");
    }
    out.push_back(static_cast<std::uint8_t>(labels[i]));
  }
  return out;
}

BatchIterator::BatchIterator(Eigen::Index count, Eigen::Index batch,
                             std::uint64_t seed)
    : count_(count), batch_(batch), gen_(seed) {
  if (count_ <= 0 || batch_ <= 0 || batch_ > count_) {
    throw ConfigError("batch size must be in [1, sample count]");
  }
  order_.resize(static_cast<std::size_t>(count_));
  reshuffle();
}

void BatchIterator::reshuffle() {
  for (Eigen::Index i = 0; i < count_; ++i) {
    order_[static_cast<std::size_t>(i)] = i;
  }
  for (Eigen::Index i = count_ - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        gen_.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order_[static_cast<std::size_t>(i)],
              order_[static_cast<std::size_t>(j)]);
  }
  cursor_ = 0;
  ++epoch_;
}

std::vector<Eigen::Index> BatchIterator::next() {
  if (cursor_ + batch_ > count_) reshuffle();
  std::vector<Eigen::Index> indices(
      order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
      order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
  cursor_ += batch_;
  return indices;
}

}  // namespace ges
