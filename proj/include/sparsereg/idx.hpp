#pragma once
// MNIST-style IDX ingestion: big-endian image (magic 2051) and label (2049)
// files, with a seeded, deterministic per-class subsample.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sparsereg/errors.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

namespace detail {

inline uint32_t read_be32(const std::string& path, std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw DataError(path + ": truncated header");
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
         (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

// Bounded uniform draw from generator bits; avoids distribution objects so
// selections are reproducible across standard libraries.
inline size_t bounded_draw(std::mt19937_64& rng, size_t n) {
  return size_t((rng() >> 11) % n);
}

}  // namespace detail

struct LabeledImage {
  Image image;
  int label{0};
};

inline std::vector<Image> load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  const uint32_t magic = detail::read_be32(path, in);
  if (magic != 0x00000803u)
    throw DataError(path + ": bad image magic " + std::to_string(magic));
  const uint32_t count = detail::read_be32(path, in);
  const uint32_t rows = detail::read_be32(path, in);
  const uint32_t cols = detail::read_be32(path, in);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw DataError(path + ": implausible image dimensions");
  std::vector<Image> images;
  images.reserve(count);
  std::vector<char> buf(size_t(rows) * cols);
  for (uint32_t i = 0; i < count; ++i) {
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() != std::streamsize(buf.size()))
      throw DataError(path + ": truncated at image " + std::to_string(i));
    Image img{int(cols), int(rows)};
    for (size_t k = 0; k < buf.size(); ++k)
      img.pixels[k] = double(uint8_t(buf[k])) / 255.0;
    images.push_back(std::move(img));
  }
  return images;
}

inline std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  const uint32_t magic = detail::read_be32(path, in);
  if (magic != 0x00000801u)
    throw DataError(path + ": bad label magic " + std::to_string(magic));
  const uint32_t count = detail::read_be32(path, in);
  std::vector<char> buf(count);
  in.read(buf.data(), std::streamsize(buf.size()));
  if (in.gcount() != std::streamsize(buf.size()))
    throw DataError(path + ": truncated label payload");
  std::vector<int> labels(count);
  for (uint32_t i = 0; i < count; ++i) labels[i] = int(uint8_t(buf[i]));
  return labels;
}

// Seeded per-class subsample: for each requested digit (ascending), indices
// in file order are shuffled by a seed-derived Fisher-Yates pass and the
// first per_class survivors are kept. Same seed, same selection.
inline std::vector<LabeledImage> load_idx(const std::string& images_path,
                                          const std::string& labels_path,
                                          const std::set<int>& digit_filter,
                                          int per_class, uint64_t seed) {
  auto images = load_idx_images(images_path);
  auto labels = load_idx_labels(labels_path);
  if (images.size() != labels.size())
    throw DataError(images_path + ": image/label count mismatch (" +
                    std::to_string(images.size()) + " vs " +
                    std::to_string(labels.size()) + ")");
  std::vector<LabeledImage> out;
  if (per_class <= 0) return out;
  for (int digit : digit_filter) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == digit) idx.push_back(i);
    if (int(idx.size()) < per_class)
      throw DataError(labels_path + ": class " + std::to_string(digit) +
                      " has only " + std::to_string(idx.size()) + " samples");
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * uint64_t(digit + 1)));
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[detail::bounded_draw(rng, i)]);
    for (int k = 0; k < per_class; ++k)
      out.push_back({images[idx[size_t(k)]], digit});
  }
  return out;
}

}  // namespace sparsereg
