#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "sparsereg/idx.hpp"
#include "sparsereg/image.hpp"
#include "sparsereg/pgm.hpp"
#include "test_util.hpp"

using namespace sparsereg;

namespace {

std::string temp_path(const std::string& name) {
  return std::string(::testing::TempDir()) + name;
}

TEST(Image, LayoutAndNorms) {
  Image img(3, 2);
  img.at(2, 1) = 3.0;
  EXPECT_EQ(img.pixels.size(), 6u);
  EXPECT_DOUBLE_EQ(img.pixels[5], 3.0);
  EXPECT_DOUBLE_EQ(l2_norm(img), 3.0);
  EXPECT_DOUBLE_EQ(l2_norm(Image(4, 4)), 0.0);

  Image g(3, 2);
  g.at(2, 1) = 2.0;
  g.at(0, 0) = 5.0;
  EXPECT_DOUBLE_EQ(inner_product(img, g), 6.0);
  EXPECT_DOUBLE_EQ(inner_product(img, g), inner_product(g, img));
  EXPECT_DOUBLE_EQ(inner_product(img, img), l2_norm(img) * l2_norm(img));
  EXPECT_THROW(inner_product(img, Image(2, 3)), std::invalid_argument);
}

TEST(Image, DisjointSupportsOrthogonal) {
  Image f(4, 1), g(4, 1);
  f.at(0, 0) = 2.0;
  g.at(3, 0) = 7.0;
  EXPECT_DOUBLE_EQ(inner_product(f, g), 0.0);
}

TEST(Image, CauchySchwarz) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    Image f(8, 8), g(8, 8);
    for (auto& v : f.pixels) v = testutil::uniform(rng, -1, 1);
    for (auto& v : g.pixels) v = testutil::uniform(rng, -1, 1);
    EXPECT_LE(std::abs(inner_product(f, g)),
              l2_norm(f) * l2_norm(g) + 1e-12);
  }
}

TEST(Warp, IdentityExact) {
  auto img = testutil::gaussian_blob(16, 16, 7.0, 8.0, 2.0);
  auto out = warp(img, identity_transform(), GroupKind::Similarity2D);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    EXPECT_DOUBLE_EQ(out.pixels[i], img.pixels[i]);
}

TEST(Warp, IntegerTranslationIsExactShift) {
  auto img = testutil::gaussian_blob(20, 20, 6.0, 6.0, 1.5);
  auto out = warp(img, make_transform(3, 2), GroupKind::Translation2D);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const int sx = x - 3, sy = y - 2;
      const double want = img.contains(sx, sy) ? img.at(sx, sy) : 0.0;
      EXPECT_DOUBLE_EQ(out.at(x, y), want);
    }
}

TEST(Warp, RotationAboutCenterPreservesNorm) {
  auto img = testutil::gaussian_blob(33, 33, 16.0, 16.0, 3.0);
  auto out = warp_centered(img, make_transform(0, 0, 1, kPi / 2),
                           GroupKind::SpecialEuclidean2D);
  EXPECT_NEAR(l2_norm(out) / l2_norm(img), 1.0, 0.02);
  auto out2 = warp_centered(img, make_transform(0, 0, 1, kPi / 5),
                            GroupKind::SpecialEuclidean2D);
  EXPECT_NEAR(l2_norm(out2) / l2_norm(img), 1.0, 0.02);
}

TEST(Warp, ScalePreservesNormViaAmplitudeFactor) {
  auto img = testutil::gaussian_blob(41, 41, 20.0, 20.0, 2.5);
  auto out = warp_centered(img, make_transform(0, 0, 1.3, 0),
                           GroupKind::Similarity2D);
  EXPECT_NEAR(l2_norm(out) / l2_norm(img), 1.0, 0.02);
}

TEST(Warp, InverseRoundTripInterior) {
  auto img = testutil::gaussian_blob(41, 41, 20.0, 20.0, 3.0);
  const auto eta = conjugate_to_center(make_transform(1.5, -2.0, 1.2, 0.4),
                                       GroupKind::Similarity2D, 41, 41);
  auto fwd = warp(img, eta, GroupKind::Similarity2D);
  auto back = warp(fwd, inverse(eta, GroupKind::Similarity2D),
                   GroupKind::Similarity2D);
  // a*sqrt(2) < 2 px border excluded; blob is interior anyway.
  EXPECT_LE(testutil::interior_rel_error(back, img, 2), 0.05);
}

TEST(Pgm, EndpointScaling) {
  const std::string path = temp_path("endpoints.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 1\n255\n";
    out.put(char(0));
    out.put(char(255));
  }
  auto img = load_pgm(path);
  ASSERT_EQ(img.width, 2);
  ASSERT_EQ(img.height, 1);
  EXPECT_DOUBLE_EQ(img.pixels[0], 0.0);
  EXPECT_DOUBLE_EQ(img.pixels[1], 1.0);
}

TEST(Pgm, SaveLoadBitExactRoundTrip) {
  std::mt19937_64 rng(31);
  Image img(13, 7);
  for (auto& v : img.pixels) v = double(rng() % 256) / 255.0;
  const std::string p1 = temp_path("rt1.pgm"), p2 = temp_path("rt2.pgm");
  save_pgm(img, p1);
  auto loaded = load_pgm(p1);
  save_pgm(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(b1, b2);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    EXPECT_NEAR(loaded.pixels[i], img.pixels[i], 0.5 / 255.0);
}

TEST(Pgm, AsciiWithComments) {
  const std::string path = temp_path("ascii.pgm");
  {
    std::ofstream out(path);
    out << "P2\n# a comment\n3 1\n# another\n255\n0 128 255\n";
  }
  auto img = load_pgm(path);
  ASSERT_EQ(img.width, 3);
  EXPECT_NEAR(img.pixels[1], 128.0 / 255.0, 1e-12);
  EXPECT_DOUBLE_EQ(img.pixels[2], 1.0);
}

TEST(Pgm, ErrorsNameByteOffset) {
  const std::string path = temp_path("trunc.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.put(char(9));  // 1 of 16 payload bytes
  }
  try {
    load_pgm(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }

  const std::string bad = temp_path("bad.pgm");
  { std::ofstream out(bad, std::ios::binary); out << "P7\n1 1\n255\n"; }
  EXPECT_THROW(load_pgm(bad), DataError);

  const std::string deep = temp_path("deep.pgm");
  { std::ofstream out(deep, std::ios::binary); out << "P5\n2 2\n65535\n"; }
  EXPECT_THROW(load_pgm(deep), DataError);
}

// Writes a valid IDX image/label pair with `labels[i]` stamped into pixel 0
// so selections can be traced back to file indices.
void write_idx_fixture(const std::string& images_path,
                       const std::string& labels_path,
                       const std::vector<int>& labels, int rows, int cols) {
  auto be32 = [](std::ofstream& out, uint32_t v) {
    out.put(char(v >> 24)); out.put(char(v >> 16));
    out.put(char(v >> 8)); out.put(char(v));
  };
  std::ofstream im(images_path, std::ios::binary);
  be32(im, 0x803);
  be32(im, uint32_t(labels.size()));
  be32(im, uint32_t(rows));
  be32(im, uint32_t(cols));
  for (size_t i = 0; i < labels.size(); ++i) {
    im.put(char(uint8_t(i)));  // pixel 0 encodes the file index
    for (int k = 1; k < rows * cols; ++k) im.put(char(uint8_t(labels[i])));
  }
  std::ofstream lb(labels_path, std::ios::binary);
  be32(lb, 0x801);
  be32(lb, uint32_t(labels.size()));
  for (int l : labels) lb.put(char(uint8_t(l)));
}

TEST(Idx, LoadAndSample) {
  const std::string ip = temp_path("imgs.idx"), lp = temp_path("lbls.idx");
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3);
  write_idx_fixture(ip, lp, labels, 5, 5);

  auto sel = load_idx(ip, lp, {0, 2}, 4, 99);
  ASSERT_EQ(sel.size(), 8u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(sel[size_t(i)].label, 0);
  for (int i = 4; i < 8; ++i) EXPECT_EQ(sel[size_t(i)].label, 2);
  for (const auto& s : sel) {
    EXPECT_EQ(s.image.width, 5);
    EXPECT_NEAR(s.image.pixels[1], s.label / 255.0, 1e-12);
    // Selected file index must carry the right label.
    const int file_idx = int(s.image.pixels[0] * 255.0 + 0.5);
    EXPECT_EQ(labels[size_t(file_idx)], s.label);
  }

  auto again = load_idx(ip, lp, {0, 2}, 4, 99);
  for (size_t i = 0; i < sel.size(); ++i)
    EXPECT_EQ(sel[i].image.pixels[0], again[i].image.pixels[0]);

  auto other = load_idx(ip, lp, {0, 2}, 4, 100);
  bool any_diff = false;
  for (size_t i = 0; i < sel.size(); ++i)
    any_diff |= sel[i].image.pixels[0] != other[i].image.pixels[0];
  EXPECT_TRUE(any_diff);

  EXPECT_TRUE(load_idx(ip, lp, {0, 1, 2}, 0, 1).empty());
  EXPECT_THROW(load_idx(ip, lp, {1}, 11, 1), DataError);
}

TEST(Idx, Errors) {
  const std::string ip = temp_path("imgs2.idx"), lp = temp_path("lbls2.idx");
  write_idx_fixture(ip, lp, {0, 1}, 4, 4);
  EXPECT_THROW(load_idx(lp, lp, {0}, 1, 1), DataError);  // wrong magic
  const std::string shortl = temp_path("short.idx");
  {
    std::ofstream lb(shortl, std::ios::binary);
    lb.put(char(0)); lb.put(char(0)); lb.put(char(8)); lb.put(char(1));
    lb.put(char(0)); lb.put(char(0)); lb.put(char(0)); lb.put(char(9));
    lb.put(char(0));  // claims 9 labels, provides 1
  }
  EXPECT_THROW(load_idx_labels(shortl), DataError);
  // image/label count mismatch
  const std::string lp3 = temp_path("lbls3.idx");
  write_idx_fixture(temp_path("unused.idx"), lp3, {0, 1, 2}, 4, 4);
  EXPECT_THROW(load_idx(ip, lp3, {0}, 1, 1), DataError);
}

}  // namespace
