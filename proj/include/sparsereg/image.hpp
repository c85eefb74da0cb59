#pragma once
// Discrete image container and its L2 geometry. Discrete sums with unit
// pixel area stand in for integrals; pixel (x, y) sits at integer
// coordinates, x = column to the right, y = row downward.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sparsereg/geometry.hpp"

namespace sparsereg {

struct Image {
  int width{0};
  int height{0};
  std::vector<double> pixels;  // row-major, size width*height

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(size_t(w) * h, 0.0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("image dims must be positive");
  }

  double& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  double at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  bool contains(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

inline void check_same_dims(const Image& f, const Image& g) {
  if (f.width != g.width || f.height != g.height)
    throw std::invalid_argument("image dimension mismatch");
}

inline double inner_product(const Image& f, const Image& g) {
  check_same_dims(f, g);
  double s = 0.0;
  for (size_t i = 0; i < f.pixels.size(); ++i) s += f.pixels[i] * g.pixels[i];
  return s;
}

inline double l2_norm(const Image& img) {
  double s = 0.0;
  for (double v : img.pixels) s += v * v;
  return std::sqrt(s);
}

inline double l2_distance(const Image& f, const Image& g) {
  check_same_dims(f, g);
  double s = 0.0;
  for (size_t i = 0; i < f.pixels.size(); ++i) {
    const double d = f.pixels[i] - g.pixels[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Image& add_scaled(Image& dst, const Image& src, double c) {
  check_same_dims(dst, src);
  for (size_t i = 0; i < dst.pixels.size(); ++i) dst.pixels[i] += c * src.pixels[i];
  return dst;
}

// Bilinear sample at real coordinates; zero outside the domain.
inline double bilinear_sample(const Image& img, double x, double y) {
  const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto px = [&](int xi, int yi) -> double {
    return img.contains(xi, yi) ? img.at(xi, yi) : 0.0;
  };
  const double top = (1.0 - fx) * px(x0, y0) + fx * px(x0 + 1, y0);
  const double bot = (1.0 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1);
  return (1.0 - fy) * top + fy * bot;
}

// U(eta): output pixel x holds a^{-1} * img(R_{-theta}(x - b)/a), sampled
// bilinearly, zero-padded. Rotation/scale center is the coordinate origin;
// conjugate by a centering translation for center-of-image transforms.
inline Image warp(const Image& img, const TransformParams& eta, GroupKind kind) {
  check_conforms(eta, kind);
  Image out(img.width, img.height);
  const double inv_a = 1.0 / eta.a;
  const double c = std::cos(-eta.theta), s = std::sin(-eta.theta);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double dx = x - eta.b.x, dy = y - eta.b.y;
      const double sx = (c * dx - s * dy) * inv_a;
      const double sy = (s * dx + c * dy) * inv_a;
      out.at(x, y) = inv_a * bilinear_sample(img, sx, sy);
    }
  }
  return out;
}

// Centering conjugate c o eta o c^{-1} with c = translation to the image
// center, so eta rotates/scales about the center instead of the origin.
inline TransformParams conjugate_to_center(const TransformParams& eta,
                                           GroupKind kind, int width,
                                           int height) {
  const TransformParams c = make_transform(0.5 * (width - 1), 0.5 * (height - 1));
  return compose(compose(c, eta, kind), inverse(c, kind), kind);
}

// Inverse of conjugate_to_center: the center-relative parameters of an
// absolute transform, c^{-1} o eta o c.
inline TransformParams conjugate_from_center(const TransformParams& eta,
                                             GroupKind kind, int width,
                                             int height) {
  const TransformParams c = make_transform(0.5 * (width - 1), 0.5 * (height - 1));
  return compose(compose(inverse(c, kind), eta, kind), c, kind);
}

inline Image warp_centered(const Image& img, const TransformParams& eta,
                           GroupKind kind) {
  return warp(img, conjugate_to_center(eta, kind, img.width, img.height), kind);
}

}  // namespace sparsereg
