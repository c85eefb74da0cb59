#ifndef SPARSEREG_SYNTH_HPP
#define SPARSEREG_SYNTH_HPP

// Procedural experiment inputs: a textured blob object, stroke glyphs for
// digits 0-5, and seeded random transformations of an image. Everything is
// deterministic given the seed, so experiment CSVs are reproducible byte for
// byte without external datasets.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "sparsereg/errors.hpp"
#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

namespace detail {

// Portable uniform draw in [0, 1). uniform_real_distribution output is
// implementation-defined, so byte-level reproducibility needs this instead.
inline double unit_real(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_real(rng);
}

// splitmix64 finalizer over (seed, tag, index); decorrelates the per-item
// streams drawn from one experiment seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag,
                              std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) +
                    0x85ebca77c2b2ae63ULL * (index + 3);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Adds an oriented Gaussian lobe: long axis sigma*nu along theta, short axis
// sigma, peak amplitude amp.
inline void add_lobe(Image& img, double cx, double cy, double sigma, double nu,
                     double theta, double amp) {
  const double c = std::cos(theta), s = std::sin(theta);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double u = (c * dx + s * dy) / (sigma * nu);
      const double v = (-s * dx + c * dy) / sigma;
      const double e = 0.5 * (u * u + v * v);
      if (e < 16.0) img.at(x, y) += amp * std::exp(-e);
    }
}

// Max-ink stamp of an isotropic Gaussian at (cx, cy); max keeps overlapping
// strokes and joints flat instead of doubling.
inline void stamp_ink(Image& img, double cx, double cy, double sigma) {
  const int x0 = std::max(0, int(std::floor(cx - 4.0 * sigma)));
  const int x1 = std::min(img.width - 1, int(std::ceil(cx + 4.0 * sigma)));
  const int y0 = std::max(0, int(std::floor(cy - 4.0 * sigma)));
  const int y1 = std::min(img.height - 1, int(std::ceil(cy + 4.0 * sigma)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      const double v = std::exp(-0.5 * d2 / (sigma * sigma));
      if (v > img.at(x, y)) img.at(x, y) = v;
    }
}

inline void stamp_polyline(Image& img, const std::vector<Vec2>& pts,
                           double sigma) {
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i], b = pts[i + 1];
    const double len = norm(b - a);
    const int n = std::max(1, int(std::ceil(len / 0.3)));
    for (int k = 0; k <= n; ++k) {
      const double t = double(k) / n;
      stamp_ink(img, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), sigma);
    }
  }
  if (pts.size() == 1) stamp_ink(img, pts[0].x, pts[0].y, sigma);
}

// Circular arc samples in screen coordinates (y grows downward), angles in
// degrees, counterclockwise on screen for deg1 > deg0.
inline std::vector<Vec2> arc_points(double cx, double cy, double r,
                                    double deg0, double deg1, int n = 24) {
  std::vector<Vec2> pts;
  pts.reserve(size_t(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = (deg0 + (deg1 - deg0) * k / n) * kPi / 180.0;
    pts.push_back({cx + r * std::cos(t), cy - r * std::sin(t)});
  }
  return pts;
}

// Stroke skeletons for glyphs 0-5 in a 28x28 box.
inline std::vector<std::vector<Vec2>> glyph_strokes(int digit) {
  switch (digit) {
    case 0: {
      std::vector<Vec2> pts;
      for (int k = 0; k <= 40; ++k) {
        const double t = 2.0 * kPi * k / 40;
        pts.push_back({14.0 + 5.0 * std::cos(t), 14.0 + 7.5 * std::sin(t)});
      }
      return {pts};
    }
    case 1:
      return {{{14.5, 5.0}, {14.5, 23.0}}, {{14.5, 5.0}, {11.0, 9.0}}};
    case 2: {
      auto top = arc_points(14.0, 9.5, 5.5, 180.0, 0.0);
      top.push_back({8.0, 23.0});
      return {top, {{8.0, 23.0}, {20.0, 23.0}}};
    }
    case 3: {
      auto upper = arc_points(13.5, 9.0, 4.8, 150.0, -90.0);
      auto lower = arc_points(13.5, 18.6, 4.9, 90.0, -150.0);
      return {upper, lower};
    }
    case 4:
      return {{{17.0, 4.5}, {8.0, 16.5}, {20.5, 16.5}},
              {{17.0, 4.5}, {17.0, 23.5}}};
    case 5: {
      auto belly = arc_points(13.0, 17.0, 5.7, 128.0, -120.0);
      return {{{19.0, 5.0}, {9.5, 5.0}, {9.5, 12.5}}, belly};
    }
    default:
      throw ConfigError("glyphs are defined for digits 0..5");
  }
}

}  // namespace detail

// Textured blob: a soft central anchor plus an annulus of oriented lobes,
// some carving holes. Values lie in [0, 1] with peak 1. Content at radius r
// moves by r*|da| under a scale perturbation, so the annulus (radius 10..17
// at the 75-pixel reference size) is what makes the scale component of a
// registration observable; it still clears the frame for dilations up to
// 1.25 combined with moderate translations.
inline Image synth_object(int width, int height, std::uint64_t seed) {
  if (width < 16 || height < 16)
    throw ConfigError("synth_object needs at least a 16x16 canvas");
  Image img(width, height);
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  const double sf = std::min(width, height) / 75.0;
  std::mt19937_64 rng(seed);
  detail::add_lobe(img, cx, cy, 4.5 * sf, 1.0, 0.0, 0.8);
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    const double ang =
        (2.0 * kPi * i) / n + detail::uniform_in(rng, -0.22, 0.22);
    const double rad = sf * detail::uniform_in(rng, 10.0, 17.0);
    const double sigma = sf * detail::uniform_in(rng, 1.4, 2.6);
    const double nu = detail::uniform_in(rng, 1.0, 1.9);
    const double theta = detail::uniform_in(rng, 0.0, kPi);
    double amp = detail::uniform_in(rng, 0.45, 1.0);
    if (detail::unit_real(rng) < 0.3) amp = -0.6 * amp;
    detail::add_lobe(img, cx + rad * std::cos(ang), cy + rad * std::sin(ang),
                     sigma, nu, theta, amp);
  }
  double peak = 0.0;
  for (double& v : img.pixels) {
    if (v < 0.0) v = 0.0;
    peak = std::max(peak, v);
  }
  for (double& v : img.pixels) v /= peak;
  return img;
}

// 28x28 stroke glyph for a digit in 0..5 with a seeded jitter: a small rigid
// wobble, shear, and per-point noise, so repeated draws give distinct but
// same-class instances. Ink peaks at 1.
inline Image synth_digit(int digit, std::uint64_t seed) {
  auto strokes = detail::glyph_strokes(digit);
  std::mt19937_64 rng(seed);
  const double jx = detail::uniform_in(rng, -0.8, 0.8);
  const double jy = detail::uniform_in(rng, -0.8, 0.8);
  const double shear = detail::uniform_in(rng, -0.08, 0.08);
  const double sc = detail::uniform_in(rng, 0.95, 1.05);
  const double rot = detail::uniform_in(rng, -0.05, 0.05);
  const double sigma = detail::uniform_in(rng, 1.05, 1.2);
  const double c = std::cos(rot), s = std::sin(rot);
  Image img(28, 28);
  for (auto& pts : strokes) {
    for (auto& p : pts) {
      const double dx = p.x - 14.0, dy = p.y - 14.0;
      double x = 14.0 + sc * (c * dx - s * dy);
      double y = 14.0 + sc * (s * dx + c * dy);
      x += shear * (y - 14.0) + jx + detail::uniform_in(rng, -0.25, 0.25);
      y += jy + detail::uniform_in(rng, -0.25, 0.25);
      p = {x, y};
    }
    detail::stamp_polyline(img, pts, sigma);
  }
  return img;
}

// Sampling box for random transformations. Translation bounds are absolute
// pixel offsets; scale must stay inside [0.5, 1.5]; rotation is unrestricted.
struct TransformRanges {
  double trans_x{0.0};
  double trans_y{0.0};
  double scale_lo{1.0};
  double scale_hi{1.0};
  double rot_lo{0.0};
  double rot_hi{0.0};
};

inline void validate_ranges(const TransformRanges& r, int width, int height) {
  if (!(r.trans_x >= 0.0) || !(r.trans_y >= 0.0))
    throw ConfigError("translation range must be nonnegative");
  if (r.trans_x > 0.5 * width || r.trans_y > 0.5 * height)
    throw ConfigError("translation range exceeds half the image size");
  if (!(r.scale_lo <= r.scale_hi))
    throw ConfigError("scale range must be ordered");
  if (r.scale_lo < 0.5 || r.scale_hi > 1.5)
    throw ConfigError("scale range must lie inside [0.5, 1.5]");
  if (!(r.rot_lo <= r.rot_hi))
    throw ConfigError("rotation range must be ordered");
}

// One uniform draw from the ranges; components outside the group stay at
// identity and consume no randomness.
inline TransformParams random_transform(std::mt19937_64& rng,
                                        const TransformRanges& r,
                                        GroupKind kind) {
  TransformParams eta = make_transform(
      detail::uniform_in(rng, -r.trans_x, r.trans_x),
      detail::uniform_in(rng, -r.trans_y, r.trans_y));
  if (kind == GroupKind::Similarity2D)
    eta.a = detail::uniform_in(rng, r.scale_lo, r.scale_hi);
  if (kind != GroupKind::Translation2D)
    eta.theta = signed_angle(detail::uniform_in(rng, r.rot_lo, r.rot_hi));
  return eta;
}

// n random transformations of img about its center with their ground-truth
// center-relative parameters. Deterministic per seed; n = 0 gives an empty
// list and fully collapsed ranges give n identical copies.
inline std::vector<std::pair<Image, TransformParams>> synth_transformed(
    const Image& img, int n, const TransformRanges& ranges, GroupKind kind,
    std::uint64_t seed) {
  if (n < 0) throw ConfigError("synth_transformed: n must be nonnegative");
  validate_ranges(ranges, img.width, img.height);
  std::vector<std::pair<Image, TransformParams>> out;
  out.reserve(size_t(n));
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    const TransformParams eta = random_transform(rng, ranges, kind);
    out.emplace_back(warp_centered(img, eta, kind), eta);
  }
  return out;
}

}  // namespace sparsereg

#endif  // SPARSEREG_SYNTH_HPP
