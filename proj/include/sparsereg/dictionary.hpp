#pragma once
// Parametric dictionary D = {phi_gamma = U(gamma) phi : gamma in T_d}:
// mother functions, discretization of T_d, and analytic atom rasterization.
//
// Atoms are rasterized analytically: the closed-form transformed mother is
// sampled at pixel centers (no image-warp interpolation) over an elliptical
// 4-sigma support, then renormalized to unit discrete L2 norm. The
// continuous normalizer xi is therefore absorbed into a per-atom discrete
// constant; the difference is a uniform scale carried by the coefficients.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

enum class MotherKind { GaussianAniso, Box1D };

// GaussianAniso value at (x, y) is proportional to exp(-(x/nu)^2 - y^2),
// elongated along x for nu > 1. Box1D is the unit indicator v(t) = 1 on
// [0, 1), carried at box_width pixels per unit length and embedded in 1-row
// images; it exists for the box-dictionary analysis fixtures.
struct MotherFunction {
  MotherKind kind{MotherKind::GaussianAniso};
  double nu{4.0};
  double box_width{32.0};
};

struct DictionaryConfig {
  GroupKind kind{GroupKind::Similarity2D};
  MotherFunction mother{};
  int width{75};
  int height{75};
  int trans_step{1};          // pixels
  double rot_step{kPi / 8.0};  // radians; samples cover [0, pi)
  std::vector<double> scales{1.0};  // ascending, min >= 1
};

struct Atom {
  TransformParams gamma;
  Image raster;        // unit L2 norm, nonnegative
  bool clipped{false};  // support box met the domain boundary
};

namespace detail {

// Squared elliptical cutoff radius: samples are kept where
// (ux/nu)^2 + uy^2 <= 8, i.e. within 4 sigma per axis (tail mass < 1e-6).
inline constexpr double kCutoff2 = 8.0;

// Support decisions (cutoff test, window bounds) are quantized to 1e-9 so
// sub-nanoscale parameter noise, e.g. from composing a transformation with
// its inverse, cannot flip a sample that sits exactly on the cutoff. Lattice
// atoms at quarter-turn rotations have integer offsets exactly on the
// ellipse, where an unquantized test is one ulp from either answer.
inline double snap_decision(double v) { return std::round(v * 1e9) / 1e9; }

// Axis-aligned bounding half-extents of the rotated support ellipse.
inline void support_half_extents(const MotherFunction& m,
                                 const TransformParams& g, double& hx,
                                 double& hy) {
  const double A = std::sqrt(kCutoff2) * m.nu * g.a;  // along atom x
  const double B = std::sqrt(kCutoff2) * g.a;         // along atom y
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  hx = std::sqrt(A * A * c * c + B * B * s * s);
  hy = std::sqrt(A * A * s * s + B * B * c * c);
}

}  // namespace detail

// Unnormalized samples of U(gamma) phi over the support bounding box, in
// absolute pixel coordinates, ignoring the image domain.
struct SupportPatch {
  int x0{0}, y0{0};  // top-left sample coordinate
  int w{0}, h{0};
  std::vector<double> values;
  double norm2{0.0};  // sum of squares over the whole box

  double value(int x, int y) const {  // absolute coordinates
    return values[size_t(y - y0) * w + (x - x0)];
  }
};

inline SupportPatch compute_support_patch(const TransformParams& gamma,
                                          const MotherFunction& mother) {
  SupportPatch p;
  if (mother.kind == MotherKind::GaussianAniso) {
    // The mother is centrally symmetric, so theta and theta + pi sample the
    // same function. Folding into [0, pi) keeps stabilizer twins bit-identical
    // (unfolded angles flip inclusion of samples lying exactly on the cutoff).
    TransformParams g = gamma;
    g.theta = normalize_angle(g.theta);
    if (g.theta >= kPi) g.theta -= kPi;
    double hx, hy;
    detail::support_half_extents(mother, g, hx, hy);
    p.x0 = int(std::ceil(detail::snap_decision(g.b.x - hx)));
    p.y0 = int(std::ceil(detail::snap_decision(g.b.y - hy)));
    const int x1 = int(std::floor(detail::snap_decision(g.b.x + hx)));
    const int y1 = int(std::floor(detail::snap_decision(g.b.y + hy)));
    p.w = std::max(0, x1 - p.x0 + 1);
    p.h = std::max(0, y1 - p.y0 + 1);
    p.values.assign(size_t(p.w) * p.h, 0.0);
    const double c = std::cos(-g.theta), s = std::sin(-g.theta);
    const double inv_a = 1.0 / g.a;
    for (int y = p.y0; y < p.y0 + p.h; ++y) {
      for (int x = p.x0; x < p.x0 + p.w; ++x) {
        const double dx = x - g.b.x, dy = y - g.b.y;
        const double ux = (c * dx - s * dy) * inv_a;
        const double uy = (s * dx + c * dy) * inv_a;
        const double e = (ux / mother.nu) * (ux / mother.nu) + uy * uy;
        if (detail::snap_decision(e) <= detail::kCutoff2) {
          const double v = std::exp(-e);
          p.values[size_t(y - p.y0) * p.w + (x - p.x0)] = v;
          p.norm2 += v * v;
        }
      }
    }
    return p;
  }
  // Box1D: indicator of [b.x, b.x + box_width) on the single row nearest b.y,
  // point-sampled at pixel centers so integer-offset inner products match the
  // continuous overlap formula exactly.
  const double width = mother.box_width * gamma.a;
  p.x0 = int(std::ceil(detail::snap_decision(gamma.b.x)));
  const int x1 = int(std::ceil(detail::snap_decision(gamma.b.x + width))) - 1;
  p.y0 = int(std::lround(detail::snap_decision(gamma.b.y)));
  p.w = std::max(0, x1 - p.x0 + 1);
  p.h = 1;
  p.values.assign(size_t(p.w), 1.0);
  p.norm2 = double(p.w);
  return p;
}

// Rasterizes a dictionary atom: in-domain samples renormalized to unit
// discrete norm. Throws when the support leaves the domain entirely.
inline Atom rasterize_atom(const TransformParams& gamma,
                           const DictionaryConfig& cfg) {
  const SupportPatch patch = compute_support_patch(gamma, cfg.mother);
  Atom atom;
  atom.gamma = gamma;
  atom.raster = Image(cfg.width, cfg.height);
  const int xa = std::max(patch.x0, 0);
  const int ya = std::max(patch.y0, 0);
  const int xb = std::min(patch.x0 + patch.w, cfg.width);
  const int yb = std::min(patch.y0 + patch.h, cfg.height);
  atom.clipped = (xa != patch.x0 || ya != patch.y0 ||
                  xb != patch.x0 + patch.w || yb != patch.y0 + patch.h);
  double norm2 = 0.0;
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) {
      const double v = std::max(0.0, patch.value(x, y));
      norm2 += v * v;
    }
  if (norm2 < 1e-12)
    throw std::invalid_argument("atom escapes domain: " + to_string(gamma));
  const double inv = 1.0 / std::sqrt(norm2);
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x)
      atom.raster.at(x, y) = std::max(0.0, patch.value(x, y)) * inv;
  return atom;
}

// Rasterization for transformed patterns (occlusion-tolerant): normalized by
// the full support-box norm as if the domain were unbounded, then clipped,
// so an atom leaving the raster contributes only its in-domain energy.
struct VirtualAtom {
  TransformParams gamma;
  Image raster;
  bool escaped{false};      // some support fell outside the raster
  double in_energy{1.0};    // squared in-domain norm, <= 1
};

inline VirtualAtom rasterize_atom_virtual(const TransformParams& gamma,
                                          const DictionaryConfig& cfg) {
  const SupportPatch patch = compute_support_patch(gamma, cfg.mother);
  VirtualAtom atom;
  atom.gamma = gamma;
  atom.raster = Image(cfg.width, cfg.height);
  if (patch.norm2 < 1e-12) {  // degenerate support (sub-pixel atom)
    atom.escaped = true;
    atom.in_energy = 0.0;
    return atom;
  }
  const int xa = std::max(patch.x0, 0);
  const int ya = std::max(patch.y0, 0);
  const int xb = std::min(patch.x0 + patch.w, cfg.width);
  const int yb = std::min(patch.y0 + patch.h, cfg.height);
  atom.escaped = (xa != patch.x0 || ya != patch.y0 ||
                  xb != patch.x0 + patch.w || yb != patch.y0 + patch.h);
  const double inv = 1.0 / std::sqrt(patch.norm2);
  double in2 = 0.0;
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) {
      const double v = std::max(0.0, patch.value(x, y)) * inv;
      atom.raster.at(x, y) = v;
      in2 += v * v;
    }
  atom.in_energy = in2;
  return atom;
}

// ---------------------------------------------------------------------------
// T_d discretization.

namespace detail {

inline bool rotation_group(GroupKind kind) {
  return kind != GroupKind::Translation2D;
}

}  // namespace detail

// Rotation samples for the config: [0, pi) at rot_step for anisotropic
// mothers under a rotation group (angles beyond pi duplicate atoms through
// the two-element stabilizer); {0} otherwise. An isotropic nu = 1 Gaussian
// collapses the rotation parameter entirely (quotient by SO(2)).
inline std::vector<double> rotation_samples(const DictionaryConfig& cfg) {
  std::vector<double> rots{0.0};
  if (!detail::rotation_group(cfg.kind)) return rots;
  if (cfg.mother.kind == MotherKind::GaussianAniso && cfg.mother.nu == 1.0)
    return rots;
  if (!(cfg.rot_step > 0.0))
    throw std::invalid_argument("rotation step must be positive");
  for (double r = cfg.rot_step; r < kPi - 1e-12; r += cfg.rot_step)
    rots.push_back(r);
  return rots;
}

// Effective stabilizer used when building candidate sets for this config.
inline Stabilizer effective_stabilizer(const DictionaryConfig& cfg) {
  if (!detail::rotation_group(cfg.kind)) return Stabilizer{};
  if (cfg.mother.kind == MotherKind::GaussianAniso && cfg.mother.nu == 1.0)
    return Stabilizer{};  // rotation collapsed instead
  if (cfg.mother.kind == MotherKind::Box1D) return Stabilizer{};
  return stabilizer_of_gaussian(cfg.mother.nu, cfg.kind);
}

// Fraction of a centered atom's support energy that stays inside the domain.
inline double centered_energy_fraction(const DictionaryConfig& cfg,
                                       double scale, double rotation) {
  const auto gamma = make_transform(0.5 * (cfg.width - 1),
                                    0.5 * (cfg.height - 1), scale, rotation);
  const SupportPatch patch = compute_support_patch(gamma, cfg.mother);
  if (patch.norm2 <= 0.0) return 0.0;
  double in2 = 0.0;
  const int xa = std::max(patch.x0, 0), ya = std::max(patch.y0, 0);
  const int xb = std::min(patch.x0 + patch.w, cfg.width);
  const int yb = std::min(patch.y0 + patch.h, cfg.height);
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) {
      const double v = patch.value(x, y);
      in2 += v * v;
    }
  return in2 / patch.norm2;
}

// Scales kept after the 99%-energy-inside-domain rule, checked at the worst
// rotation sample; dropped scales are reported via `dropped`.
inline std::vector<double> filter_scales(const DictionaryConfig& cfg,
                                         std::vector<double>* dropped) {
  if (cfg.scales.empty()) throw std::invalid_argument("empty scale list");
  if (!std::is_sorted(cfg.scales.begin(), cfg.scales.end()))
    throw std::invalid_argument("scale list must be ascending");
  if (cfg.scales.front() < 1.0)
    throw std::invalid_argument("scales must be >= 1");
  std::vector<double> kept;
  for (double s : cfg.scales) {
    double worst = 1.0;
    for (double r : rotation_samples(cfg))
      worst = std::min(worst, centered_energy_fraction(cfg, s, r));
    if (worst >= 0.99) kept.push_back(s);
    else if (dropped) dropped->push_back(s);
  }
  if (kept.empty()) throw std::invalid_argument("all scales fail the 99%-energy rule");
  return kept;
}

// Full discretized parameter set T_d: translation grid x rotations x scales,
// one representative per stabilizer coset (rotations span [0, pi) only).
inline std::vector<TransformParams> build_discretization(
    const DictionaryConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0)
    throw std::invalid_argument("dictionary raster must be nonempty");
  if (cfg.trans_step <= 0)
    throw std::invalid_argument("translation step must be positive");
  if (cfg.mother.kind == MotherKind::Box1D &&
      cfg.kind != GroupKind::Translation2D)
    throw std::invalid_argument("Box1D dictionaries are translation-only");
  const auto rots = rotation_samples(cfg);
  std::vector<double> scales{1.0};
  if (cfg.kind == GroupKind::Similarity2D) scales = filter_scales(cfg, nullptr);
  std::vector<TransformParams> out;
  const int ymax = (cfg.mother.kind == MotherKind::Box1D) ? 1 : cfg.height;
  for (double s : scales)
    for (double r : rots)
      for (int y = 0; y < ymax; y += cfg.trans_step)
        for (int x = 0; x < cfg.width; x += cfg.trans_step)
          out.push_back(make_transform(double(x), double(y), s, r));
  if (out.empty()) throw std::invalid_argument("empty discretization");
  return out;
}

// ---------------------------------------------------------------------------
// Operational dictionary with per-(scale, rotation) sample templates and
// prefix sums of squares, so pursuit can renormalize boundary-clipped atoms
// per translation in O(1).

struct AtomTemplate {
  double scale{1.0};
  double rotation{0.0};
  SupportPatch patch;              // anchored at b = (0, 0)
  std::vector<double> sq_prefix;   // (w+1) x (h+1) prefix sums of values^2

  // Sum of squared samples over the patch rows [ya, yb) x cols [xa, xb),
  // in absolute coordinates relative to anchor 0.
  double clipped_norm2(int xa, int ya, int xb, int yb) const {
    xa = std::max(xa, patch.x0); ya = std::max(ya, patch.y0);
    xb = std::min(xb, patch.x0 + patch.w); yb = std::min(yb, patch.y0 + patch.h);
    if (xa >= xb || ya >= yb) return 0.0;
    const int W = patch.w;
    auto P = [&](int x, int y) {
      return sq_prefix[size_t(y - patch.y0) * (W + 1) + (x - patch.x0)];
    };
    return P(xb, yb) - P(xa, yb) - P(xb, ya) + P(xa, ya);
  }
};

struct Dictionary {
  DictionaryConfig cfg;
  std::vector<double> rotations;
  std::vector<double> scales;
  std::vector<double> dropped_scales;
  std::vector<std::string> warnings;
  Stabilizer stab;
  std::vector<AtomTemplate> templates;  // [scale_index * rotations + rot_index]

  size_t atom_count() const {
    const size_t tx = size_t((cfg.width + cfg.trans_step - 1) / cfg.trans_step);
    const size_t ty = (cfg.mother.kind == MotherKind::Box1D)
                          ? 1
                          : size_t((cfg.height + cfg.trans_step - 1) / cfg.trans_step);
    return templates.size() * tx * ty;
  }
};

inline Dictionary build_dictionary(const DictionaryConfig& cfg) {
  Dictionary d;
  d.cfg = cfg;
  if (cfg.mother.kind == MotherKind::Box1D &&
      cfg.kind != GroupKind::Translation2D)
    throw std::invalid_argument("Box1D dictionaries are translation-only");
  d.rotations = rotation_samples(cfg);
  d.scales = filter_scales(cfg, &d.dropped_scales);
  for (double s : d.dropped_scales)
    d.warnings.push_back("scale " + std::to_string(s) +
                         " dropped: centered atom keeps < 99% energy in domain");
  d.stab = effective_stabilizer(cfg);
  std::vector<double> tmpl_scales{1.0};
  if (cfg.kind == GroupKind::Similarity2D) tmpl_scales = d.scales;
  for (double s : tmpl_scales) {
    for (double r : d.rotations) {
      AtomTemplate t;
      t.scale = s;
      t.rotation = r;
      t.patch = compute_support_patch(make_transform(0, 0, s, r), cfg.mother);
      const int W = t.patch.w, H = t.patch.h;
      t.sq_prefix.assign(size_t(W + 1) * (H + 1), 0.0);
      for (int y = 0; y < H; ++y) {
        double row = 0.0;
        for (int x = 0; x < W; ++x) {
          const double v = t.patch.values[size_t(y) * W + x];
          row += v * v;
          t.sq_prefix[size_t(y + 1) * (W + 1) + (x + 1)] =
              t.sq_prefix[size_t(y) * (W + 1) + (x + 1)] + row;
        }
      }
      d.templates.push_back(std::move(t));
    }
  }
  return d;
}

// Max absolute pairwise correlation over distinct atoms.
inline double coherence(const std::vector<Atom>& atoms) {
  if (atoms.size() < 2)
    throw std::invalid_argument("coherence needs at least two atoms");
  double best = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i)
    for (size_t j = i + 1; j < atoms.size(); ++j)
      best = std::max(best,
                      std::abs(inner_product(atoms[i].raster, atoms[j].raster)));
  return best;
}

// ---------------------------------------------------------------------------
// Continuous (closed-form) L2 inner products between unit-norm atoms. These
// are exact in L2(R^2)/L2(R) and serve both the transformation-inconsistency
// sweeps and the tests as an interpolation-free oracle.

// 2x2 SPD precision matrix of U(gamma) phi for the anisotropic Gaussian:
// exp(-(x-b)^T M (x-b)) with M = R_theta diag(1/(nu a)^2, 1/a^2) R_{-theta}.
struct GaussMoment {
  double mxx, mxy, myy, det;
};

inline GaussMoment gaussian_precision(double nu, const TransformParams& g) {
  const double l1 = 1.0 / (nu * nu * g.a * g.a);
  const double l2 = 1.0 / (g.a * g.a);
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  GaussMoment m;
  m.mxx = l1 * c * c + l2 * s * s;
  m.myy = l1 * s * s + l2 * c * c;
  m.mxy = (l1 - l2) * c * s;
  m.det = m.mxx * m.myy - m.mxy * m.mxy;
  return m;
}

inline double atom_inner_continuous(const MotherFunction& mother,
                                    const TransformParams& g,
                                    const TransformParams& d) {
  if (mother.kind == MotherKind::GaussianAniso) {
    const GaussMoment m1 = gaussian_precision(mother.nu, g);
    const GaussMoment m2 = gaussian_precision(mother.nu, d);
    const double sxx = m1.mxx + m2.mxx;
    const double sxy = m1.mxy + m2.mxy;
    const double syy = m1.myy + m2.myy;
    const double dets = sxx * syy - sxy * sxy;
    // W = M1 S^{-1} M2; quadratic form at db = b2 - b1.
    const double dx = d.b.x - g.b.x, dy = d.b.y - g.b.y;
    const double inv = 1.0 / dets;
    // S^{-1} = inv * [syy, -sxy; -sxy, sxx]
    const double a11 = (m1.mxx * syy - m1.mxy * sxy) * inv;
    const double a12 = (-m1.mxx * sxy + m1.mxy * sxx) * inv;
    const double a21 = (m1.mxy * syy - m1.myy * sxy) * inv;
    const double a22 = (-m1.mxy * sxy + m1.myy * sxx) * inv;
    const double w11 = a11 * m2.mxx + a12 * m2.mxy;
    const double w12 = a11 * m2.mxy + a12 * m2.myy;
    const double w21 = a21 * m2.mxx + a22 * m2.mxy;
    const double w22 = a21 * m2.mxy + a22 * m2.myy;
    const double q = w11 * dx * dx + (w12 + w21) * dx * dy + w22 * dy * dy;
    return 2.0 * std::pow(m1.det * m2.det, 0.25) / std::sqrt(dets) *
           std::exp(-q);
  }
  // Box1D: overlap of [b.x, b.x+L) intervals on the same row, in box units.
  if (std::abs(d.b.y - g.b.y) > 0.5) return 0.0;
  const double L = mother.box_width;
  const double delta = std::abs(d.b.x - g.b.x) / L;
  return std::max(0.0, 1.0 - delta);
}

inline double atom_distance_continuous(const MotherFunction& mother,
                                       const TransformParams& g,
                                       const TransformParams& d) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * atom_inner_continuous(mother, g, d)));
}

}  // namespace sparsereg
