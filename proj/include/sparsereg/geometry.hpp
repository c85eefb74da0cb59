#pragma once
// Parameter-space algebra for the planar transformation groups used by the
// registration pipeline: translations, rigid motions SE(2), and similarities
// SIM(2), plus the finite stabilizer subgroups of anisotropic atoms.
//
// Coordinate convention (used everywhere): x to the right, y downward,
// matching raster order; a positive rotation maps +x toward +y.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsereg {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

enum class GroupKind { Translation2D, SpecialEuclidean2D, Similarity2D };

// Dimension P of the group's parameter space.
inline int param_count(GroupKind kind) {
  switch (kind) {
    case GroupKind::Translation2D: return 2;
    case GroupKind::SpecialEuclidean2D: return 3;
    case GroupKind::Similarity2D: return 4;
  }
  throw std::invalid_argument("unknown group kind");
}

inline std::string group_name(GroupKind kind) {
  switch (kind) {
    case GroupKind::Translation2D: return "translation2d";
    case GroupKind::SpecialEuclidean2D: return "se2";
    case GroupKind::Similarity2D: return "sim2";
  }
  throw std::invalid_argument("unknown group kind");
}

inline GroupKind group_from_name(const std::string& name) {
  if (name == "translation2d") return GroupKind::Translation2D;
  if (name == "se2") return GroupKind::SpecialEuclidean2D;
  if (name == "sim2") return GroupKind::Similarity2D;
  throw std::invalid_argument("unknown group name: " + name);
}

struct Vec2 {
  double x{0.0};
  double y{0.0};
};

inline Vec2 operator+(Vec2 u, Vec2 v) { return {u.x + v.x, u.y + v.y}; }
inline Vec2 operator-(Vec2 u, Vec2 v) { return {u.x - v.x, u.y - v.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Rotation by theta: maps (1,0) to (cos theta, sin theta).
inline Vec2 rotate(double theta, Vec2 v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline double normalize_angle(double theta) {
  double t = std::fmod(theta, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  if (t >= 2.0 * kPi) t = 0.0;  // fmod rounding can land exactly on 2*pi
  return t;
}

// Fold an angle into (-pi, pi].
inline double signed_angle(double theta) {
  double t = normalize_angle(theta);
  if (t > kPi) t -= 2.0 * kPi;
  return t;
}

// Group element (b, a, theta). a = 1 for non-similarity groups, theta = 0
// for Translation2D; theta is kept normalized to [0, 2*pi).
struct TransformParams {
  Vec2 b{0.0, 0.0};
  double a{1.0};
  double theta{0.0};
};

inline TransformParams identity_transform() { return TransformParams{}; }

inline TransformParams make_transform(double bx, double by, double a = 1.0,
                                      double theta = 0.0) {
  if (!(a > 0.0)) throw std::invalid_argument("transform scale must be positive");
  return TransformParams{{bx, by}, a, normalize_angle(theta)};
}

// Checks the parameter constraints of `kind` (tolerance for roundtrips).
inline void check_conforms(const TransformParams& t, GroupKind kind) {
  if (!(t.a > 0.0)) throw std::invalid_argument("transform scale must be positive");
  const double tol = 1e-12;
  if (kind != GroupKind::Similarity2D && std::abs(t.a - 1.0) > tol)
    throw std::invalid_argument("nonunit scale under a non-similarity group");
  if (kind == GroupKind::Translation2D &&
      std::abs(signed_angle(t.theta)) > tol)
    throw std::invalid_argument("nonzero rotation under Translation2D");
}

// eta o eta': (b + a R_theta b', a a', theta + theta').
inline TransformParams compose(const TransformParams& eta,
                               const TransformParams& etaPrime,
                               GroupKind kind) {
  check_conforms(eta, kind);
  check_conforms(etaPrime, kind);
  TransformParams out;
  out.b = eta.b + eta.a * rotate(eta.theta, etaPrime.b);
  out.a = eta.a * etaPrime.a;
  out.theta = normalize_angle(eta.theta + etaPrime.theta);
  if (kind == GroupKind::Translation2D) { out.a = 1.0; out.theta = 0.0; }
  if (kind == GroupKind::SpecialEuclidean2D) out.a = 1.0;
  return out;
}

// Solves eta o inv = identity: inv = (-R_{-theta} b / a, 1/a, -theta).
inline TransformParams inverse(const TransformParams& eta, GroupKind kind) {
  check_conforms(eta, kind);
  TransformParams out;
  out.a = 1.0 / eta.a;
  out.theta = normalize_angle(-eta.theta);
  out.b = (-1.0 / eta.a) * rotate(-eta.theta, eta.b);
  if (kind == GroupKind::Translation2D) { out.a = 1.0; out.theta = 0.0; }
  if (kind == GroupKind::SpecialEuclidean2D) out.a = 1.0;
  return out;
}

// Forward point action x -> b + a R_theta x (the map whose inverse appears
// inside the unitary representation a^{-1} f(R_{-theta}/a (x - b))).
inline Vec2 apply_to_point(const TransformParams& eta, Vec2 x) {
  return eta.b + eta.a * rotate(eta.theta, x);
}

// Size of an element as a displacement from the identity; used only to break
// ties deterministically toward the smallest transformation.
inline double distance_to_identity(const TransformParams& t) {
  return norm(t.b) + std::abs(std::log(t.a)) + std::abs(signed_angle(t.theta));
}

inline bool params_close(const TransformParams& u, const TransformParams& v,
                         double tol) {
  return std::abs(u.b.x - v.b.x) <= tol && std::abs(u.b.y - v.b.y) <= tol &&
         std::abs(u.a - v.a) <= tol &&
         std::abs(signed_angle(u.theta - v.theta)) <= tol;
}

// Finite stabilizer subgroup S_phi; always contains the identity.
struct Stabilizer {
  std::vector<TransformParams> elements{identity_transform()};
};

// Stabilizer of the anisotropic Gaussian mother function under `kind`.
// nu > 1: the ellipse-shaped level sets admit exactly {id, rotation-by-pi}
// when the group contains rotations. nu = 1 would give the infinite subgroup
// SO(2); callers must collapse the rotation parameter instead.
inline Stabilizer stabilizer_of_gaussian(double nu, GroupKind kind) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  Stabilizer s;
  if (kind == GroupKind::Translation2D) return s;
  if (nu == 1.0)
    throw std::invalid_argument(
        "infinite stabilizer: isotropic generator under a rotation group");
  if (nu < 1.0)
    throw std::invalid_argument("nu must be >= 1 (major axis along x)");
  s.elements.push_back(make_transform(0.0, 0.0, 1.0, kPi));
  return s;
}

// Is eta equal to etaPrime composed with some stabilizer element?
inline bool equal_mod_stabilizer(const TransformParams& eta,
                                 const TransformParams& etaPrime,
                                 const Stabilizer& stab, GroupKind kind,
                                 double tol) {
  for (const auto& pi : stab.elements) {
    if (params_close(eta, compose(etaPrime, pi, kind), tol)) return true;
  }
  return false;
}

// Plain-text form used in CLI output and CSV: "bx by a theta".
inline std::string to_string(const TransformParams& t) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.10g %.10g %.10g %.10g", t.b.x, t.b.y,
                t.a, t.theta);
  return buf;
}

inline TransformParams transform_from_string(const std::string& text) {
  double bx, by, a, theta;
  if (std::sscanf(text.c_str(), "%lf %lf %lf %lf", &bx, &by, &a, &theta) != 4)
    throw std::invalid_argument("expected \"bx by a theta\": " + text);
  return make_transform(bx, by, a, theta);
}

}  // namespace sparsereg
