#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sparsereg/descent.hpp"
#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"
#include "sparsereg/linalg.hpp"

namespace sparsereg {

inline double euclidean_distance(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("euclidean_distance: dimension mismatch");
  return l2_distance(a, b);
}

// First-order model of the transformation manifold at the identity: the base
// image plus one derivative image per transformation parameter, all from
// central finite differences of the centered warp.
struct TangentBasis {
  Image base;
  std::vector<Image> tangents;
};

inline TangentBasis tangent_basis(const Image& img, GroupKind kind,
                                  const RefinementConfig& rcfg = {}) {
  TangentBasis tb;
  tb.base = img;
  const int P = param_count(kind);
  for (int i = 0; i < P; ++i) {
    const double h = detail::fd_step(rcfg, kind, i);
    double tau[4] = {0, 0, 0, 0};
    tau[i] = h;
    const Image fwd = warp_centered(img, detail::from_tau(tau, kind), kind);
    tau[i] = -h;
    const Image bwd = warp_centered(img, detail::from_tau(tau, kind), kind);
    Image t(img.width, img.height);
    for (size_t k = 0; k < t.pixels.size(); ++k)
      t.pixels[k] = (fwd.pixels[k] - bwd.pixels[k]) / (2 * h);
    tb.tangents.push_back(std::move(t));
  }
  return tb;
}

// Two-sided tangent distance: the closest approach of the two first-order
// transformation manifolds, solved as one joint least-squares system over
// both coefficient vectors. Never exceeds the Euclidean distance (zero
// coefficients are feasible). A rank-deficient joint system is solved with
// the minimum-norm solution and flagged through rank_deficient.
inline double tangent_distance(const Image& i1, const Image& i2,
                               GroupKind kind = GroupKind::Similarity2D,
                               const RefinementConfig& rcfg = {},
                               bool* rank_deficient = nullptr) {
  if (i1.width != i2.width || i1.height != i2.height)
    throw std::invalid_argument("tangent_distance: dimension mismatch");
  const TangentBasis t1 = tangent_basis(i1, kind, rcfg);
  const TangentBasis t2 = tangent_basis(i2, kind, rcfg);
  const int P = param_count(kind);
  const int n = 2 * P;

  // Residual model r(x) = (i1 - i2) + B x, columns of B being the tangents
  // of i1 followed by the negated tangents of i2.
  const auto col = [&](int j) -> const Image& {
    return j < P ? t1.tangents[j] : t2.tangents[j - P];
  };
  const auto sgn = [&](int j) { return j < P ? 1.0 : -1.0; };

  Image r0(i1.width, i1.height);
  for (size_t k = 0; k < r0.pixels.size(); ++k)
    r0.pixels[k] = i1.pixels[k] - i2.pixels[k];

  std::vector<double> G(size_t(n) * n), rhs(n), x;
  for (int a = 0; a < n; ++a) {
    rhs[a] = -sgn(a) * inner_product(col(a), r0);
    for (int b = a; b < n; ++b)
      G[size_t(a) * n + b] = G[size_t(b) * n + a] =
          sgn(a) * sgn(b) * inner_product(col(a), col(b));
  }
  const bool deficient = detail::solve_spd_min_norm(G, n, rhs, x);
  if (rank_deficient) *rank_deficient = deficient;

  Image r = r0;
  for (int a = 0; a < n; ++a)
    add_scaled(r, col(a), sgn(a) * x[a]);
  return std::min(l2_norm(r), l2_norm(r0));
}

// Direct pixel-domain registration: gradient descent of
// ||warp(i1, eta) - i2|| from the identity, with the same step machinery the
// sparse refinement uses. Local: converges only when the start is within the
// basin of the optimum.
inline DescentResult gd_distance(const Image& i1, const Image& i2,
                                 GroupKind kind = GroupKind::Similarity2D,
                                 const RefinementConfig& rcfg = {}) {
  if (i1.width != i2.width || i1.height != i2.height)
    throw std::invalid_argument("gd_distance: dimension mismatch");
  const auto moving = [&i1, kind](const TransformParams& eta) {
    return warp_centered(i1, eta, kind);
  };
  return riemannian_descent(moving, i2, kind, identity_transform(), rcfg);
}

}  // namespace sparsereg
