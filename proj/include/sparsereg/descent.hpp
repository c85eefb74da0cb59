#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

// Parameters of the metric-preconditioned descent shared by registration
// refinement and the pixel-domain baseline.
struct RefinementConfig {
  int max_iters{50};
  double initial_step{1.0};
  double shrink{0.5};
  double sufficient_decrease{1e-4};
  double fd_trans{0.5};     // pixels
  double fd_logscale{0.01};
  double fd_rot{0.01};      // radians
  double ridge{1e-8};

  void validate() const {
    if (max_iters < 1 || initial_step <= 0 || shrink <= 0 || shrink >= 1 ||
        sufficient_decrease <= 0 || fd_trans <= 0 || fd_logscale <= 0 ||
        fd_rot <= 0 || ridge <= 0)
      throw std::invalid_argument("refinement config fields must be positive");
  }
};

struct DescentResult {
  TransformParams eta;
  double distance{0.0};        // ||moving(eta) - target||_2 at the final eta
  bool metric_fallback{false};  // identity metric was used at least once
  int iterations{0};
  std::vector<double> j_trace;  // squared objective, non-increasing
};

namespace detail {

// Coordinates tau of a group element: [b_x, b_y], then log a under SIM(2),
// then theta for the rotation groups. Scale is parametrized by its logarithm
// so one finite-difference step means the same relative change everywhere.
inline void to_tau(const TransformParams& t, GroupKind kind, double* tau) {
  tau[0] = t.b.x;
  tau[1] = t.b.y;
  if (kind == GroupKind::SpecialEuclidean2D) tau[2] = t.theta;
  if (kind == GroupKind::Similarity2D) {
    tau[2] = std::log(t.a);
    tau[3] = t.theta;
  }
}

inline TransformParams from_tau(const double* tau, GroupKind kind) {
  switch (kind) {
    case GroupKind::Translation2D:
      return make_transform(tau[0], tau[1]);
    case GroupKind::SpecialEuclidean2D:
      return make_transform(tau[0], tau[1], 1.0, tau[2]);
    default:
      return make_transform(tau[0], tau[1], std::exp(tau[2]), tau[3]);
  }
}

inline double fd_step(const RefinementConfig& rcfg, GroupKind kind, int i) {
  if (i < 2) return rcfg.fd_trans;
  if (kind == GroupKind::Similarity2D && i == 2) return rcfg.fd_logscale;
  return rcfg.fd_rot;
}

// Gaussian elimination with partial pivoting for the tiny metric systems
// (P <= 4). Returns false when a pivot degenerates.
inline bool solve_small(double G[4][4], const double* b, int P, double* x) {
  double A[4][5];
  for (int r = 0; r < P; ++r) {
    for (int c = 0; c < P; ++c) A[r][c] = G[r][c];
    A[r][P] = b[r];
  }
  for (int col = 0; col < P; ++col) {
    int piv = col;
    for (int r = col + 1; r < P; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-14) return false;
    if (piv != col)
      for (int c = col; c <= P; ++c) std::swap(A[piv][c], A[col][c]);
    for (int r = col + 1; r < P; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c <= P; ++c) A[r][c] -= f * A[col][c];
    }
  }
  for (int r = P - 1; r >= 0; --r) {
    double s = A[r][P];
    for (int c = r + 1; c < P; ++c) s -= A[r][c] * x[c];
    x[r] = s / A[r][r];
  }
  return true;
}

}  // namespace detail

// Minimizes J(tau) = ||moving(eta(tau)) - target||^2 by the induction
// tau <- tau - w G^{-1} grad J, where G is the ridge-regularized Gram matrix
// of the per-parameter derivative images of moving() (the pullback metric)
// and w comes from a backtracking line search with the Armijo test. J never
// increases; the iteration stops when no step achieves sufficient decrease.
inline DescentResult riemannian_descent(
    const std::function<Image(const TransformParams&)>& moving,
    const Image& target, GroupKind kind, const TransformParams& start,
    const RefinementConfig& rcfg = {}) {
  rcfg.validate();
  check_conforms(start, kind);
  const int P = param_count(kind);
  double tau[4] = {0, 0, 0, 0};
  detail::to_tau(start, kind, tau);

  const auto J = [&](const double* t) {
    const Image m = moving(detail::from_tau(t, kind));
    const double d = l2_distance(m, target);
    return d * d;
  };

  DescentResult res;
  res.eta = start;
  double j_cur = J(tau);
  res.j_trace.push_back(j_cur);

  for (int it = 0; it < rcfg.max_iters; ++it) {
    // One pair of off-center evaluations per parameter feeds both the
    // central-difference gradient of J and the metric Gram matrix.
    double grad[4] = {0, 0, 0, 0};
    std::vector<Image> dm;
    dm.reserve(P);
    for (int i = 0; i < P; ++i) {
      const double h = detail::fd_step(rcfg, kind, i);
      double tp[4], tm[4];
      for (int k = 0; k < 4; ++k) tp[k] = tm[k] = tau[k];
      tp[i] += h;
      tm[i] -= h;
      const Image mp = moving(detail::from_tau(tp, kind));
      const Image mm = moving(detail::from_tau(tm, kind));
      const double jp = l2_distance(mp, target);
      const double jm = l2_distance(mm, target);
      grad[i] = (jp * jp - jm * jm) / (2 * h);
      Image d(mp.width, mp.height);
      add_scaled(d, mp, 1.0 / (2 * h));
      add_scaled(d, mm, -1.0 / (2 * h));
      dm.push_back(std::move(d));
    }

    double G[4][4] = {};
    double tr = 0.0;
    for (int i = 0; i < P; ++i) {
      for (int j = i; j < P; ++j) {
        G[i][j] = G[j][i] = inner_product(dm[i], dm[j]);
      }
      tr += G[i][i];
    }
    const double reg = rcfg.ridge * (1.0 + tr / P);
    for (int i = 0; i < P; ++i) G[i][i] += reg;

    double dir[4] = {0, 0, 0, 0};
    bool solved = detail::solve_small(G, grad, P, dir);
    double slope = 0.0;
    if (solved) {
      for (int i = 0; i < P; ++i) {
        dir[i] = -dir[i];
        slope += grad[i] * dir[i];
      }
    }
    if (!solved || slope >= 0.0) {  // fall back to the raw negative gradient
      res.metric_fallback = true;
      slope = 0.0;
      for (int i = 0; i < P; ++i) {
        dir[i] = -grad[i];
        slope -= grad[i] * grad[i];
      }
    }
    if (slope >= -1e-18) break;  // flat: numerically at a stationary point

    double w = rcfg.initial_step;
    bool accepted = false;
    while (w > 1e-10 * rcfg.initial_step) {
      double cand[4];
      for (int k = 0; k < 4; ++k) cand[k] = tau[k];
      for (int i = 0; i < P; ++i) cand[i] += w * dir[i];
      const double j_new = J(cand);
      if (j_new <= j_cur + rcfg.sufficient_decrease * w * slope) {
        for (int k = 0; k < 4; ++k) tau[k] = cand[k];
        j_cur = j_new;
        accepted = true;
        break;
      }
      w *= rcfg.shrink;
    }
    if (!accepted) break;
    res.j_trace.push_back(j_cur);
    res.iterations = it + 1;
  }

  res.eta = detail::from_tau(tau, kind);
  res.distance = std::sqrt(j_cur);
  return res;
}

}  // namespace sparsereg
