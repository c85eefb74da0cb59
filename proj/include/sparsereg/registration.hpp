#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "sparsereg/descent.hpp"
#include "sparsereg/dictionary.hpp"
#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"
#include "sparsereg/sparse.hpp"

namespace sparsereg {

// One restricted candidate delta_i o pi o gamma_j^{-1}: the transformation
// that maps source atom j of p onto target atom i of q, modulo the
// stabilizer element pi.
struct Candidate {
  TransformParams eta;
  int i{0};
  int j{0};
  TransformParams pi;
};

struct CandidateSet {
  std::vector<Candidate> items;  // deduplicated within 1e-9
  size_t raw_count{0};           // |S_phi| * K1 * K2 before deduplication
};

// Restricted candidate set of the registration problem: every atom-to-atom
// map between the two expansions, extended over the stabilizer.
inline CandidateSet candidate_set(const SparseApprox& p, const SparseApprox& q,
                                  const Stabilizer& stab) {
  if (p.size() == 0 || q.size() == 0)
    throw std::invalid_argument("candidate_set: empty approximation");
  if (p.cfg.kind != q.cfg.kind)
    throw std::invalid_argument("candidate_set: mismatched groups");
  const GroupKind kind = p.cfg.kind;
  CandidateSet cs;
  cs.raw_count = stab.elements.size() * p.size() * q.size();
  cs.items.reserve(cs.raw_count);
  for (int i = 0; i < int(q.size()); ++i) {
    for (const auto& pi : stab.elements) {
      const TransformParams mid = compose(q.supports[i], pi, kind);
      for (int j = 0; j < int(p.size()); ++j) {
        const TransformParams eta =
            compose(mid, inverse(p.supports[j], kind), kind);
        bool dup = false;
        for (const auto& c : cs.items)
          if (params_close(eta, c.eta, 1e-9)) {
            dup = true;
            break;
          }
        if (!dup) cs.items.push_back({eta, i, j, pi});
      }
    }
  }
  return cs;
}

// U(eta)p synthesized on the image domain: each support composed with eta and
// rasterized virtually (unit full-support norm, in-domain part kept).
inline Image synthesize_transformed(const SparseApprox& p,
                                    const TransformParams& eta) {
  Image out(p.cfg.width, p.cfg.height);
  for (size_t k = 0; k < p.size(); ++k) {
    const auto g = compose(eta, p.supports[k], p.cfg.kind);
    add_scaled(out, rasterize_atom_virtual(g, p.cfg).raster, p.coeffs[k]);
  }
  return out;
}

// ||U(eta)p - target||_2 on the common raster.
inline double registration_objective(const SparseApprox& p,
                                     const TransformParams& eta,
                                     const Image& target) {
  return l2_distance(synthesize_transformed(p, eta), target);
}

struct RegistrationResult {
  TransformParams eta_hat;
  double d_a{0.0};
  std::vector<Candidate> candidates;  // sorted, closest to identity first
  std::vector<double> objectives;     // aligned with `candidates`
  bool refined{false};
  bool metric_fallback{false};
  TransformParams eta_refined;
  double d_refined{0.0};
};

// Gradient refinement of the registration objective starting from eta_start.
inline DescentResult refine(const SparseApprox& p, const SparseApprox& q,
                            const TransformParams& eta_start,
                            const RefinementConfig& rcfg = {}) {
  const Image target = synthesize(q);
  const auto moving = [&p](const TransformParams& eta) {
    return synthesize_transformed(p, eta);
  };
  return riemannian_descent(moving, target, p.cfg.kind, eta_start, rcfg);
}

// Approximate invariant distance: evaluates every candidate and returns the
// minimizer. Candidates are scanned closest-to-identity first with strict
// improvement, so objective ties resolve toward the smallest transformation.
inline RegistrationResult register_patterns(const SparseApprox& p,
                                            const SparseApprox& q,
                                            bool run_refine = false,
                                            const RefinementConfig& rcfg = {}) {
  const Stabilizer stab = effective_stabilizer(p.cfg);
  CandidateSet cs = candidate_set(p, q, stab);
  std::stable_sort(cs.items.begin(), cs.items.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return distance_to_identity(a.eta) <
                            distance_to_identity(b.eta);
                   });

  RegistrationResult res;
  res.candidates = std::move(cs.items);
  res.objectives.reserve(res.candidates.size());
  const Image target = synthesize(q);
  double best = -1.0;
  for (const auto& c : res.candidates) {
    const double obj = registration_objective(p, c.eta, target);
    res.objectives.push_back(obj);
    if (best < 0 || obj < best) {
      best = obj;
      res.eta_hat = c.eta;
    }
  }
  res.d_a = best;

  if (run_refine) {
    const DescentResult dr = refine(p, q, res.eta_hat, rcfg);
    res.refined = true;
    res.metric_fallback = dr.metric_fallback;
    res.eta_refined = dr.eta;
    res.d_refined = dr.distance;
  }
  return res;
}

struct TransformationError {
  double translation{0.0};   // pixels
  double scale{0.0};         // absolute difference of a
  double rotation_deg{0.0};  // degrees, folded into [0, 90]
};

// Componentwise parameter errors; rotation is folded by the pi stabilizer
// symmetry: min(|dt|, 180 - |dt|) with dt already wrapped into [0, 180].
inline TransformationError transformation_error(const TransformParams& eta_hat,
                                                const TransformParams& eta_true) {
  TransformationError e;
  e.translation = norm(eta_hat.b - eta_true.b);
  e.scale = std::abs(eta_hat.a - eta_true.a);
  const double dt =
      std::abs(signed_angle(eta_hat.theta - eta_true.theta)) * 180.0 / kPi;
  e.rotation_deg = std::min(dt, 180.0 - dt);
  return e;
}

}  // namespace sparsereg
