#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparsereg/dictionary.hpp"
#include "sparsereg/geometry.hpp"
#include "sparsereg/idx.hpp"
#include "sparsereg/image.hpp"
#include "sparsereg/linalg.hpp"
#include "sparsereg/registration.hpp"
#include "sparsereg/sparse.hpp"

namespace sparsereg {

// Analytic RLI constants of the 1-D box dictionary: returns (alpha,
// epsilon_max) with alpha = eps * sqrt((2/3)(4^K - 1)) valid for
// 0 < eps < sqrt(3 / (4^K - 1)).
inline std::pair<double, double> box_rli_constants(int K, double epsilon) {
  if (K < 1) throw std::invalid_argument("box_rli_constants: K must be >= 1");
  const double pw = std::pow(4.0, K) - 1.0;
  const double eps_max = std::sqrt(3.0 / pw);
  if (!(epsilon > 0.0) || epsilon >= eps_max)
    throw std::invalid_argument(
        "box_rli_constants: epsilon must lie in (0, " +
        std::to_string(eps_max) + ")");
  return {epsilon * std::sqrt((2.0 / 3.0) * pw), eps_max};
}

// Cancellation diagnostics of one explicit combination sum_i a_i v_i: the
// premise ratio ||sum a_i v_i|| / ||a|| and the smallest pair measure
// ||sgn(a_i) v_i + sgn(a_j) v_j|| over pairs with nonzero coefficients.
struct CombinationMeasure {
  double premise_ratio{0.0};
  double min_pair{0.0};
  int pair_i{-1};
  int pair_j{-1};
};

inline CombinationMeasure combination_measure(
    const std::vector<Image>& atoms, const std::vector<double>& coeffs) {
  if (atoms.size() != coeffs.size() || atoms.size() < 2)
    throw std::invalid_argument("combination_measure: need >= 2 atoms");
  const int n = int(atoms.size());
  CombinationMeasure m;
  double norm_a2 = 0.0;
  for (double c : coeffs) norm_a2 += c * c;
  if (norm_a2 <= 0.0)
    throw std::invalid_argument("combination_measure: zero coefficients");
  double comb2 = 0.0;
  m.min_pair = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j < i) continue;
      const double g = inner_product(atoms[i], atoms[j]);
      comb2 += (i == j ? 1.0 : 2.0) * coeffs[i] * coeffs[j] * g;
      if (j > i && std::abs(coeffs[i]) > 1e-12 &&
          std::abs(coeffs[j]) > 1e-12) {
        const double si = coeffs[i] > 0 ? 1.0 : -1.0;
        const double sj = coeffs[j] > 0 ? 1.0 : -1.0;
        const double pair = std::sqrt(std::max(0.0, 2.0 + 2.0 * si * sj * g));
        if (pair < m.min_pair) {
          m.min_pair = pair;
          m.pair_i = i;
          m.pair_j = j;
        }
      }
    }
  }
  m.premise_ratio = std::sqrt(std::max(0.0, comb2)) / std::sqrt(norm_a2);
  if (m.pair_i < 0) m.min_pair = 0.0;
  return m;
}

struct RliReport {
  int K{0};
  double epsilon{0.0};
  double alpha_bound{0.0};
  // Worst case over premise-firing attempts of the per-attempt smallest pair
  // measure; the claim "(K, eps, alpha)-RLI" is violated iff this exceeds
  // alpha_bound. Lower bound of the true alpha (falsification only).
  double alpha_found{0.0};
  bool violated{false};
  int premise_fired{0};
  int trials{0};
  std::vector<double> witness_coeffs;
  std::vector<int> witness_indices;
  std::vector<TransformParams> witness_supports;
};

// Randomized falsifier of the (K, epsilon, alpha)-RLI claim on a fixed atom
// list: samples size-K subsets, takes the smallest-eigenvalue direction of
// the subset Gram (the best normalized-combination minimizer; its eigenvalue
// is exactly ||sum a_i v_i||^2), and whenever the premise fires checks the
// pair-cancellation conclusion. Odd trials draw the subset from a small pool
// around a random anchor atom: near-degenerate combinations are spatially
// local, so uniform subsets almost never fire the premise on large lists.
inline RliReport rli_falsify(const std::vector<Atom>& atoms, int K,
                             double epsilon, double alpha, int trials,
                             uint64_t seed) {
  if (K < 2) throw std::invalid_argument("rli_falsify: K must be >= 2");
  if (K > int(atoms.size()))
    throw std::invalid_argument("rli_falsify: K exceeds atom count");
  if (!(epsilon > 0.0) || !(alpha > 0.0))
    throw std::invalid_argument("rli_falsify: epsilon and alpha must be > 0");
  if (trials < 1) throw std::invalid_argument("rli_falsify: trials must be >= 1");

  const int n = int(atoms.size());
  // Full Gram precomputed once; subset Grams are lookups.
  std::vector<double> gram(size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      gram[size_t(i) * n + j] = gram[size_t(j) * n + i] =
          inner_product(atoms[i].raster, atoms[j].raster);

  RliReport rep;
  rep.K = K;
  rep.epsilon = epsilon;
  rep.alpha_bound = alpha;
  rep.trials = trials;

  std::mt19937_64 rng(seed);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::vector<int> subset(K), local;
  std::vector<std::pair<double, int>> by_dist(n);
  std::vector<double> sub(size_t(K) * K), V, eig;

  for (int t = 0; t < trials; ++t) {
    if ((t & 1) != 0 && n > K) {
      const int anchor = int(detail::bounded_draw(rng, size_t(n)));
      for (int i = 0; i < n; ++i)
        by_dist[i] = {norm(atoms[i].gamma.b - atoms[anchor].gamma.b), i};
      const int pool_sz = std::min(n, 3 * K);
      std::partial_sort(by_dist.begin(), by_dist.begin() + pool_sz,
                        by_dist.end());
      local.resize(pool_sz);
      for (int i = 0; i < pool_sz; ++i) local[i] = by_dist[i].second;
      for (int k = 0; k < K; ++k) {
        const int r = k + int(detail::bounded_draw(rng, size_t(pool_sz - k)));
        std::swap(local[k], local[r]);
      }
      std::copy(local.begin(), local.begin() + K, subset.begin());
    } else {
      for (int k = 0; k < K; ++k) {
        const int r = k + int(detail::bounded_draw(rng, size_t(n - k)));
        std::swap(pool[k], pool[r]);
      }
      std::copy(pool.begin(), pool.begin() + K, subset.begin());
    }
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        sub[size_t(i) * K + j] = gram[size_t(subset[i]) * n + subset[j]];
    detail::jacobi_eigen(sub, K, V, eig);
    int lo = 0;
    for (int i = 1; i < K; ++i)
      if (eig[i] < eig[lo]) lo = i;
    const double comb_norm = std::sqrt(std::max(0.0, eig[lo]));
    if (comb_norm >= epsilon) continue;  // premise ||sum|| < eps ||a|| = eps
    ++rep.premise_fired;

    double min_pair = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
      const double ai = V[size_t(i) * K + lo];
      if (std::abs(ai) <= 1e-12) continue;
      for (int j = i + 1; j < K; ++j) {
        const double aj = V[size_t(j) * K + lo];
        if (std::abs(aj) <= 1e-12) continue;
        const double g = gram[size_t(subset[i]) * n + subset[j]];
        const double s = (ai > 0) == (aj > 0) ? 1.0 : -1.0;
        min_pair = std::min(min_pair,
                            std::sqrt(std::max(0.0, 2.0 + 2.0 * s * g)));
      }
    }
    if (!std::isfinite(min_pair)) min_pair = 0.0;  // single nonzero entry
    if (min_pair > rep.alpha_found) {
      rep.alpha_found = min_pair;
      rep.witness_coeffs.assign(K, 0.0);
      rep.witness_indices = subset;
      rep.witness_supports.clear();
      for (int i = 0; i < K; ++i) {
        rep.witness_coeffs[i] = V[size_t(i) * K + lo];
        rep.witness_supports.push_back(atoms[subset[i]].gamma);
      }
    }
  }
  rep.violated = rep.alpha_found > alpha;
  return rep;
}

// Sweep specification for the transformation-inconsistency estimate.
struct RhoGrid {
  double trans_range{8.0};
  double trans_step{1.0};
  double rot_step{kPi / 16};
  double scale_range_oct{0.5};   // SIM(2) only, log2 units around 1
  double scale_step_oct{0.25};
  int eta_prime_max{128};        // lattice subsample size
  int gamma_max{500};            // lattice subsample size for the inner sup
};

struct RhoEstimate {
  double rho{1.0};
  TransformParams eta, eta_prime, pi, gamma;  // witness of the estimate
  std::string grid_desc;
};

namespace detail {

// sup over the gamma subsample of ||U(zeta) phi_gamma - phi_gamma||, via the
// unitary identity ||phi_{gamma^{-1} o zeta o gamma} - phi||. Saturates at
// sqrt(2) for well-separated supports, so the scan exits early once within
// rounding of the ceiling. Returns the sup and the achieving gamma.
inline double conjugate_change_sup(const TransformParams& zeta,
                                   const std::vector<TransformParams>& gammas,
                                   const MotherFunction& mother, GroupKind kind,
                                   TransformParams* arg) {
  const double ceil2 = std::sqrt(2.0) * (1.0 - 1e-12);
  double best = 0.0;
  for (const auto& g : gammas) {
    const auto w = compose(compose(inverse(g, kind), zeta, kind), g, kind);
    const double d =
        atom_distance_continuous(mother, w, identity_transform());
    if (d > best) {
      best = d;
      if (arg) *arg = g;
      if (best >= ceil2) break;
    }
  }
  return best;
}

}  // namespace detail

// Estimates the transformation inconsistency by sweeping the symmetry-aware
// ratio: eta over a fine grid of T around the identity, eta' over a lattice
// subsample (excluding the eta o S_phi coset), pi over the stabilizer
// (infimum), gamma over a lattice subsample (supremum), all with the
// closed-form continuous inner products. The gamma subsample always contains
// every eta', which forces each evaluated ratio to be >= 1 (at gamma = eta'
// the numerator equals the denominator). The result is a lower bound of the
// formal supremum. refine_local hill-climbs eta afterwards.
inline RhoEstimate estimate_rho(const DictionaryConfig& cfg,
                                const Stabilizer& stab,
                                const RhoGrid& grid = {},
                                bool refine_local = true) {
  if (grid.trans_step <= 0 || grid.rot_step <= 0 || grid.scale_step_oct <= 0 ||
      grid.eta_prime_max < 1 || grid.gamma_max < 1)
    throw std::invalid_argument("estimate_rho: bad grid");
  const GroupKind kind = cfg.kind;
  const auto lattice = build_discretization(cfg);
  if (lattice.empty()) throw std::invalid_argument("estimate_rho: empty grid");

  // Subsample the lattice by stride; eta' list also serves as ratio anchors.
  const auto subsample = [&](int cap) {
    std::vector<TransformParams> out;
    const size_t stride = std::max<size_t>(1, lattice.size() / size_t(cap));
    for (size_t i = 0; i < lattice.size(); i += stride) out.push_back(lattice[i]);
    return out;
  };
  const auto eta_primes = subsample(grid.eta_prime_max);
  auto gammas = subsample(grid.gamma_max);
  for (const auto& ep : eta_primes) gammas.push_back(ep);
  // Far-from-center first: conjugation amplifies with distance, so the
  // early-exit sup usually terminates immediately.
  const Vec2 ctr{0.5 * (cfg.width - 1), 0.5 * (cfg.height - 1)};
  std::stable_sort(gammas.begin(), gammas.end(),
                   [&](const TransformParams& u, const TransformParams& v) {
                     return norm(u.b - ctr) > norm(v.b - ctr);
                   });

  // eta grid: translations about the identity, full rotation circle for the
  // rotation groups, log-scale axis for SIM(2).
  std::vector<double> rots{0.0};
  if (kind != GroupKind::Translation2D) {
    rots.clear();
    for (double r = 0.0; r < 2 * kPi - 1e-9; r += grid.rot_step)
      rots.push_back(r);
  }
  std::vector<double> scales{1.0};
  if (kind == GroupKind::Similarity2D) {
    scales.clear();
    for (double s = -grid.scale_range_oct; s <= grid.scale_range_oct + 1e-12;
         s += grid.scale_step_oct)
      scales.push_back(std::exp2(s));
  }

  RhoEstimate est;
  est.rho = 1.0;
  est.eta = est.eta_prime = est.pi = est.gamma = identity_transform();
  {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "trans +-%g step %g, rot step %g, scale +-%g oct step %g, "
                  "%zu eta', %zu gamma",
                  grid.trans_range, grid.trans_step, grid.rot_step,
                  grid.scale_range_oct, grid.scale_step_oct, eta_primes.size(),
                  gammas.size());
    est.grid_desc = buf;
  }

  // Ratio of one (eta, eta') pair: inf over pi of the gamma-sup numerator,
  // over the appearance distance of the two generating transforms.
  const auto ratio_at = [&](const TransformParams& eta,
                            const TransformParams& ep, RhoEstimate* w) {
    for (const auto& pi : stab.elements)
      if (params_close(ep, compose(eta, pi, kind), 1e-9)) return -1.0;
    const double denom =
        atom_distance_continuous(cfg.mother, eta, ep);
    if (denom < 1e-7) return -1.0;  // below estimator resolution
    double best = std::numeric_limits<double>::infinity();
    TransformParams best_pi = identity_transform(), best_g;
    for (const auto& pi : stab.elements) {
      const auto zeta = compose(compose(eta, pi, kind), inverse(ep, kind), kind);
      TransformParams g;
      const double num = detail::conjugate_change_sup(zeta, gammas, cfg.mother,
                                                      kind, &g);
      if (num < best) {
        best = num;
        best_pi = pi;
        best_g = g;
      }
    }
    if (w) {
      w->eta = eta;
      w->eta_prime = ep;
      w->pi = best_pi;
      w->gamma = best_g;
    }
    return best / denom;
  };

  for (double s : scales) {
    for (double r : rots) {
      for (double dy = -grid.trans_range; dy <= grid.trans_range + 1e-12;
           dy += grid.trans_step) {
        for (double dx = -grid.trans_range; dx <= grid.trans_range + 1e-12;
             dx += grid.trans_step) {
          const auto eta = make_transform(dx, dy, s, r);
          for (const auto& ep : eta_primes) {
            RhoEstimate w;
            const double rho = ratio_at(eta, ep, &w);
            if (rho > est.rho) {
              est.rho = rho;
              est.eta = w.eta;
              est.eta_prime = w.eta_prime;
              est.pi = w.pi;
              est.gamma = w.gamma;
            }
          }
        }
      }
    }
  }

  if (refine_local && est.rho > 1.0) {
    // Coordinate ascent on eta; eta' stays on the lattice.
    double steps[4] = {0.5 * grid.trans_step, 0.5 * grid.trans_step,
                       0.5 * grid.scale_step_oct, 0.25 * grid.rot_step};
    const int P = param_count(kind);
    for (int round = 0; round < 24; ++round) {
      bool improved = false;
      for (int i = 0; i < P; ++i) {
        double tau[4] = {est.eta.b.x, est.eta.b.y, 0, 0};
        int slot = i;
        if (kind == GroupKind::SpecialEuclidean2D) {
          tau[2] = est.eta.theta;
        } else if (kind == GroupKind::Similarity2D) {
          tau[2] = std::log2(est.eta.a);
          tau[3] = est.eta.theta;
        }
        const double h = (i < 2) ? steps[i]
                       : (kind == GroupKind::Similarity2D && i == 2)
                           ? steps[2]
                           : steps[3];
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          double t[4] = {tau[0], tau[1], tau[2], tau[3]};
          t[slot] += sgn * h;
          TransformParams eta_try;
          if (kind == GroupKind::Translation2D)
            eta_try = make_transform(t[0], t[1]);
          else if (kind == GroupKind::SpecialEuclidean2D)
            eta_try = make_transform(t[0], t[1], 1.0, t[2]);
          else
            eta_try = make_transform(t[0], t[1], std::exp2(t[2]), t[3]);
          RhoEstimate w;
          const double rho = ratio_at(eta_try, est.eta_prime, &w);
          if (rho > est.rho) {
            est.rho = rho;
            est.eta = w.eta;
            est.pi = w.pi;
            est.gamma = w.gamma;
            improved = true;
          }
        }
      }
      if (!improved)
        for (double& s2 : steps) s2 *= 0.5;
    }
  }
  return est;
}

// Brute-force transformation-distance oracle: centered grid over T plus the
// restricted candidate set, followed by gradient refinement from the best
// points of both sources. Because the candidates are always included and the
// descent is monotone, the result never exceeds the algorithm's d_a.
struct OracleGrid {
  double trans_range{6.0};
  double trans_step{1.0};
  double rot_step{kPi / 16};
  double scale_range_oct{0.4};  // SIM(2) only
  double scale_step_oct{0.1};
  size_t max_points{2000000};
  bool refine{true};
  RefinementConfig rcfg{};
};

struct OracleResult {
  double d{0.0};
  TransformParams eta0;
  size_t points{0};
};

inline OracleResult oracle_distance(const SparseApprox& p,
                                    const SparseApprox& q,
                                    const OracleGrid& grid = {}) {
  const GroupKind kind = p.cfg.kind;
  const int nt = int(std::floor(2 * grid.trans_range / grid.trans_step)) + 1;
  size_t nr = 1, ns = 1;
  if (kind != GroupKind::Translation2D)
    nr = size_t(std::ceil(2 * kPi / grid.rot_step));
  if (kind == GroupKind::Similarity2D)
    ns = size_t(std::floor(2 * grid.scale_range_oct / grid.scale_step_oct)) + 1;
  const size_t total = size_t(nt) * nt * nr * ns;
  if (total > grid.max_points)
    throw std::invalid_argument("oracle_distance: grid has " +
                                std::to_string(total) + " points, cap is " +
                                std::to_string(grid.max_points));

  const Image target = synthesize(q);
  OracleResult res;
  res.points = total;
  res.d = std::numeric_limits<double>::infinity();
  res.eta0 = identity_transform();

  const auto consider = [&](const TransformParams& eta) {
    const double obj = registration_objective(p, eta, target);
    if (obj < res.d) {
      res.d = obj;
      res.eta0 = eta;
    }
  };

  for (size_t is = 0; is < ns; ++is) {
    const double s =
        (kind == GroupKind::Similarity2D)
            ? std::exp2(-grid.scale_range_oct + double(is) * grid.scale_step_oct)
            : 1.0;
    for (size_t ir = 0; ir < nr; ++ir) {
      const double r =
          (kind == GroupKind::Translation2D) ? 0.0 : double(ir) * grid.rot_step;
      for (int iy = 0; iy < nt; ++iy) {
        const double dy = -grid.trans_range + iy * grid.trans_step;
        for (int ix = 0; ix < nt; ++ix) {
          const double dx = -grid.trans_range + ix * grid.trans_step;
          consider(conjugate_to_center(make_transform(dx, dy, s, r), kind,
                                       p.cfg.width, p.cfg.height));
        }
      }
    }
  }

  TransformParams best_grid = res.eta0;
  TransformParams best_cand = res.eta0;
  if (p.size() > 0 && q.size() > 0) {
    const auto cs = candidate_set(p, q, effective_stabilizer(p.cfg));
    double bc = std::numeric_limits<double>::infinity();
    for (const auto& c : cs.items) {
      const double obj = registration_objective(p, c.eta, target);
      if (obj < bc) {
        bc = obj;
        best_cand = c.eta;
      }
      if (obj < res.d) {
        res.d = obj;
        res.eta0 = c.eta;
      }
    }
  }

  if (grid.refine) {
    const auto moving = [&p](const TransformParams& eta) {
      return synthesize_transformed(p, eta);
    };
    for (const auto& start : {best_grid, best_cand}) {
      const auto dr =
          riemannian_descent(moving, target, kind, start, grid.rcfg);
      if (dr.distance < res.d) {
        res.d = dr.distance;
        res.eta0 = dr.eta;
      }
    }
  }
  return res;
}

}  // namespace sparsereg
