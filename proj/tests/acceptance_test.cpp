// Acceptance gate: ten end-to-end criteria, one test (and one pass/fail
// line) each. These run the full desk-scale experiments, so the binary is
// minutes-long; the per-module suites cover the fast edge cases.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "sparsereg/analysis.hpp"
#include "sparsereg/harness.hpp"
#include "sparsereg/pgm.hpp"

using namespace sparsereg;

namespace {

double u01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }
double uin(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

std::vector<std::vector<double>> csv_body(const std::string& csv) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(csv);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::invalid_argument&) {
        cells.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows,
                           size_t c) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.at(c));
  return v;
}

// Spearman rank correlation; the measured series are continuous, so ties
// do not occur.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    for (size_t i = 0; i < n; ++i) r[idx[i]] = double(i);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mean = 0.5 * double(n - 1);
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  return num / std::sqrt(dx * dy);
}

Atom square_atom(int w, int h, int x0, int y0, int side) {
  Atom a;
  a.gamma = make_transform(double(x0), double(y0));
  a.raster = Image(w, h);
  const double v = 1.0 / side;
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) a.raster.at(x, y) = v;
  return a;
}

Atom vec3_atom(int idx, double x, double y, double z) {
  Atom a;
  a.gamma = make_transform(double(idx), 0.0);
  a.raster = Image(1, 3);
  a.raster.at(0, 0) = x;
  a.raster.at(0, 1) = y;
  a.raster.at(0, 2) = z;
  return a;
}

}  // namespace

// Recovering an exactly transformed pattern: d_a vanishes and the estimate
// matches the applied transformation up to the stabilizer.
TEST(Acceptance, C01ExactTransformRecovery) {
  const GroupKind kinds[3] = {GroupKind::Translation2D,
                              GroupKind::SpecialEuclidean2D,
                              GroupKind::Similarity2D};
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const GroupKind kind = kinds[t % 3];
    DictionaryConfig cfg;
    cfg.kind = kind;
    cfg.width = 41;
    cfg.height = 41;
    cfg.scales = scale_ladder(0.5, 2.0);
    const Dictionary dict = build_dictionary(cfg);
    const auto lattice = build_discretization(cfg);

    SparseApprox p;
    p.cfg = cfg;
    while (p.size() < 3) {
      const auto g = lattice[size_t(u01(rng) * lattice.size())];
      if (std::abs(g.b.x - 20.0) > 8.0 || std::abs(g.b.y - 20.0) > 8.0)
        continue;
      bool dup = false;
      for (const auto& s : p.supports) dup = dup || params_close(g, s, 1e-9);
      if (dup) continue;
      p.supports.push_back(g);
      p.coeffs.push_back(uin(rng, 0.5, 1.5));
    }
    p.escaped.assign(3, 0);

    // Lattice transformation: integer shift, rotation-step multiple, ladder
    // scale; redrawn until every transformed support stays inside the frame.
    TransformParams eta0;
    for (;;) {
      eta0 = make_transform(std::floor(uin(rng, -4.0, 5.0)),
                            std::floor(uin(rng, -4.0, 5.0)));
      if (kind != GroupKind::Translation2D)
        eta0.theta = cfg.rot_step * std::floor(uin(rng, 0.0, 8.0));
      if (kind == GroupKind::Similarity2D) {
        const double s[3] = {1.0 / std::numbers::sqrt2, 1.0,
                             std::numbers::sqrt2};
        eta0.a = s[size_t(u01(rng) * 3)];
      }
      bool inside = true;
      for (const auto& g : p.supports)
        inside = inside &&
                 !rasterize_atom_virtual(compose(eta0, g, kind), cfg).escaped;
      if (inside) break;
    }

    const SparseApprox q = transform_approx(p, eta0);
    const RegistrationResult rr = register_patterns(p, q, false);
    EXPECT_LE(rr.d_a, 1e-6) << "trial " << t;
    EXPECT_TRUE(equal_mod_stabilizer(rr.eta_hat, eta0, dict.stab, kind, 1e-6))
        << "trial " << t;
  }
}

// Group axioms, the action homomorphism, warp near-unitarity, PGM
// round-trips, and Cauchy-Schwarz on the image inner product.
TEST(Acceptance, C02GroupAndImagingProperties) {
  std::mt19937_64 rng(23);
  const GroupKind kinds[3] = {GroupKind::Translation2D,
                              GroupKind::SpecialEuclidean2D,
                              GroupKind::Similarity2D};
  const auto draw = [&](GroupKind kind) {
    TransformParams t = make_transform(uin(rng, -8, 8), uin(rng, -8, 8));
    if (kind != GroupKind::Translation2D) t.theta = uin(rng, -kPi, kPi);
    if (kind == GroupKind::Similarity2D) t.a = std::exp(uin(rng, -0.6, 0.6));
    return t;
  };
  for (int t = 0; t < 60; ++t) {
    const GroupKind kind = kinds[t % 3];
    const auto a = draw(kind), b = draw(kind), c = draw(kind);
    EXPECT_TRUE(params_close(compose(a, compose(b, c, kind), kind),
                             compose(compose(a, b, kind), c, kind), 1e-9));
    EXPECT_TRUE(params_close(compose(a, inverse(a, kind), kind),
                             identity_transform(), 1e-9));
    EXPECT_TRUE(params_close(compose(identity_transform(), a, kind), a, 1e-9));
    const Vec2 x{uin(rng, -5, 5), uin(rng, -5, 5)};
    const Vec2 lhs = apply_to_point(compose(a, b, kind), x);
    const Vec2 rhs = apply_to_point(a, apply_to_point(b, x));
    EXPECT_LE(norm(lhs - rhs), 1e-9);
  }

  // Interior-supported content: resampled warps stay within 2% of unitary.
  const Image obj = synth_object(75, 75, 3);
  for (int t = 0; t < 10; ++t) {
    TransformParams eta = make_transform(uin(rng, -4, 4), uin(rng, -4, 4),
                                         std::exp(uin(rng, -0.2, 0.2)),
                                         uin(rng, -kPi, kPi));
    const double ratio =
        l2_norm(warp_centered(obj, eta, GroupKind::Similarity2D)) /
        l2_norm(obj);
    EXPECT_GE(ratio, 0.98);
    EXPECT_LE(ratio, 1.02);
  }

  // Quantized images survive a save/load round trip exactly.
  Image img(17, 9);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = double((i * 37) % 256) / 255.0;
  const std::string path = std::string(::testing::TempDir()) + "acc_rt.pgm";
  save_pgm(img, path);
  const Image back = load_pgm(path);
  ASSERT_EQ(back.width, img.width);
  ASSERT_EQ(back.height, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    EXPECT_DOUBLE_EQ(back.pixels[i], img.pixels[i]);
  std::remove(path.c_str());

  for (int t = 0; t < 20; ++t) {
    Image f(12, 12), g(12, 12);
    for (double& v : f.pixels) v = uin(rng, -1, 1);
    for (double& v : g.pixels) v = uin(rng, -1, 1);
    EXPECT_LE(std::abs(inner_product(f, g)),
              l2_norm(f) * l2_norm(g) * (1 + 1e-12));
    EXPECT_NEAR(inner_product(f, f), l2_norm(f) * l2_norm(f), 1e-9);
    EXPECT_DOUBLE_EQ(inner_product(f, g), inner_product(g, f));
  }
}

// Greedy pursuit: monotone residual trace with orthogonal-update decrements,
// positive coefficients, and exact recovery of separated atoms.
TEST(Acceptance, C03GreedyPursuitCorrectness) {
  DictionaryConfig cfg;
  cfg.kind = GroupKind::Similarity2D;
  cfg.width = 41;
  cfg.height = 41;
  cfg.scales = scale_ladder(0.5, 2.0);
  const Dictionary dict = build_dictionary(cfg);

  const Image obj = synth_object(41, 41, 8);
  const auto [ap, trace] = nmp(obj, 8, dict);
  ASSERT_EQ(trace.size(), ap.size() + 1);  // no merged picks on this object
  for (size_t i = 1; i < trace.size(); ++i) {
    EXPECT_LE(trace[i], trace[i - 1]);
    // r_i = r_{i-1} - c phi with <r_i, phi> = 0: the norms are Pythagorean.
    const double lhs = trace[i - 1] * trace[i - 1] - trace[i] * trace[i];
    EXPECT_NEAR(lhs, ap.coeffs[i - 1] * ap.coeffs[i - 1], 1e-9);
  }
  for (double c : ap.coeffs) EXPECT_GT(c, 0.0);

  // One atom, scaled: the leading term reproduces it to rounding. Any
  // further picks mop up residual noise at strictly positive but
  // negligible correlations.
  const auto g1 = make_transform(20, 20, std::numbers::sqrt2, kPi / 4);
  const Atom a1 = rasterize_atom(g1, cfg);
  Image one(41, 41);
  add_scaled(one, a1.raster, 2.5);
  const auto [ap1, tr1] = nmp(one, 3, dict);
  ASSERT_GE(ap1.size(), 1u);
  EXPECT_NEAR(ap1.coeffs[0], 2.5, 1e-9);
  EXPECT_TRUE(equal_mod_stabilizer(ap1.supports[0], g1, dict.stab, cfg.kind,
                                   1e-9));
  for (size_t i = 1; i < ap1.size(); ++i) EXPECT_LE(ap1.coeffs[i], 1e-9);
  for (double c : ap1.coeffs) EXPECT_GT(c, 0.0);
  EXPECT_LE(tr1.back(), 1e-9);

  // Two orthogonal atoms: both recovered exactly, larger first.
  const auto g2 = make_transform(10, 10, 1.0, 0.0);
  const auto g3 = make_transform(31, 31, 1.0, kPi / 2);
  Image two(41, 41);
  add_scaled(two, rasterize_atom(g2, cfg).raster, 2.0);
  add_scaled(two, rasterize_atom(g3, cfg).raster, 1.0);
  const auto [ap2, tr2] = nmp(two, 4, dict);
  ASSERT_GE(ap2.size(), 2u);
  EXPECT_TRUE(equal_mod_stabilizer(ap2.supports[0], g2, dict.stab, cfg.kind,
                                   1e-9));
  EXPECT_TRUE(equal_mod_stabilizer(ap2.supports[1], g3, dict.stab, cfg.kind,
                                   1e-9));
  EXPECT_NEAR(ap2.coeffs[0], 2.0, 1e-9);
  EXPECT_NEAR(ap2.coeffs[1], 1.0, 1e-9);
  for (size_t i = 2; i < ap2.size(); ++i) EXPECT_LE(ap2.coeffs[i], 1e-9);
  EXPECT_LE(tr2.back(), 1e-9);
}

// The registration gap d_a - d never exceeds the cancellation-and-
// inconsistency bound on random sparse pairs.
TEST(Acceptance, C04RegistrationGapBound) {
  DictionaryConfig cfg;
  cfg.kind = GroupKind::Similarity2D;
  cfg.width = 41;
  cfg.height = 41;
  cfg.scales = scale_ladder(0.5, 2.0);
  const Dictionary dict = build_dictionary(cfg);
  const auto lattice = build_discretization(cfg);

  const RhoEstimate rho = estimate_rho(cfg, dict.stab);
  EXPECT_GE(rho.rho, 1.0 - 1e-6);

  std::vector<Atom> atoms;
  const size_t stride = std::max<size_t>(1, lattice.size() / 300);
  for (size_t i = 0; i < lattice.size() && atoms.size() < 300; i += stride)
    atoms.push_back(rasterize_atom(lattice[i], cfg));
  const RliReport rli = rli_falsify(atoms, 3, 0.35, 0.05, 4000, 99);

  std::vector<TransformParams> interior;
  for (const auto& g : lattice)
    if (std::abs(g.b.x - 20.0) <= 10.0 && std::abs(g.b.y - 20.0) <= 10.0)
      interior.push_back(g);

  std::mt19937_64 rng(4242);
  for (int t = 0; t < 50; ++t) {
    SparseApprox p, q;
    p.cfg = q.cfg = cfg;
    const int Kp = 1 + int(u01(rng) * 3), Kq = 1 + int(u01(rng) * 3);
    for (int k = 0; k < Kp; ++k) {
      p.supports.push_back(interior[size_t(u01(rng) * interior.size())]);
      p.coeffs.push_back(uin(rng, 0.5, 1.5));
    }
    for (int k = 0; k < Kq; ++k) {
      q.supports.push_back(interior[size_t(u01(rng) * interior.size())]);
      q.coeffs.push_back(uin(rng, 0.5, 1.5));
    }
    p.escaped.assign(p.size(), 0);
    q.escaped.assign(q.size(), 0);

    const RegistrationResult rr = register_patterns(p, q, false);
    const OracleResult orc = oracle_distance(p, q);
    const double gap = rr.d_a - orc.d;
    EXPECT_GE(gap, -1e-9) << "oracle above the restricted minimum, trial "
                          << t;

    // Cancellation measure of the oracle-optimal combined expansion.
    std::vector<Image> comb;
    std::vector<double> cc;
    for (size_t i = 0; i < p.size(); ++i) {
      comb.push_back(
          rasterize_atom_virtual(compose(orc.eta0, p.supports[i], cfg.kind),
                                 cfg)
              .raster);
      cc.push_back(p.coeffs[i]);
    }
    for (size_t j = 0; j < q.size(); ++j) {
      comb.push_back(rasterize_atom_virtual(q.supports[j], cfg).raster);
      cc.push_back(-q.coeffs[j]);
    }
    const double alpha_hat =
        std::max(rli.alpha_found, combination_measure(comb, cc).min_pair);
    double l1p = 0, l1q = 0;
    for (double c : p.coeffs) l1p += std::abs(c);
    for (double c : q.coeffs) l1q += std::abs(c);
    EXPECT_LE(gap, alpha_hat * rho.rho * std::min(l1p, l1q) + 1e-9)
        << "trial " << t;
  }
}

// Box dictionaries never violate their analytic cancellation constant, and
// the explicit three-vector and offset-square fixtures behave as computed.
TEST(Acceptance, C05BoxDictionaryCancellation) {
  const int widths[3] = {32, 64, 256};
  const int Ks[3] = {2, 3, 4};
  for (int c = 0; c < 3; ++c) {
    const int K = Ks[c], W = widths[c];
    DictionaryConfig cfg;
    cfg.kind = GroupKind::Translation2D;
    cfg.mother.kind = MotherKind::Box1D;
    cfg.mother.box_width = double(W);
    cfg.width = 2 * W + 128;
    cfg.height = 1;
    std::vector<Atom> atoms;
    for (int x = 0; x + W <= cfg.width; ++x)
      atoms.push_back(rasterize_atom(make_transform(double(x), 0.0), cfg));
    const double emax = std::sqrt(3.0 / (std::pow(4.0, K) - 1.0));
    const double eps = 0.5 * emax;
    const auto [alpha, eps_ret] = box_rli_constants(K, eps);
    EXPECT_NEAR(eps_ret, emax, 1e-12);
    const auto rep = rli_falsify(atoms, K, eps, alpha, 10000, 99 + K);
    EXPECT_FALSE(rep.violated) << "K=" << K;
    EXPECT_GT(rep.premise_fired, 0) << "K=" << K;
  }

  // Three-vector geometry: (e1, e2, cos t e2 + sin t e3) is robustly
  // independent at 0.2, while (e1, e2, r e1 + r e2 + sin t e3) needs 0.78.
  const double t = kPi / 20;
  {
    std::vector<Atom> atoms{vec3_atom(0, 1, 0, 0), vec3_atom(1, 0, 1, 0),
                            vec3_atom(2, 0, std::cos(t), std::sin(t))};
    const auto rep = rli_falsify(atoms, 3, 0.2, 0.2, 1000, 42);
    EXPECT_FALSE(rep.violated);
    EXPECT_GT(rep.premise_fired, 0);
  }
  {
    const double r = std::cos(t) / std::numbers::sqrt2;
    std::vector<Atom> atoms{vec3_atom(0, 1, 0, 0), vec3_atom(1, 0, 1, 0),
                            vec3_atom(2, r, r, std::sin(t))};
    const auto rep5 = rli_falsify(atoms, 3, 0.2, 0.5, 1000, 42);
    EXPECT_TRUE(rep5.violated);
    const auto rep78 = rli_falsify(atoms, 3, 0.2, 0.78, 1000, 42);
    EXPECT_FALSE(rep78.violated);
    EXPECT_GE(rep78.alpha_found, 0.77);
  }

  // Offset-square fixture: coefficients (.5,.5,.5,.5,-1) nearly cancel while
  // every active pair measure is 1, so any claim below 1 is violated.
  {
    const int s = 16;
    std::vector<Atom> atoms{
        square_atom(40, 40, 0, 0, s), square_atom(40, 40, s, 0, s),
        square_atom(40, 40, 0, s, s), square_atom(40, 40, s, s, s),
        square_atom(40, 40, 1, 0, 2 * s)};
    const auto rep = rli_falsify(atoms, 5, 0.2, 0.999, 100, 7);
    EXPECT_TRUE(rep.violated);
    EXPECT_DOUBLE_EQ(rep.alpha_found, 1.0);
  }
}

// Transformation inconsistency: minimal for pure translations, U-shaped in
// the anisotropy with an interior minimum for the rotation groups.
TEST(Acceptance, C06InconsistencyBehavior) {
  {
    DictionaryConfig cfg;
    cfg.kind = GroupKind::Translation2D;
    cfg.width = 41;
    cfg.height = 41;
    const RhoEstimate est = estimate_rho(cfg, effective_stabilizer(cfg));
    EXPECT_GE(est.rho, 1.0 - 1e-6);
    EXPECT_LE(est.rho, 1.05);
  }

  const double nus[5] = {1.5, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> rhos;
  RhoGrid grid;
  grid.trans_range = 4.0;
  for (double nu : nus) {
    DictionaryConfig cfg;
    cfg.kind = GroupKind::SpecialEuclidean2D;
    cfg.width = 41;
    cfg.height = 41;
    cfg.mother = MotherFunction{MotherKind::GaussianAniso, nu};
    const RhoEstimate est = estimate_rho(cfg, effective_stabilizer(cfg), grid);
    EXPECT_GE(est.rho, 1.0 - 1e-6);
    rhos.push_back(est.rho);
  }
  const size_t m = size_t(std::min_element(rhos.begin(), rhos.end()) -
                          rhos.begin());
  EXPECT_GE(m, 1u) << "minimum sits on the near-isotropic edge";
  EXPECT_LE(m, 3u) << "minimum sits on the elongated edge";
  for (size_t i = 0; i + 1 <= m; ++i)
    EXPECT_GT(rhos[i], rhos[i + 1]) << "not decreasing into the minimum";
  for (size_t i = m; i + 1 < rhos.size(); ++i)
    EXPECT_LT(rhos[i], rhos[i + 1]) << "not increasing out of the minimum";
}

// Both dictionary sweeps trade approximation quality against registration
// robustness: opposite monotone trends with |Spearman| >= 0.7.
TEST(Acceptance, C07TradeoffTrends) {
  ExperimentSpec spec;
  spec.experiment = "aniso_sweep";
  const auto aniso = csv_body(run_aniso_sweep(spec));
  ASSERT_EQ(aniso.size(), 5u);
  const double sa_approx = spearman(column(aniso, 0), column(aniso, 1));
  const double sa_reg = spearman(column(aniso, 0), column(aniso, 2));
  EXPECT_GE(sa_approx, 0.7);
  EXPECT_LE(sa_reg, -0.7);

  spec.experiment = "scale_step_sweep";
  const auto sc = csv_body(run_scale_step_sweep(spec));
  ASSERT_EQ(sc.size(), 4u);
  const double ss_approx = spearman(column(sc, 0), column(sc, 1));
  const double ss_reg = spearman(column(sc, 0), column(sc, 2));
  EXPECT_GE(ss_approx, 0.7);  // coarser ladders approximate worse
  EXPECT_LE(ss_reg, -0.7);    // yet register better

  // Registration collapses between the near-isotropic and elongated ends.
  spec.experiment = "aniso_sweep";
  spec.sweep = {1.5, 8.0};
  const auto ends = csv_body(run_aniso_sweep(spec));
  ASSERT_EQ(ends.size(), 2u);
  EXPECT_LT(ends[1][2], ends[0][2]);
}

// Refined registration errors on the textured object sit well inside the
// plateau bounds.
TEST(Acceptance, C08TransformationErrorPlateau) {
  ExperimentSpec spec;
  spec.experiment = "transform_errors";
  spec.sweep = {10};
  const auto rows = csv_body(run_transform_errors(spec));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LE(rows[0][1], 3.0);    // pixels
  EXPECT_LE(rows[0][2], 0.05);   // scale
  EXPECT_LE(rows[0][3], 15.0);   // degrees
}

// Gradient refinement strictly improves every mean error component.
TEST(Acceptance, C09RefinementBenefit) {
  ExperimentSpec spec;
  spec.experiment = "transform_errors";
  spec.sweep = {10};
  ASSERT_GE(spec.trials, 20);
  const auto refined = csv_body(run_transform_errors(spec));
  spec.refine = false;
  const auto lattice = csv_body(run_transform_errors(spec));
  for (size_t c = 1; c <= 3; ++c)
    EXPECT_LT(refined[0][c], lattice[0][c]) << "column " << c;
}

// Nearest-neighbor glyph classification: the registration distance clears
// the Euclidean baseline by 30 points and the method ordering holds.
TEST(Acceptance, C10ClassificationOrdering) {
  ExperimentSpec spec;
  spec.experiment = "classify";
  const auto rows = csv_body(run_classify(spec));
  ASSERT_EQ(rows.size(), 4u);
  const double euclid = rows[0][3], tangent = rows[1][3], proposed = rows[3][3];
  EXPECT_GE(proposed, euclid + 0.30);
  EXPECT_LT(euclid, tangent);
  EXPECT_LT(tangent, proposed);
}
