#pragma once

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparsereg/dictionary.hpp"
#include "sparsereg/errors.hpp"
#include "sparsereg/geometry.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

// Non-negative sparse expansion sum_i c_i phi_{gamma_i}. Coefficients are
// strictly positive and supports are distinct modulo the mother stabilizer.
// `transformed` marks expansions whose supports left the dictionary lattice;
// those synthesize with virtual rasters (in-domain energy only) and carry a
// per-atom escape flag.
struct SparseApprox {
  std::vector<double> coeffs;
  std::vector<TransformParams> supports;
  DictionaryConfig cfg;
  bool transformed{false};
  std::vector<char> escaped;

  size_t size() const { return coeffs.size(); }
};

inline double coeff_l1(const SparseApprox& ap) {
  double s = 0.0;
  for (double c : ap.coeffs) s += std::abs(c);
  return s;
}

inline double coeff_l2(const SparseApprox& ap) {
  double s = 0.0;
  for (double c : ap.coeffs) s += c * c;
  return std::sqrt(s);
}

// Reconstruction sum_i c_i phi_{gamma_i}. Lattice expansions use dictionary
// rasters (unit in-domain norm); transformed expansions use virtual rasters.
inline Image synthesize(const SparseApprox& ap) {
  Image out(ap.cfg.width, ap.cfg.height);
  for (size_t i = 0; i < ap.size(); ++i) {
    if (ap.transformed) {
      const VirtualAtom v = rasterize_atom_virtual(ap.supports[i], ap.cfg);
      add_scaled(out, v.raster, ap.coeffs[i]);
    } else {
      add_scaled(out, rasterize_atom(ap.supports[i], ap.cfg).raster,
                 ap.coeffs[i]);
    }
  }
  return out;
}

// Applies eta to every support: coefficients unchanged, gamma_i -> eta o
// gamma_i. Atoms pushed (partly) outside the domain are flagged, not fatal;
// they contribute their in-domain energy when synthesized.
inline SparseApprox transform_approx(const SparseApprox& ap,
                                     const TransformParams& eta) {
  check_conforms(eta, ap.cfg.kind);
  SparseApprox out = ap;
  out.transformed = true;
  out.escaped.assign(ap.size(), 0);
  for (size_t i = 0; i < ap.size(); ++i) {
    out.supports[i] = compose(eta, ap.supports[i], ap.cfg.kind);
    out.escaped[i] = rasterize_atom_virtual(out.supports[i], ap.cfg).escaped;
  }
  return out;
}

namespace detail {

struct PursuitPick {
  double corr = 0.0;
  double scale = 1.0;
  double rotation = 0.0;
  int bx = 0, by = 0;
  bool found = false;
};

// Sweeps every lattice atom and returns the largest signed correlation with
// the residual. Templates are ordered scale-major then rotation and positions
// row-major, so keeping strict improvements breaks ties lexicographically on
// (scale, theta, b_y, b_x).
inline PursuitPick best_correlation(const Image& r, const Dictionary& dict,
                                    int step) {
  PursuitPick best;
  const int W = dict.cfg.width, H = dict.cfg.height;
  for (const auto& t : dict.templates) {
    const SupportPatch& p = t.patch;
    for (int by = 0; by < H; by += step) {
      const int ya = std::max(0, by + p.y0);
      const int yb = std::min(H, by + p.y0 + p.h);
      if (ya >= yb) continue;
      for (int bx = 0; bx < W; bx += step) {
        const int xa = std::max(0, bx + p.x0);
        const int xb = std::min(W, bx + p.x0 + p.w);
        if (xa >= xb) continue;
        double acc = 0.0;
        for (int y = ya; y < yb; ++y) {
          const double* rrow = r.pixels.data() + size_t(y) * W;
          const double* prow =
              p.values.data() + size_t(y - by - p.y0) * p.w;
          const int off = bx + p.x0;
          for (int x = xa; x < xb; ++x) acc += rrow[x] * prow[x - off];
        }
        const double n2 = t.clipped_norm2(xa - bx, ya - by, xb - bx, yb - by);
        if (n2 < 1e-12) continue;
        const double corr = acc / std::sqrt(n2);
        if (!best.found || corr > best.corr) {
          best.found = true;
          best.corr = corr;
          best.scale = t.scale;
          best.rotation = t.rotation;
          best.bx = bx;
          best.by = by;
        }
      }
    }
  }
  return best;
}

}  // namespace detail

// Non-negative matching pursuit: repeatedly picks the lattice atom with the
// largest signed correlation, stops when it is nonpositive or the residual
// norm falls to stop_threshold, and subtracts the projection. Re-selections
// of an already-used support (modulo stabilizer) merge by summing
// coefficients. Returns the expansion and the residual-norm trace
// [‖r_0‖, ‖r_1‖, ...], one entry per accepted iteration after the first.
inline std::pair<SparseApprox, std::vector<double>> nmp(
    const Image& img, int K, const Dictionary& dict,
    double stop_threshold = 0.0) {
  if (K < 1) throw std::invalid_argument("nmp: K must be at least 1");
  if (img.width != dict.cfg.width || img.height != dict.cfg.height)
    throw std::invalid_argument("nmp: image size does not match dictionary");
  if (stop_threshold < 0)
    throw std::invalid_argument("nmp: stop threshold must be nonnegative");
  const int step = int(std::lround(dict.cfg.trans_step));
  if (step < 1 || std::abs(dict.cfg.trans_step - step) > 1e-12)
    throw std::invalid_argument("nmp: translation step must be integral");

  SparseApprox ap;
  ap.cfg = dict.cfg;
  std::vector<double> trace{l2_norm(img)};
  Image r = img;
  for (int it = 0; it < K && trace.back() > stop_threshold; ++it) {
    const auto pick = detail::best_correlation(r, dict, step);
    if (!pick.found || pick.corr <= 0.0) break;
    const auto gamma =
        make_transform(pick.bx, pick.by, pick.scale, pick.rotation);
    const Atom atom = rasterize_atom(gamma, dict.cfg);
    add_scaled(r, atom.raster, -pick.corr);
    trace.push_back(l2_norm(r));
    bool merged = false;
    for (size_t i = 0; i < ap.size() && !merged; ++i) {
      if (equal_mod_stabilizer(gamma, ap.supports[i], dict.stab, dict.cfg.kind,
                               1e-9)) {
        ap.coeffs[i] += pick.corr;
        merged = true;
      }
    }
    if (!merged) {
      ap.coeffs.push_back(pick.corr);
      ap.supports.push_back(gamma);
    }
  }
  ap.escaped.assign(ap.size(), 0);
  return {std::move(ap), std::move(trace)};
}

inline std::pair<SparseApprox, std::vector<double>> nmp(
    const Image& img, int K, const DictionaryConfig& cfg,
    double stop_threshold = 0.0) {
  return nmp(img, K, build_dictionary(cfg), stop_threshold);
}

// CSV with one atom per row: "c,bx,by,a,theta". Header row included.
inline std::string approx_to_csv(const SparseApprox& ap) {
  std::string out = "c,bx,by,a,theta\n";
  char buf[192];
  for (size_t i = 0; i < ap.size(); ++i) {
    const auto& g = ap.supports[i];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  ap.coeffs[i], g.b.x, g.b.y, g.a, g.theta);
    out += buf;
  }
  return out;
}

inline SparseApprox approx_from_csv(const std::string& text,
                                    const DictionaryConfig& cfg) {
  SparseApprox ap;
  ap.cfg = cfg;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    if (line.find_first_of("0123456789+-.") != 0) continue;  // header
    std::istringstream ls(line);
    double f[5];
    std::string field;
    int n = 0;
    while (n < 5 && std::getline(ls, field, ',')) {
      try {
        f[n] = std::stod(field);
      } catch (const std::exception&) {
        throw DataError("approximation row " + std::to_string(row) +
                        ": bad number '" + field + "'");
      }
      ++n;
    }
    if (n != 5)
      throw DataError("approximation row " + std::to_string(row) +
                      ": expected 5 fields c,bx,by,a,theta");
    if (f[0] <= 0)
      throw DataError("approximation row " + std::to_string(row) +
                      ": coefficient must be positive");
    if (f[3] <= 0)
      throw DataError("approximation row " + std::to_string(row) +
                      ": scale must be positive");
    ap.coeffs.push_back(f[0]);
    ap.supports.push_back(make_transform(f[1], f[2], f[3], f[4]));
  }
  ap.escaped.assign(ap.size(), 0);
  return ap;
}

}  // namespace sparsereg
