// Command-line front end: synthetic data generation, sparse approximation,
// registration, invariant distances, glyph classification, dictionary
// analysis, and the experiment sweeps. Every subcommand prints CSV (or
// writes it with --out); images are 8-bit PGM. Relative input paths are
// resolved against $SPARSEREG_DATA_DIR when it is set. Exit codes: 0 on
// success, 2 on a configuration error, 3 on a data error.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsereg/analysis.hpp"
#include "sparsereg/baselines.hpp"
#include "sparsereg/harness.hpp"
#include "sparsereg/pgm.hpp"

using namespace sparsereg;

namespace {

std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* base = std::getenv("SPARSEREG_DATA_DIR"))
    return (fs::path(base) / path).string();
  return path;
}

void emit(const std::string& csv, const std::string& out) {
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
}

// Dictionary options shared by the image subcommands. Flags override keys
// from --config, which override the built-in defaults.
struct DictFlags {
  std::string config;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config,
                    "dictionary config file (flat key = value lines)");
    const auto add = [this, cmd](const std::string& key,
                                 const std::string& help) {
      cmd->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
          help);
    };
    add("group", "transformation group: translation, se2, or sim2");
    add("nu", "mother function anisotropy (>= 1)");
    add("rot_step", "rotation step in radians, (0, pi]");
    add("scale_octaves", "scale ladder step in octaves");
    add("trans_step", "translation step in pixels (integer)");
    add("width", "canvas width in pixels");
    add("height", "canvas height in pixels");
  }

  DictionaryConfig build(DictionaryConfig base = {}) const {
    if (!config.empty())
      base = load_dictionary_config(resolve_input(config), base);
    return dictionary_config_from(overrides, base);
  }

  DictionaryConfig build_for(const Image& img) const {
    DictionaryConfig cfg;
    cfg.width = img.width;
    cfg.height = img.height;
    return build(cfg);
  }
};

// Transformation sampling flags shared by classify and sweep.
void attach_ranges(CLI::App* cmd, TransformRanges& r) {
  cmd->add_option("--trans-x", r.trans_x, "max |translation x| in pixels");
  cmd->add_option("--trans-y", r.trans_y, "max |translation y| in pixels");
  cmd->add_option("--scale-lo", r.scale_lo, "scale lower bound");
  cmd->add_option("--scale-hi", r.scale_hi, "scale upper bound");
  cmd->add_option("--rot-lo", r.rot_lo, "rotation lower bound, radians");
  cmd->add_option("--rot-hi", r.rot_hi, "rotation upper bound, radians");
}

std::string params_csv_cells(const TransformParams& t) {
  return g10(t.b.x) + "," + g10(t.b.y) + "," + g10(t.a) + "," + g10(t.theta);
}

// Stride subsample of the full discretization, rasterized. Caps the atom
// count so pairwise scans stay desk-scale.
std::vector<Atom> sampled_atoms(const DictionaryConfig& cfg, int cap) {
  if (cap < 2) throw ConfigError("atom cap must be >= 2");
  const auto lattice = build_discretization(cfg);
  std::vector<Atom> atoms;
  const size_t stride = std::max<size_t>(1, lattice.size() / size_t(cap));
  for (size_t i = 0; i < lattice.size() && atoms.size() < size_t(cap);
       i += stride)
    atoms.push_back(rasterize_atom(lattice[i], cfg));
  return atoms;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Sparse geometric-atom image registration toolkit.\n"
      "Relative input paths resolve against $SPARSEREG_DATA_DIR."};
  app.require_subcommand(1);
  app.fallthrough();  // lets --out appear after the subcommand too
  std::string out;
  app.add_option("--out", out, "write CSV here instead of stdout")
      ->configurable(false);

  // synth: write a procedural test image.
  auto* synth = app.add_subcommand("synth", "generate a synthetic PGM image");
  std::string synth_what = "object";
  int synth_class = 0, synth_w = 75, synth_h = 75;
  std::uint64_t synth_seed = 1;
  std::string synth_path;
  synth->add_option("--what", synth_what, "object | digit")
      ->check(CLI::IsMember({"object", "digit"}));
  synth->add_option("--digit", synth_class, "digit class 0..5");
  synth->add_option("--width", synth_w, "canvas width");
  synth->add_option("--height", synth_h, "canvas height");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("path", synth_path, "output PGM path")->required();
  synth->callback([&] {
    const Image img = synth_what == "object"
                          ? synth_object(synth_w, synth_h, synth_seed)
                          : synth_digit(synth_class, synth_seed);
    save_pgm(img, synth_path);
  });

  // approximate: greedy sparse expansion of one image.
  auto* approx = app.add_subcommand(
      "approximate", "sparse approximation of an image; one CSV row per term");
  std::string approx_input;
  int approx_k = 10;
  DictFlags approx_dict;
  approx->add_option("input", approx_input, "input PGM")->required();
  approx->add_option("--sparsity", approx_k, "number of terms");
  approx_dict.attach(approx);
  approx->callback([&] {
    const Image img = load_pgm(resolve_input(approx_input));
    const Dictionary dict = build_dictionary(approx_dict.build_for(img));
    // Repeated picks of one atom merge, so terms may be fewer than the
    // greedy iterations; the residual column is the final trace value.
    const auto [ap, trace] = nmp(img, approx_k, dict);
    std::string csv = "term,coeff,b_x,b_y,a,theta,escaped,final_residual\n";
    for (size_t k = 0; k < ap.size(); ++k)
      csv += g10(double(k)) + "," + g10(ap.coeffs[k]) + "," +
             params_csv_cells(ap.supports[k]) + "," +
             g10(double(ap.escaped[k])) + "," + g10(trace.back()) + "\n";
    emit(csv, out);
  });

  // register: estimated transformation between two images.
  auto* reg = app.add_subcommand(
      "register", "estimate the transformation mapping one image onto another");
  std::string reg_moving, reg_target;
  int reg_k = 10;
  bool reg_no_refine = false;
  DictFlags reg_dict;
  reg->add_option("moving", reg_moving, "PGM to be transformed")->required();
  reg->add_option("target", reg_target, "PGM to match")->required();
  reg->add_option("--sparsity", reg_k, "terms per expansion");
  reg->add_flag("--no-refine", reg_no_refine, "skip gradient refinement");
  reg_dict.attach(reg);
  reg->callback([&] {
    const Image m = load_pgm(resolve_input(reg_moving));
    const Image t = load_pgm(resolve_input(reg_target));
    if (m.width != t.width || m.height != t.height)
      throw DataError("register: image sizes differ");
    const Dictionary dict = build_dictionary(reg_dict.build_for(m));
    const SparseApprox p = nmp(m, reg_k, dict).first;
    const SparseApprox q = nmp(t, reg_k, dict).first;
    const RegistrationResult rr = register_patterns(p, q, !reg_no_refine);
    std::string csv = "stage,frame,b_x,b_y,a,theta,distance\n";
    const auto rows = [&](const char* stage, const TransformParams& eta,
                          double d) {
      const TransformParams c =
          conjugate_from_center(eta, dict.cfg.kind, m.width, m.height);
      return std::string(stage) + ",corner," + params_csv_cells(eta) + "," +
             g10(d) + "\n" + stage + ",centered," + params_csv_cells(c) + "," +
             g10(d) + "\n";
    };
    csv += rows("lattice", rr.eta_hat, rr.d_a);
    if (rr.refined) csv += rows("refined", rr.eta_refined, rr.d_refined);
    emit(csv, out);
  });

  // distance: one invariant (or plain) distance between two images.
  auto* dist = app.add_subcommand(
      "distance", "distance between two images under a chosen method");
  std::string dist_a, dist_b, dist_method = "sparse";
  int dist_k = 10;
  bool dist_no_refine = false;
  DictFlags dist_dict;
  dist->add_option("first", dist_a, "first PGM")->required();
  dist->add_option("second", dist_b, "second PGM")->required();
  dist->add_option("--method", dist_method,
                   "euclid | tangent | gd | sparse (registration-based)")
      ->check(CLI::IsMember({"euclid", "tangent", "gd", "sparse"}));
  dist->add_option("--sparsity", dist_k, "terms per expansion (sparse)");
  dist->add_flag("--no-refine", dist_no_refine, "skip refinement (sparse)");
  dist_dict.attach(dist);
  dist->callback([&] {
    const Image a = load_pgm(resolve_input(dist_a));
    const Image b = load_pgm(resolve_input(dist_b));
    if (a.width != b.width || a.height != b.height)
      throw DataError("distance: image sizes differ");
    const DictionaryConfig cfg = dist_dict.build_for(a);
    double d = 0.0;
    if (dist_method == "euclid") {
      d = euclidean_distance(a, b);
    } else if (dist_method == "tangent") {
      d = tangent_distance(a, b, cfg.kind);
    } else if (dist_method == "gd") {
      d = gd_distance(a, b, cfg.kind).distance;
    } else {
      const Dictionary dict = build_dictionary(cfg);
      const SparseApprox p = nmp(a, dist_k, dict).first;
      const SparseApprox q = nmp(b, dist_k, dict).first;
      const RegistrationResult rr = register_patterns(p, q, !dist_no_refine);
      d = rr.refined ? std::min(rr.d_a, rr.d_refined) : rr.d_a;
    }
    emit("method,distance\n" + dist_method + "," + g10(d) + "\n", out);
  });

  // classify: nearest-neighbor glyph benchmark across all four methods.
  auto* cls = app.add_subcommand(
      "classify", "nearest-neighbor glyph classification, one row per method");
  ExperimentSpec cls_spec;
  cls_spec.experiment = "classify";
  bool cls_no_refine = false;
  DictFlags cls_dict;
  cls->add_option("--classes", cls_spec.classes, "glyph classes, 1..6");
  cls->add_option("--train", cls_spec.train_per_class, "training glyphs per class");
  cls->add_option("--test", cls_spec.test_per_class, "test glyphs per class");
  cls->add_option("--sparsity", cls_spec.sparsity, "terms per expansion");
  cls->add_option("--seed", cls_spec.seed, "generator seed");
  cls->add_flag("--no-refine", cls_no_refine, "skip gradient refinement");
  attach_ranges(cls, cls_spec.ranges);
  cls_dict.attach(cls);
  cls->callback([&] {
    cls_spec.dict = cls_dict.build(cls_spec.dict);
    cls_spec.refine = !cls_no_refine;
    emit(run_classify(cls_spec), out);
  });

  // analyze: dictionary property estimators.
  auto* ana = app.add_subcommand("analyze", "dictionary property estimates");
  std::string ana_what;
  DictFlags ana_dict;
  int ana_cap = 400, ana_k = 3, ana_trials = 2000;
  double ana_eps = 0.2, ana_alpha = 0.5;
  std::uint64_t ana_seed = 1;
  bool ana_no_refine = false;
  ana->add_option("what", ana_what, "rho | rli | coherence")
      ->required()
      ->check(CLI::IsMember({"rho", "rli", "coherence"}));
  ana_dict.attach(ana);
  ana->add_option("--max-atoms", ana_cap,
                  "atom subsample cap for rli and coherence");
  ana->add_option("--subset-size", ana_k, "RLI subset size K");
  ana->add_option("--epsilon", ana_eps, "RLI premise threshold");
  ana->add_option("--alpha", ana_alpha, "RLI pair-cancellation bound");
  ana->add_option("--trials", ana_trials, "RLI falsification trials");
  ana->add_option("--seed", ana_seed, "RLI sampling seed");
  ana->add_flag("--no-refine", ana_no_refine,
                "skip the local ascent after the rho grid sweep");
  ana->callback([&] {
    const DictionaryConfig cfg = ana_dict.build();
    if (ana_what == "rho") {
      const RhoEstimate est =
          estimate_rho(cfg, effective_stabilizer(cfg), {}, !ana_no_refine);
      std::string grid = est.grid_desc;  // keep the grid note one CSV cell
      for (char& c : grid)
        if (c == ',') c = ';';
      emit("rho,eta_bx,eta_by,eta_a,eta_theta,grid\n" + g10(est.rho) + "," +
               params_csv_cells(est.eta) + "," + grid + "\n",
           out);
    } else if (ana_what == "rli") {
      const auto atoms = sampled_atoms(cfg, ana_cap);
      const RliReport rep =
          rli_falsify(atoms, ana_k, ana_eps, ana_alpha, ana_trials, ana_seed);
      emit("K,epsilon,alpha,alpha_found,premise_fired,trials,violated\n" +
               g10(double(rep.K)) + "," + g10(rep.epsilon) + "," +
               g10(rep.alpha_bound) + "," + g10(rep.alpha_found) + "," +
               g10(double(rep.premise_fired)) + "," +
               g10(double(rep.trials)) + "," + g10(double(rep.violated)) +
               "\n",
           out);
    } else {
      const auto atoms = sampled_atoms(cfg, ana_cap);
      double mu = 0.0;
      size_t wi = 0, wj = 0;
      for (size_t i = 0; i < atoms.size(); ++i)
        for (size_t j = i + 1; j < atoms.size(); ++j) {
          const double g =
              std::abs(inner_product(atoms[i].raster, atoms[j].raster));
          if (g > mu) {
            mu = g;
            wi = i;
            wj = j;
          }
        }
      emit("atoms,coherence,first_bx,first_by,first_a,first_theta,"
           "second_bx,second_by,second_a,second_theta\n" +
               g10(double(atoms.size())) + "," + g10(mu) + "," +
               params_csv_cells(atoms[wi].gamma) + "," +
               params_csv_cells(atoms[wj].gamma) + "\n",
           out);
    }
  });

  // sweep: the experiment drivers behind the figures.
  auto* swp = app.add_subcommand("sweep", "run an experiment driver");
  ExperimentSpec swp_spec;
  bool swp_no_refine = false;
  DictFlags swp_dict;
  swp->add_option("--experiment", swp_spec.experiment,
                  "aniso_sweep | scale_step_sweep | transform_errors | "
                  "distance_compare | classify")
      ->required();
  swp->add_option("--values", swp_spec.sweep,
                  "grid values (nu, octave steps, or K; empty = default)");
  swp->add_option("--trials", swp_spec.trials, "trials per grid value");
  swp->add_option("--sparsity", swp_spec.sparsity, "terms per expansion");
  swp->add_option("--seed", swp_spec.seed, "generator seed");
  swp->add_option("--classes", swp_spec.classes, "glyph classes (classify)");
  swp->add_option("--train", swp_spec.train_per_class,
                  "training glyphs per class (classify)");
  swp->add_option("--test", swp_spec.test_per_class,
                  "test glyphs per class (classify)");
  swp->add_flag("--no-refine", swp_no_refine, "skip gradient refinement");
  attach_ranges(swp, swp_spec.ranges);
  swp_dict.attach(swp);
  swp->callback([&] {
    swp_spec.dict = swp_dict.build(swp_spec.dict);
    swp_spec.refine = !swp_no_refine;
    emit(run_experiment(swp_spec), out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse diagnostic
    return code == 0 ? 0 : 2;     // bad flags are configuration errors
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
