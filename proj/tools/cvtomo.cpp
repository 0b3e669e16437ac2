// cvtomo: homodyne vs heterodyne tomography benchmarks.
//
// Every subcommand reads the campaign config format (--config) and lets
// flags override individual keys. Exit codes: 0 ok, 1 invalid input,
// 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cvtomo/cvtomo.hpp>

using namespace cvtomo;
namespace fs = std::filesystem;

namespace {

// Flag values are kept as text and written into config sections, so a flag
// and the matching config key go through the same parser.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> root;
  std::map<std::string, std::string> state;
  std::map<std::string, std::string> mle;
  std::optional<std::string> seed;

  bool state_given() const { return !state.empty(); }
};

void text_flag(CLI::App* app, const std::string& names, std::map<std::string, std::string>& section,
               const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(names, [&section, key](const std::string& v) { section[key] = v; }, help);
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "Key-value config file (campaign format)");
  app->add_option_function<std::string>("--seed", [&o](const std::string& v) { o.seed = v; }, "RNG seed");
  text_flag(app, "--threads", o.root, "threads", "Worker threads (overrides CVTOMO_THREADS)");
}

void add_state(CLI::App* app, Overrides& o) {
  text_flag(app, "--state,--kind", o.state, "kind", "thermal|coherent|squeezed|fock|superposition|random");
  text_flag(app, "--nc", o.state, "n_c", "Photon cutoff; d = nc + 1");
  text_flag(app, "--lambda", o.state, "lambda", "Thermal ratio");
  text_flag(app, "--alpha", o.state, "alpha_re", "Coherent amplitude (real part)");
  text_flag(app, "--alpha-im", o.state, "alpha_im", "Coherent amplitude (imaginary part)");
  text_flag(app, "--r", o.state, "r", "Squeezing parameter");
  text_flag(app, "--n", o.state, "n", "Fock number");
  text_flag(app, "--coeffs", o.state, "coeffs", "Superposition coefficients, comma separated");
  text_flag(app, "--purity-low", o.state, "purity_low", "Random state purity range, lower end");
  text_flag(app, "--purity-high", o.state, "purity_high", "Random state purity range, upper end");
  text_flag(app, "--state-seed", o.state, "seed", "Random state seed");
  text_flag(app, "--truncation-bound", o.root, "truncation_bound", "Largest tolerated truncation error");
}

void add_grid(CLI::App* app, Overrides& o) {
  text_flag(app, "--x1", o.root, "x1", "First bin center");
  text_flag(app, "--dx", o.root, "dx", "Bin width");
  text_flag(app, "--bins", o.root, "n_bins", "Bins per axis (N)");
  text_flag(app, "--phases", o.root, "S", "Homodyne LO phases (S)");
  text_flag(app, "--max-condition", o.root, "crlb_max_condition", "Condition number guard for the CRLB");
}

struct Resolved {
  CampaignConfig campaign;
  bool state_given = false;
};

// Config file first, then flags. Without a sampling step the --seed flag
// seeds the random ground truth unless --state-seed was given.
Resolved resolve(const Overrides& o, bool seed_is_state_seed) {
  KeyValueConfig cfg = o.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config_path);
  for (const auto& [k, v] : o.root) cfg.section()[k] = v;
  if (o.seed) {
    if (seed_is_state_seed && !o.state.count("seed")) {
      cfg.section("state")["seed"] = *o.seed;
    } else {
      cfg.section()["seed"] = *o.seed;
    }
  }
  const bool had_state = cfg.has_section("state");
  if (o.state_given()) {
    auto& st = cfg.section("state");
    for (const auto& [k, v] : o.state) st[k] = v;
  }
  for (const auto& [k, v] : o.mle) cfg.section("mle")[k] = v;
  return {parse_campaign(cfg), had_state || o.state_given()};
}

Modality single_modality(const std::string& text) { return parse_modality(text); }

std::string num(double x) { return config::format_double(x); }

// ---------------------------------------------------------------------------

int cmd_state(const Overrides& o) {
  const auto r = resolve(o, true);
  const PreparedState st = make_state(r.campaign.state, r.campaign.state_options);
  const BlochVector t = to_bloch(st.rho);
  std::cout << "kind: " << r.campaign.state.kind_name() << '\n'
            << "d: " << st.rho.dim() << '\n'
            << "purity: " << num(purity(st.rho)) << '\n'
            << "truncation_error: " << (st.truncation_error ? num(*st.truncation_error) : std::string("none")) << '\n'
            << "bloch_norm: " << num(t.t.norm()) << '\n'
            << "min_eigenvalue: " << num(st.rho.min_eigenvalue()) << '\n';
  return 0;
}

struct CfiFlags {
  std::string modality = "hom";
  std::string copies = "1";
  bool sweep = false;
  std::string csv;
};

int cmd_cfi(const Overrides& o, const CfiFlags& f) {
  const auto r = resolve(o, true);
  const CampaignConfig& c = r.campaign;
  const Modality mod = single_modality(f.modality);
  const auto copies = config::to_int<std::int64_t>("copies", f.copies);
  if (copies < 1) throw ValidationError("--copies must be >= 1");

  if (f.sweep) {
    SweepOptions opt;
    opt.state = c.state_options;
    opt.crlb = c.crlb;
    const ConvergenceReport rep = convergence_sweep(c.state, mod, copies, {}, opt);
    write_convergence_csv(std::cout, rep);
    if (!f.csv.empty()) {
      std::ofstream out(f.csv);
      if (!out) throw ValidationError("cannot write '" + f.csv + "'");
      write_convergence_csv(out, rep);
    }
    if (rep.converged()) {
      const auto& p = rep.selected_point();
      std::cout << "converged_at: S=" << p.phases << " x1=" << num(p.x1) << " dx=" << num(p.dx) << '\n'
                << "trace_inv_cfi: " << num(p.trace_inv_cfi) << '\n'
                << "crlb_frobenius: " << num(2.0 * p.trace_inv_cfi) << '\n';
    } else {
      std::cout << "converged_at: none\n";
    }
    return 0;
  }

  const PreparedState st = make_state(c.state, c.state_options);
  const GridSpec grid = c.grid(mod);
  const CfiMatrix cfi = compute_cfi(mod, to_bloch(st.rho), grid, copies);
  const double tr = trace_inverse(cfi, c.crlb);
  std::cout << "modality: " << to_string(mod) << '\n'
            << "grid: x1=" << num(grid.x1) << " dx=" << num(grid.dx) << " N=" << grid.n_bins
            << (mod == Modality::homodyne ? " S=" + std::to_string(grid.phases.size()) : std::string()) << '\n'
            << "copies: " << copies << '\n'
            << "condition_number: " << num(condition_number(cfi)) << '\n'
            << "trace_inv_cfi: " << num(tr) << '\n'
            << "crlb_frobenius: " << num(2.0 * tr) << '\n';
  return 0;
}

struct SimulateFlags {
  std::string modality = "hom";
  std::vector<std::string> copies;
  std::string out = "dataset.bin";
  bool csv = false;
};

int cmd_simulate(const Overrides& o, const SimulateFlags& f) {
  const auto r = resolve(o, false);
  const CampaignConfig& c = r.campaign;
  const Modality mod = single_modality(f.modality);
  std::vector<std::int64_t> ks;
  for (const auto& s : f.copies) {
    for (const auto& item : config::split_list(s)) ks.push_back(config::to_int<std::int64_t>("copies", item));
  }
  if (ks.empty()) ks.push_back(c.phases * 1000);

  const PreparedState st = make_state(c.state, c.state_options);
  const BinnedDistribution dist = bin_distribution(st.rho, mod, c.grid(mod));
  const auto sets = sample_checkpoints(dist, ks, c.seed, st.rho.dim());

  const fs::path out(f.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  for (const auto& data : sets) {
    fs::path path = out;
    if (sets.size() > 1) {
      path = out.parent_path() / (out.stem().string() + "_K" + std::to_string(data.copies) + out.extension().string());
    }
    save_dataset(path.string(), data);
    std::cout << "wrote " << path.string() << " (K=" << data.copies << ")\n";
    if (f.csv) {
      fs::path csv = path;
      csv.replace_extension(".csv");
      std::ofstream cs(csv);
      write_dataset_csv(cs, data);
      std::cout << "wrote " << csv.string() << '\n';
    }
  }
  std::cout << "grid_leak: " << num(dist.leak) << '\n';
  return 0;
}

struct MleFlags {
  std::string data;
  std::string out;
};

int cmd_mle(const Overrides& o, const MleFlags& f) {
  const auto r = resolve(o, false);
  const Dataset data = load_dataset(f.data);
  Index d = data.dim;
  if (r.state_given) d = r.campaign.state.n_c + 1;
  if (d < 1) throw ValidationError("dataset has no dimension; pass --nc");
  const PovmSet povm = build_povm(data.modality, data.grid, d);
  const MleResult res = reconstruct(data, povm, r.campaign.mle);

  nlohmann::json j = to_json(res);
  j["modality"] = std::string(to_string(data.modality));
  j["copies"] = data.copies;
  j["purity"] = purity(res.rho_hat);
  if (r.state_given) {
    const PreparedState truth = make_state(r.campaign.state, r.campaign.state_options);
    j["frobenius_sq"] = frobenius_sq(res.rho_hat, truth.rho);
  }
  if (f.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(f.out);
    if (!out) throw ValidationError("cannot write '" + f.out + "'");
    out << j.dump(2) << '\n';
    std::cout << "iterations: " << res.iterations << (res.converged ? "" : " (not converged)") << '\n'
              << "purity: " << num(purity(res.rho_hat)) << '\n';
    if (j.contains("frobenius_sq")) std::cout << "frobenius_sq: " << num(j["frobenius_sq"].get<double>()) << '\n';
    std::cout << "wrote " << f.out << '\n';
  }
  return 0;
}

struct BenchFlags {
  bool full = false;
  bool wigner = false;
  bool save_datasets = false;
};

int cmd_bench(const Overrides& o, const BenchFlags& f) {
  auto r = resolve(o, false);
  CampaignConfig& c = r.campaign;
  if (f.full) c.k_max = 1'000'000'000;
  if (f.wigner) c.emit_wigner = true;
  if (f.save_datasets) c.save_datasets = true;
  if (c.output.empty()) c.output = "cvtomo_out";
  const auto curves = run_campaign(c);
  std::cout << "modality,K,mean_frobenius_sq,crlb\n";
  for (const auto& curve : curves) {
    for (const auto& row : curve.rows) {
      std::cout << to_string(curve.modality) << ',' << row.copies << ',' << num(row.mean) << ',' << num(row.crlb)
                << '\n';
    }
    if (!curve.crlb_note.empty()) std::cout << "# " << to_string(curve.modality) << " crlb: " << curve.crlb_note << '\n';
  }
  std::cout << "output: " << c.output << '\n';
  return 0;
}

struct WignerFlags {
  double span = 6.0;
  std::size_t points = 128;
  std::string out = "wigner.csv";
};

int cmd_wigner(const Overrides& o, const WignerFlags& f) {
  const auto r = resolve(o, true);
  const WignerGrid g = emit_wigner_grid(r.campaign.state, f.span, f.points, f.out, r.campaign.state_options);
  std::cout << "min: " << num(g.values.minCoeff()) << '\n'
            << "max: " << num(g.values.maxCoeff()) << '\n'
            << "integral: " << num(g.values.sum() * g.cell_area) << '\n'
            << "wrote " << f.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homodyne vs heterodyne tomography benchmarks", "cvtomo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Overrides o;
  CfiFlags cfi;
  SimulateFlags sim;
  MleFlags mle;
  BenchFlags bench;
  WignerFlags wig;

  auto* s_state = app.add_subcommand("state", "Build a state and summarize it");
  add_common(s_state, o);
  add_state(s_state, o);

  auto* s_cfi = app.add_subcommand("cfi", "Fisher information and Frobenius CRLB");
  add_common(s_cfi, o);
  add_state(s_cfi, o);
  add_grid(s_cfi, o);
  s_cfi->add_option("--modality", cfi.modality, "hom or het")->capture_default_str();
  s_cfi->add_option("--copies", cfi.copies, "Copies K")->capture_default_str();
  s_cfi->add_flag("--sweep", cfi.sweep, "Run the grid convergence sweep");
  s_cfi->add_option("--csv", cfi.csv, "Also write the sweep table here");

  auto* s_sim = app.add_subcommand("simulate", "Sample binned count records");
  add_common(s_sim, o);
  add_state(s_sim, o);
  add_grid(s_sim, o);
  s_sim->add_option("--modality", sim.modality, "hom or het")->capture_default_str();
  s_sim->add_option("--copies,--checkpoints", sim.copies, "Copy counts (cumulative checkpoints)");
  s_sim->add_option("--out", sim.out, "Output dataset path")->capture_default_str();
  s_sim->add_flag("--csv", sim.csv, "Also write CSV next to each dataset");

  auto* s_mle = app.add_subcommand("mle", "Reconstruct a state from a dataset file");
  add_common(s_mle, o);
  add_state(s_mle, o);
  s_mle->add_option("--data", mle.data, "Dataset file")->required();
  s_mle->add_option("--out", mle.out, "Result JSON (stdout if omitted)");
  text_flag(s_mle, "--max-iters", o.mle, "max_iters", "Iteration cap");
  text_flag(s_mle, "--ll-tol", o.mle, "ll_tol", "Relative log-likelihood tolerance");
  text_flag(s_mle, "--dilution", o.mle, "dilution", "Diluted step parameter in (0, 1]");

  auto* s_bench = app.add_subcommand("bench", "Run a simulation campaign");
  add_common(s_bench, o);
  add_state(s_bench, o);
  add_grid(s_bench, o);
  text_flag(s_bench, "--out,--output", o.root, "output", "Output directory");
  text_flag(s_bench, "--trials,-E", o.root, "E", "Trials per modality");
  text_flag(s_bench, "--kmax", o.root, "K_max", "Largest copy count");
  text_flag(s_bench, "--checkpoints", o.root, "checkpoints", "Comma separated copy counts");
  text_flag(s_bench, "--modalities", o.root, "modalities", "Comma separated: hom,het");
  s_bench->add_flag("--full", bench.full, "K_max = 1e9 (hour-scale)");
  s_bench->add_flag("--wigner", bench.wigner, "Also write wigner.csv");
  s_bench->add_flag("--save-datasets", bench.save_datasets, "Keep every sampled dataset under data/");

  auto* s_wig = app.add_subcommand("wigner", "Write the Wigner function on a grid");
  add_common(s_wig, o);
  add_state(s_wig, o);
  s_wig->add_option("--span", wig.span, "Half width of the square grid")->capture_default_str();
  s_wig->add_option("--points", wig.points, "Points per axis")->capture_default_str();
  s_wig->add_option("--out", wig.out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return 1;
  }

  try {
    if (*s_state) return cmd_state(o);
    if (*s_cfi) return cmd_cfi(o, cfi);
    if (*s_sim) return cmd_simulate(o, sim);
    if (*s_mle) return cmd_mle(o, mle);
    if (*s_bench) return cmd_bench(o, bench);
    if (*s_wig) return cmd_wigner(o, wig);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
