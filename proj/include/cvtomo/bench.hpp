#pragma once

// Campaign orchestration: ground truth -> binned distribution -> cumulative
// multinomial checkpoints -> MLE per checkpoint, repeated over trials, with
// the Frobenius CRLB evaluated once on the simulation grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvtomo/config.hpp"
#include "cvtomo/fisher.hpp"
#include "cvtomo/ggm.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/mle.hpp"
#include "cvtomo/parallel.hpp"
#include "cvtomo/random.hpp"
#include "cvtomo/sim.hpp"
#include "cvtomo/states.hpp"

namespace cvtomo {

inline constexpr const char* kVersion = "0.1.0";

struct CampaignConfig {
  StateSpec state;
  MakeStateOptions state_options;
  std::vector<Modality> modalities{Modality::homodyne, Modality::heterodyne};
  // Simulation grid, shared by both modalities (p-axis used by heterodyne only).
  double x1 = -10.0;
  double dx = 0.1005;
  std::size_t n_bins = 200;
  std::size_t phases = 100;
  double p1 = -10.0;
  double dp = 0.1005;
  std::int64_t k_max = 10'000'000;
  /// Empty means 10 log-spaced points per decade from 10^2 to k_max.
  std::vector<std::int64_t> checkpoints;
  int trials = 10;
  std::uint64_t seed = 1;
  std::string output;
  bool save_datasets = false;
  bool emit_wigner = false;
  MleConfig mle;
  /// Pure ground truths need a looser guard; the root-based solve stays
  /// accurate to roughly sqrt(cond) * 1e-16.
  CrlbOptions crlb;
  int threads = 0;

  GridSpec grid(Modality m) const {
    GridSpec g = m == Modality::homodyne ? GridSpec::homodyne(x1, dx, n_bins, phases)
                                         : GridSpec::heterodyne(x1, dx, n_bins);
    if (m == Modality::heterodyne) {
      g.p1 = p1;
      g.dp = dp;
    }
    return g;
  }

  bool has(Modality m) const { return std::find(modalities.begin(), modalities.end(), m) != modalities.end(); }

  std::vector<std::int64_t> resolved_checkpoints() const {
    const std::int64_t multiple = has(Modality::homodyne) ? static_cast<std::int64_t>(phases) : 1;
    return checkpoints.empty() ? log_checkpoints(k_max, 10, multiple) : checkpoints;
  }

  void validate() const {
    state.validate();
    if (modalities.empty()) throw ValidationError("campaign needs at least one modality");
    if (trials < 1) throw ValidationError("campaign needs E >= 1 trials");
    if (k_max < 1) throw ValidationError("K_max must be >= 1");
    for (Modality m : modalities) grid(m).validate(m);
    const auto ks = resolved_checkpoints();
    if (ks.empty()) throw ValidationError("campaign has no checkpoints");
    std::int64_t prev = 0;
    for (auto k : ks) {
      if (k <= prev) throw ValidationError("checkpoints must be strictly increasing and positive");
      if (k > k_max) throw ValidationError("checkpoint " + std::to_string(k) + " exceeds K_max");
      if (has(Modality::homodyne) && k % static_cast<std::int64_t>(phases) != 0) {
        throw ValidationError("checkpoint " + std::to_string(k) + " is not divisible by S");
      }
      prev = k;
    }
    mle.validate();
    if (!(crlb.max_condition > 1.0)) throw ValidationError("crlb_max_condition must exceed 1");
  }
};

struct ErrorRow {
  std::int64_t copies = 0;
  std::vector<double> trial_errors;
  double mean = 0.0;
  double crlb = std::numeric_limits<double>::quiet_NaN();
};

struct ErrorCurve {
  Modality modality = Modality::homodyne;
  std::vector<ErrorRow> rows;
  /// 2 Tr I^{-1} at K = 1; NaN when the information matrix is unusable.
  double crlb_unit = std::numeric_limits<double>::quiet_NaN();
  std::string crlb_note;
  double leak = 0.0;
  double completeness_defect = 0.0;
  std::vector<std::vector<int>> iterations;  // [trial][checkpoint]
};

// ---------------------------------------------------------------------------
// Config file <-> CampaignConfig. Campaign keys live in the root section,
// the ground truth in [state]; [mle] holds max_iters, ll_tol, dilution.

inline CampaignConfig parse_campaign(const KeyValueConfig& cfg) {
  CampaignConfig c;
  const auto& kv = cfg.section();
  for (const auto& [key, v] : kv) {
    using config::to_double;
    using config::to_int;
    if (key == "modalities") {
      c.modalities.clear();
      for (const auto& m : config::split_list(v)) c.modalities.push_back(parse_modality(m));
    } else if (key == "x1") {
      c.x1 = to_double(key, v);
    } else if (key == "dx") {
      c.dx = to_double(key, v);
    } else if (key == "n_bins") {
      c.n_bins = to_int<std::size_t>(key, v);
    } else if (key == "S") {
      c.phases = to_int<std::size_t>(key, v);
    } else if (key == "p1") {
      c.p1 = to_double(key, v);
    } else if (key == "dp") {
      c.dp = to_double(key, v);
    } else if (key == "K_max") {
      c.k_max = to_int<std::int64_t>(key, v);
    } else if (key == "checkpoints") {
      c.checkpoints.clear();
      for (const auto& k : config::split_list(v)) c.checkpoints.push_back(to_int<std::int64_t>(key, k));
    } else if (key == "E") {
      c.trials = to_int<int>(key, v);
    } else if (key == "seed") {
      c.seed = to_int<std::uint64_t>(key, v);
    } else if (key == "output") {
      c.output = v;
    } else if (key == "save_datasets") {
      c.save_datasets = (v == "1" || v == "true");
    } else if (key == "wigner") {
      c.emit_wigner = (v == "1" || v == "true");
    } else if (key == "truncation_bound") {
      c.state_options.truncation_bound = to_double(key, v);
    } else if (key == "crlb_max_condition") {
      c.crlb.max_condition = to_double(key, v);
    } else if (key == "threads") {
      c.threads = to_int<int>(key, v);
    } else {
      throw ValidationError("unknown campaign key '" + key + "'");
    }
  }
  if (cfg.has_section("state")) c.state = parse_state_spec(cfg.section("state"));
  for (const auto& [key, v] : cfg.section("mle")) {
    if (key == "max_iters") {
      c.mle.max_iters = config::to_int<int>(key, v);
    } else if (key == "ll_tol") {
      c.mle.ll_tol = config::to_double(key, v);
    } else if (key == "dilution") {
      c.mle.dilution = config::to_double(key, v);
    } else {
      throw ValidationError("unknown mle key '" + key + "'");
    }
  }
  return c;
}

inline KeyValueConfig campaign_entries(const CampaignConfig& c) {
  using config::format_double;
  KeyValueConfig cfg;
  auto& kv = cfg.section();
  std::string mods;
  for (std::size_t i = 0; i < c.modalities.size(); ++i) mods += (i ? "," : "") + std::string(to_string(c.modalities[i]));
  kv["modalities"] = mods;
  kv["x1"] = format_double(c.x1);
  kv["dx"] = format_double(c.dx);
  kv["n_bins"] = std::to_string(c.n_bins);
  kv["S"] = std::to_string(c.phases);
  kv["p1"] = format_double(c.p1);
  kv["dp"] = format_double(c.dp);
  kv["K_max"] = std::to_string(c.k_max);
  std::string ks;
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) ks += (i ? "," : "") + std::to_string(c.checkpoints[i]);
  if (!ks.empty()) kv["checkpoints"] = ks;
  kv["E"] = std::to_string(c.trials);
  kv["seed"] = std::to_string(c.seed);
  if (!c.output.empty()) kv["output"] = c.output;
  kv["truncation_bound"] = format_double(c.state_options.truncation_bound);
  kv["crlb_max_condition"] = format_double(c.crlb.max_condition);
  cfg.section("state") = state_spec_entries(c.state);
  auto& mle = cfg.section("mle");
  mle["max_iters"] = std::to_string(c.mle.max_iters);
  mle["ll_tol"] = format_double(c.mle.ll_tol);
  mle["dilution"] = format_double(c.mle.dilution);
  return cfg;
}

// ---------------------------------------------------------------------------

struct WignerGrid {
  std::vector<double> axis;
  MatrixXd values;  // values(i, j) = W(axis[i], axis[j])
  double cell_area = 0.0;
};

/// W on an n x n grid with spacing 2*span/n starting at -span (so the
/// origin is a grid point for even n).
inline WignerGrid wigner_grid(const DensityMatrix& rho, double span, std::size_t n_points) {
  if (n_points < 16) throw ValidationError("wigner grid needs at least 16 points per axis");
  if (!(span > 0.0)) throw ValidationError("wigner span must be positive");
  WignerGrid g;
  const double h = 2.0 * span / static_cast<double>(n_points);
  g.cell_area = h * h;
  for (std::size_t i = 0; i < n_points; ++i) g.axis.push_back(-span + static_cast<double>(i) * h);
  const auto n = static_cast<Index>(n_points);
  g.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g.values(i, j) = wigner(rho, g.axis[static_cast<std::size_t>(i)], g.axis[static_cast<std::size_t>(j)]);
  }
  return g;
}

inline void write_wigner_csv(std::ostream& out, const WignerGrid& g) {
  out << "x,p,w\n";
  for (std::size_t i = 0; i < g.axis.size(); ++i) {
    for (std::size_t j = 0; j < g.axis.size(); ++j) {
      out << config::format_double(g.axis[i]) << ',' << config::format_double(g.axis[j]) << ','
          << config::format_double(g.values(static_cast<Index>(i), static_cast<Index>(j))) << '\n';
    }
  }
}

inline WignerGrid emit_wigner_grid(const StateSpec& spec, double span, std::size_t n_points, const std::string& path,
                                   const MakeStateOptions& options = {}) {
  const PreparedState state = make_state(spec, options);
  WignerGrid g = wigner_grid(state.rho, span, n_points);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_wigner_csv(out, g);
  return g;
}

// ---------------------------------------------------------------------------

inline void write_error_csv(std::ostream& out, const ErrorCurve& curve) {
  out << "K,trial,frobenius_sq,mean_frobenius_sq,crlb\n";
  for (const auto& row : curve.rows) {
    for (std::size_t e = 0; e < row.trial_errors.size(); ++e) {
      out << row.copies << ',' << e + 1 << ',' << config::format_double(row.trial_errors[e]) << ','
          << config::format_double(row.mean) << ',' << config::format_double(row.crlb) << '\n';
    }
  }
}

namespace detail {

struct TrialOutcome {
  std::vector<double> errors;
  std::vector<int> iterations;
  std::string error;
  bool numerical = false;
};

inline void fill_rows(ErrorCurve& curve, const std::vector<std::int64_t>& ks, const std::vector<TrialOutcome>& trials) {
  curve.rows.clear();
  curve.iterations.clear();
  for (std::size_t c = 0; c < ks.size(); ++c) {
    ErrorRow row;
    row.copies = ks[c];
    for (const auto& t : trials) {
      if (c < t.errors.size()) row.trial_errors.push_back(t.errors[c]);
    }
    if (row.trial_errors.empty()) continue;
    double sum = 0.0;
    for (double v : row.trial_errors) sum += v;
    row.mean = sum / static_cast<double>(row.trial_errors.size());
    row.crlb = curve.crlb_unit / static_cast<double>(ks[c]);
    curve.rows.push_back(std::move(row));
  }
  for (const auto& t : trials) curve.iterations.push_back(t.iterations);
}

inline nlohmann::json manifest(const CampaignConfig& c, const std::vector<ErrorCurve>& curves,
                               const std::vector<std::int64_t>& ks, const PreparedState& truth) {
  nlohmann::json j;
  j["tool"] = "cvtomo";
  j["version"] = kVersion;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["config"] = to_config_text(campaign_entries(c).section()) + "[state]\n" +
                to_config_text(campaign_entries(c).section("state")) + "[mle]\n" +
                to_config_text(campaign_entries(c).section("mle"));
  j["checkpoints"] = ks;
  j["purity"] = purity(truth.rho);
  if (truth.truncation_error) j["truncation_error"] = *truth.truncation_error;
  for (const auto& curve : curves) {
    nlohmann::json m;
    std::vector<std::uint64_t> seeds;
    for (int e = 0; e < c.trials; ++e) {
      seeds.push_back(substream_seed(c.seed, {static_cast<std::uint64_t>(curve.modality), static_cast<std::uint64_t>(e)}));
    }
    m["trial_seeds"] = seeds;
    m["crlb_at_K1"] = std::isnan(curve.crlb_unit) ? nlohmann::json(nullptr) : nlohmann::json(curve.crlb_unit);
    if (!curve.crlb_note.empty()) m["crlb_note"] = curve.crlb_note;
    m["grid_leak"] = curve.leak;
    m["povm_completeness_defect"] = curve.completeness_defect;
    m["mle_iterations"] = curve.iterations;
    j["modalities"][std::string(to_string(curve.modality))] = m;
  }
  return j;
}

}  // namespace detail

/// Runs every configured modality. When `config.output` is set, writes
/// errors_<modality>.csv and manifest.json there (plus data/ and wigner.csv
/// on request). Output is a deterministic function of the config.
inline std::vector<ErrorCurve> run_campaign(const CampaignConfig& config) {
  config.validate();
  const PreparedState truth = make_state(config.state, config.state_options);
  const Index d = truth.rho.dim();
  const BlochVector t = to_bloch(truth.rho);
  const auto ks = config.resolved_checkpoints();
  const unsigned threads = resolve_threads(config.threads);

  namespace fs = std::filesystem;
  const bool write = !config.output.empty();
  if (write) {
    fs::create_directories(config.output);
    if (config.save_datasets) fs::create_directories(fs::path(config.output) / "data");
  }

  std::vector<ErrorCurve> curves;
  std::string failure;
  bool numerical_failure = false;
  for (Modality mod : config.modalities) {
    ErrorCurve curve;
    curve.modality = mod;
    const GridSpec grid = config.grid(mod);
    const BinnedDistribution dist = bin_distribution(truth.rho, mod, grid);
    curve.leak = dist.leak;
    const PovmSet povm = build_povm(mod, grid, d);
    curve.completeness_defect = povm.completeness_defect;
    try {
      curve.crlb_unit = crlb_frobenius(compute_cfi(mod, t, grid, 1), config.crlb);
    } catch (const NumericalError& e) {
      // pure ground truths routinely land here; the curve is still useful
      curve.crlb_note = e.what();
    }

    std::vector<detail::TrialOutcome> outcomes(static_cast<std::size_t>(config.trials));
    parallel_for(outcomes.size(), threads, [&](std::size_t e) {
      auto& out = outcomes[e];
      const std::uint64_t seed = substream_seed(config.seed, {static_cast<std::uint64_t>(mod), e});
      std::int64_t current_k = 0;
      try {
        const auto datasets = sample_checkpoints(dist, ks, seed, d);
        for (const auto& data : datasets) {
          current_k = data.copies;
          if (write && config.save_datasets) {
            save_dataset((fs::path(config.output) / "data" /
                          (std::string(to_string(mod)) + "_trial" + std::to_string(e + 1) + "_K" +
                           std::to_string(data.copies) + ".bin"))
                             .string(),
                         data);
          }
          const MleResult r = reconstruct(data, povm, config.mle);
          out.errors.push_back(frobenius_sq(r.rho_hat, truth.rho));
          out.iterations.push_back(r.iterations);
        }
      } catch (const std::exception& ex) {
        out.error = "trial " + std::to_string(e + 1) + ", checkpoint K=" + std::to_string(current_k) + ": " + ex.what();
        out.numerical = dynamic_cast<const NumericalError*>(&ex) != nullptr;
      }
    });

    detail::fill_rows(curve, ks, outcomes);
    for (const auto& o : outcomes) {
      if (!o.error.empty() && failure.empty()) {
        failure = std::string(to_string(mod)) + " " + o.error;
        numerical_failure = o.numerical;
      }
    }
    if (write) {
      std::ofstream csv(fs::path(config.output) / ("errors_" + std::string(to_string(mod)) + ".csv"));
      write_error_csv(csv, curve);
    }
    curves.push_back(std::move(curve));
    if (!failure.empty()) break;
  }

  if (write) {
    std::ofstream js(fs::path(config.output) / "manifest.json");
    js << detail::manifest(config, curves, ks, truth).dump(2) << '\n';
    if (config.emit_wigner) {
      std::ofstream w(fs::path(config.output) / "wigner.csv");
      write_wigner_csv(w, wigner_grid(truth.rho, 6.0, 128));
    }
  }
  if (!failure.empty()) {
    if (numerical_failure) throw NumericalError(failure);
    throw ValidationError(failure);
  }
  return curves;
}

}  // namespace cvtomo
