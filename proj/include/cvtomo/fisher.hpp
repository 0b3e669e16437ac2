#pragma once

// Classical Fisher information of binned homodyne / heterodyne data with
// respect to the GGM Bloch vector, and the Frobenius-error Cramer-Rao bound.
//
// For bin probabilities q_i(t) = Tr(rho(t) Pi_i), which are affine in t,
//   I = K * sum_i c_i c_i^T / q_i,   c_ij = Tr(Pi_i Om_j),
//   q_i = Tr(Pi_i)/d + sum_j t_j c_ij.
// Homodyne averages the per-phase sums over S phases (K/S copies each).
//
// I is accumulated as an upper-triangular root R (I = R^T R) by streaming QR
// of the weighted rows c_i / sqrt(q_i). Near-pure states push cond(I) past
// 1e16, where forming I and factoring it loses everything; working from R
// only costs cond(R) = sqrt(cond(I)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvtomo/ggm.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/states.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

struct CfiMatrix {
  Index dim = 0;
  std::int64_t copies = 1;
  MatrixXd matrix;
  /// Upper triangular with root.transpose() * root == matrix.
  MatrixXd root;

  /// Same information at a different copy count (the CFI is linear in K).
  CfiMatrix at_copies(std::int64_t k) const {
    const double f = static_cast<double>(k) / static_cast<double>(copies);
    return {dim, k, matrix * f, root * std::sqrt(f)};
  }

  /// From an unscaled root r: matrix = scale * r^T r, root = sqrt(scale) * r.
  static CfiMatrix from_root(Index dim, std::int64_t copies, const MatrixXd& r, double scale) {
    MatrixXd m = r.transpose() * r;
    return {dim, copies, m * scale, r * std::sqrt(scale)};
  }
};

namespace detail {

inline constexpr double kMinBinProbability = 1e-300;

class CfiAccumulator {
 public:
  CfiAccumulator(const BlochVector& t, Index block_rows)
      : basis_(t.dim),
        t_(t.t),
        np_(t.t.size()),
        work_(MatrixXd::Zero(np_ + block_rows, np_)),
        c_(np_) {}

  /// Adds one bin; (phase, bin) identify it in degenerate-bin diagnostics.
  void add(const VectorXcd& xi, std::size_t phase, std::size_t bin) {
    basis_.expectations(xi, c_);
    const double q = xi.squaredNorm() / static_cast<double>(basis_.dim()) + c_.dot(t_);
    if (!(q >= kMinBinProbability)) {
      if (degenerate_.size() < 8) degenerate_.emplace_back(phase, bin);
      ++n_degenerate_;
      return;
    }
    work_.row(np_ + rows_) = c_.transpose() / std::sqrt(q);
    if (++rows_ == work_.rows() - np_) flush();
  }

  /// Returns R with R^T R = sum_i c_i c_i^T / q_i.
  MatrixXd finish() {
    flush();
    if (n_degenerate_ > 0) {
      std::ostringstream os;
      os << "degenerate bin: " << n_degenerate_
         << " bin(s) have probability below 1e-300, first (phase, bin):";
      for (const auto& [s, i] : degenerate_) os << " (" << s << ", " << i << ")";
      os << "; shrink the grid span or regularize the state (pure states have exact zeros)";
      throw DegenerateBinError(os.str());
    }
    return work_.topRows(np_);
  }

 private:
  // QR of [R; new rows]; the new R overwrites the top block.
  void flush() {
    if (rows_ == 0) return;
    Eigen::Ref<MatrixXd> stacked = work_.topRows(np_ + rows_);
    Eigen::HouseholderQR<Eigen::Ref<MatrixXd>> qr(stacked);
    work_.topRows(np_) = work_.topRows(np_).triangularView<Eigen::Upper>();
    work_.middleRows(np_, rows_).setZero();
    rows_ = 0;
  }

  GgmBasis basis_;
  VectorXd t_;
  Index np_;
  MatrixXd work_;  // top np_ rows: current R; below: pending weighted rows
  VectorXd c_;
  Index rows_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_;
  std::size_t n_degenerate_ = 0;
};

inline void check_copies(std::int64_t k) {
  if (k < 1) throw ValidationError("copy count K must be >= 1");
}

inline constexpr Index kCfiBlockRows = 2048;

}  // namespace detail

inline CfiMatrix homodyne_cfi(const BlochVector& t, const GridSpec& grid, std::int64_t copies) {
  grid.validate(Modality::homodyne);
  detail::check_copies(copies);
  const Index d = t.dim;
  const MatrixXd psi = hermite_table(grid, d);
  detail::CfiAccumulator acc(t, detail::kCfiBlockRows);
  for (std::size_t s = 0; s < grid.phases.size(); ++s) {
    for (std::size_t i = 0; i < grid.n_bins; ++i) {
      acc.add(homodyne_bin_vector(psi.row(static_cast<Index>(i)), grid.phases[s], grid.dx), s, i);
    }
  }
  const double scale = static_cast<double>(copies) / static_cast<double>(grid.phases.size());
  return CfiMatrix::from_root(d, copies, acc.finish(), scale);
}

/// Bins are flattened row-major: flat index a*N + b holds (x_a, p_b).
inline CfiMatrix heterodyne_cfi(const BlochVector& t, const GridSpec& grid, std::int64_t copies) {
  grid.validate(Modality::heterodyne);
  detail::check_copies(copies);
  const Index d = t.dim;
  detail::CfiAccumulator acc(t, detail::kCfiBlockRows);
  const std::size_t n = grid.n_bins;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) acc.add(heterodyne_bin_vector(grid, a, b, d), 0, a * n + b);
  }
  return CfiMatrix::from_root(d, copies, acc.finish(), static_cast<double>(copies));
}

inline CfiMatrix compute_cfi(Modality m, const BlochVector& t, const GridSpec& grid, std::int64_t copies) {
  return m == Modality::homodyne ? homodyne_cfi(t, grid, copies) : heterodyne_cfi(t, grid, copies);
}

struct CrlbOptions {
  double max_condition = 1e12;
};

namespace detail {

/// Upper-triangular root of the CFI, taken from the matrix if none was kept.
inline MatrixXd cfi_root(const CfiMatrix& cfi) {
  if (cfi.root.size() > 0) return cfi.root;
  Eigen::LLT<MatrixXd> llt(0.5 * (cfi.matrix + cfi.matrix.transpose()));
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError(std::numeric_limits<double>::infinity());
  }
  return llt.matrixU();
}

inline double root_condition(const MatrixXd& r) {
  Eigen::JacobiSVD<MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  const double lo = sv[sv.size() - 1];
  return lo > 0.0 ? (sv[0] / lo) * (sv[0] / lo) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline double condition_number(const CfiMatrix& cfi) {
  try {
    return detail::root_condition(detail::cfi_root(cfi));
  } catch (const IllConditionedError&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Tr I^{-1} = ||R^{-1}||_F^2 from triangular solves against each basis
/// column; the inverse is never formed. Throws IllConditionedError when
/// cond(I) reaches the guard.
inline double trace_inverse(const CfiMatrix& cfi, const CrlbOptions& options = {}) {
  const MatrixXd r = detail::cfi_root(cfi);
  const double cond = detail::root_condition(r);
  if (!(cond < options.max_condition)) throw IllConditionedError(cond);
  const auto tri = r.triangularView<Eigen::Upper>();
  double trace = 0.0;
  VectorXd e = VectorXd::Zero(r.rows());
  for (Index k = 0; k < r.rows(); ++k) {
    e.setZero();
    e[k] = 1.0;
    trace += tri.solve(e).squaredNorm();
  }
  return trace;
}

/// Lower bound on E||rho_hat - rho||_F^2: 2 Tr I^{-1}.
inline double crlb_frobenius(const CfiMatrix& cfi, const CrlbOptions& options = {}) {
  return 2.0 * trace_inverse(cfi, options);
}

// ---------------------------------------------------------------------------
// Grid-convergence sweep

struct SweepAxes {
  std::vector<std::size_t> phases{200, 300, 400, 500, 600};
  std::vector<double> x1{-2.5, -3.75, -5.0, -6.5, -7.5};
  std::vector<double> dx{1.5, 1.0, 0.5, 0.1, 0.05};
};

struct SweepPoint {
  std::size_t phases = 1;
  double x1 = 0.0;
  double dx = 0.0;
  std::size_t n_bins = 0;
  double trace_inv_cfi = 0.0;
  /// Largest percent error against the forward neighbors; NaN at the edge.
  double max_neighbor_pct_err = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

struct ConvergenceReport {
  Modality modality = Modality::homodyne;
  std::vector<SweepPoint> points;  // sweep order: S, then x1, then dx
  std::optional<std::size_t> selected;
  double threshold_pct = 2.0;

  bool converged() const { return selected.has_value(); }
  const SweepPoint& selected_point() const { return points.at(*selected); }
  double converged_value() const {
    return converged() ? selected_point().trace_inv_cfi : std::numeric_limits<double>::quiet_NaN();
  }
};

struct SweepOptions {
  double threshold_pct = 2.0;
  MakeStateOptions state;
  CrlbOptions crlb;
};

inline ConvergenceReport convergence_sweep(const BlochVector& t, Modality modality, std::int64_t copies,
                                           const SweepAxes& axes = {}, const SweepOptions& options = {}) {
  // heterodyne uses a single LO setting, so the S axis collapses
  const std::vector<std::size_t> s_axis =
      modality == Modality::homodyne ? axes.phases : std::vector<std::size_t>{1};
  const std::size_t ns = s_axis.size();
  const std::size_t nx = axes.x1.size();
  const std::size_t nd = axes.dx.size();
  if (ns == 0 || nx == 0 || nd == 0) throw ValidationError("convergence sweep axes must be non-empty");

  ConvergenceReport report;
  report.modality = modality;
  report.threshold_pct = options.threshold_pct;
  report.points.resize(ns * nx * nd);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> SweepPoint& {
    return report.points[(i * nx + j) * nd + k];
  };

  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      for (std::size_t k = 0; k < nd; ++k) {
        SweepPoint& pt = at(i, j, k);
        pt.phases = s_axis[i];
        pt.x1 = axes.x1[j];
        pt.dx = axes.dx[k];
        pt.n_bins = GridSpec::symmetric_bins(pt.x1, pt.dx);
        const GridSpec grid = modality == Modality::homodyne
                                  ? GridSpec::homodyne(pt.x1, pt.dx, pt.n_bins, pt.phases)
                                  : GridSpec::heterodyne(pt.x1, pt.dx, pt.n_bins);
        std::ostringstream where;
        where << "at grid point (S=" << pt.phases << ", x1=" << pt.x1 << ", dx=" << pt.dx << "): ";
        try {
          pt.trace_inv_cfi = trace_inverse(compute_cfi(modality, t, grid, copies), options.crlb);
        } catch (const IllConditionedError& e) {
          throw IllConditionedError(e.condition_number(), where.str());
        } catch (const DegenerateBinError& e) {
          throw DegenerateBinError(where.str() + e.what());
        }
      }
    }
  }

  const std::size_t di_max = modality == Modality::homodyne ? 1 : 0;
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      for (std::size_t k = 0; k < nd; ++k) {
        if (i + di_max >= ns || j + 1 >= nx || k + 1 >= nd) continue;
        SweepPoint& pt = at(i, j, k);
        double worst = 0.0;
        for (std::size_t a = 0; a <= di_max; ++a) {
          for (std::size_t b = 0; b <= 1; ++b) {
            for (std::size_t c = 0; c <= 1; ++c) {
              if (a + b + c == 0) continue;
              const double nb = at(i + a, j + b, k + c).trace_inv_cfi;
              worst = std::max(worst, 100.0 * std::abs(nb - pt.trace_inv_cfi) / std::abs(pt.trace_inv_cfi));
            }
          }
        }
        pt.max_neighbor_pct_err = worst;
        pt.converged = worst < options.threshold_pct;
        if (pt.converged && !report.selected) report.selected = (i * nx + j) * nd + k;
      }
    }
  }
  return report;
}

inline ConvergenceReport convergence_sweep(const StateSpec& spec, Modality modality, std::int64_t copies,
                                           const SweepAxes& axes = {}, const SweepOptions& options = {}) {
  const PreparedState state = make_state(spec, options.state);
  return convergence_sweep(to_bloch(state.rho), modality, copies, axes, options);
}

}  // namespace cvtomo
