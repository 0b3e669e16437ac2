#pragma once

// Binned homodyne / heterodyne POVMs and iterative maximum-likelihood
// reconstruction with the R rho R fixed-point map.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cvtomo/measurement.hpp"
#include "cvtomo/sim.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

/// Rank-one POVM elements Pi_j = |xi_j><xi_j|, stored as the columns xi_j.
/// Column order matches Dataset::counts.
struct PovmSet {
  Modality modality = Modality::homodyne;
  Index dim = 0;
  MatrixXcd vectors;  // d x M
  /// ||G/S - I||_F (homodyne) or ||G - I||_F (heterodyne), G = sum_j Pi_j.
  double completeness_defect = 0.0;

  Index size() const { return vectors.cols(); }
  MatrixXcd element(Index j) const { return vectors.col(j) * vectors.col(j).adjoint(); }
  double probability(const DensityMatrix& rho, Index j) const {
    return expectation(rho.matrix(), vectors.col(j));
  }
};

inline PovmSet build_povm(Modality modality, const GridSpec& grid, Index d) {
  grid.validate(modality);
  if (d < 1) throw ValidationError("POVM dimension must be >= 1");
  PovmSet povm;
  povm.modality = modality;
  povm.dim = d;
  const std::size_t n = grid.n_bins;
  povm.vectors.resize(d, static_cast<Index>(grid.record_size(modality)));
  double weight = 1.0;
  if (modality == Modality::homodyne) {
    const MatrixXd psi = hermite_table(grid, d);
    Index j = 0;
    for (double theta : grid.phases) {
      for (std::size_t i = 0; i < n; ++i, ++j) {
        povm.vectors.col(j) = homodyne_bin_vector(psi.row(static_cast<Index>(i)), theta, grid.dx);
      }
    }
    weight = static_cast<double>(grid.phases.size());
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        povm.vectors.col(static_cast<Index>(a * n + b)) = heterodyne_bin_vector(grid, a, b, d);
      }
    }
  }
  const MatrixXcd g = povm.vectors * povm.vectors.adjoint();
  povm.completeness_defect = (g / weight - MatrixXcd::Identity(d, d)).norm();
  return povm;
}

namespace detail {

inline void check_shapes(const Dataset& data, const PovmSet& povm) {
  if (static_cast<Index>(data.counts.size()) != povm.size()) {
    throw ValidationError("dataset has " + std::to_string(data.counts.size()) + " bins but POVM has " +
                          std::to_string(povm.size()) + " elements");
  }
}

}  // namespace detail

/// sum_j n_j ln Tr(rho Pi_j) over bins with n_j > 0; -infinity when an
/// observed bin has zero predicted probability.
inline double log_likelihood(const DensityMatrix& rho, const Dataset& data, const PovmSet& povm) {
  detail::check_shapes(data, povm);
  if (rho.dim() != povm.dim) throw ValidationError("state and POVM dimensions differ");
  double ll = 0.0;
  for (Index j = 0; j < povm.size(); ++j) {
    const auto nj = data.counts[static_cast<std::size_t>(j)];
    if (nj <= 0) continue;
    const double q = povm.probability(rho, j);
    if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(nj) * std::log(q);
  }
  return ll;
}

struct MleConfig {
  int max_iters = 5000;
  double ll_tol = 1e-10;
  /// Step parameter of the diluted map (I + eps R); 1 means the plain R rho R step.
  double dilution = 1.0;
  /// Optional starting point; I/d when empty.
  std::optional<DensityMatrix> initial;

  void validate() const {
    if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (!(ll_tol > 0.0)) throw ValidationError("ll_tol must be > 0");
    if (!(dilution > 0.0 && dilution <= 1.0)) throw ValidationError("dilution must lie in (0, 1]");
  }
};

struct MleResult {
  DensityMatrix rho_hat;
  int iterations = 0;
  double final_ll = 0.0;
  bool converged = false;
  std::vector<double> ll_trace;
};

namespace detail {

/// Observed bins only: zero-count elements contribute nothing to ln L or R.
struct ActiveSet {
  MatrixXcd xi;
  VectorXd counts;
  double total = 0.0;
};

inline ActiveSet active_set(const VectorXd& counts, const PovmSet& povm) {
  std::vector<Index> idx;
  for (Index j = 0; j < counts.size(); ++j) {
    if (counts[j] > 0.0) idx.push_back(j);
  }
  ActiveSet a;
  a.xi.resize(povm.dim, static_cast<Index>(idx.size()));
  a.counts.resize(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    a.xi.col(static_cast<Index>(k)) = povm.vectors.col(idx[k]);
    a.counts[static_cast<Index>(k)] = counts[idx[k]];
  }
  a.total = a.counts.sum();
  return a;
}

inline VectorXd probabilities(const MatrixXcd& rho, const MatrixXcd& xi) {
  const MatrixXcd y = rho * xi;
  return (xi.conjugate().cwiseProduct(y)).colwise().sum().real().transpose();
}

inline double log_likelihood(const VectorXd& q, const VectorXd& n) {
  if ((q.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
  return (n.array() * q.array().log()).sum();
}

inline MatrixXcd normalized(const MatrixXcd& m) {
  MatrixXcd h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

}  // namespace detail

/// RrhoR iteration on real-valued counts (e.g. noise-free expectations K q_j).
inline MleResult reconstruct(const VectorXd& counts, const PovmSet& povm, const MleConfig& config = {}) {
  config.validate();
  if (counts.size() != povm.size()) {
    throw ValidationError("count vector has " + std::to_string(counts.size()) + " bins but POVM has " +
                          std::to_string(povm.size()) + " elements");
  }
  if ((counts.array() < 0.0).any() || !counts.allFinite()) {
    throw ValidationError("counts must be finite and non-negative");
  }
  const detail::ActiveSet act = detail::active_set(counts, povm);
  if (act.counts.size() == 0) throw ValidationError("no signal: every bin count is zero");
  const Index d = povm.dim;
  const MatrixXcd eye = MatrixXcd::Identity(d, d);

  MatrixXcd rho = config.initial ? config.initial->matrix() : MatrixXcd(eye / static_cast<double>(d));
  if (rho.rows() != d) throw ValidationError("initial state has the wrong dimension");
  VectorXd q = detail::probabilities(rho, act.xi);
  double ll = detail::log_likelihood(q, act.counts);

  MleResult res;
  res.ll_trace.push_back(ll);
  for (int it = 0; it < config.max_iters; ++it) {
    // R / N, which equals the identity on the support at the fixed point
    const VectorXd w = act.counts.cwiseQuotient(q) / act.total;
    const MatrixXcd r = act.xi * w.asDiagonal() * act.xi.adjoint();

    double eps = config.dilution;
    MatrixXcd next;
    VectorXd q_next;
    double ll_next = -std::numeric_limits<double>::infinity();
    for (;;) {
      const MatrixXcd step = (eps >= 1.0) ? r : MatrixXcd(eye + eps * r);
      next = detail::normalized(step * rho * step.adjoint());
      q_next = detail::probabilities(next, act.xi);
      ll_next = detail::log_likelihood(q_next, act.counts);
      if (ll_next >= ll - 1e-12 * std::abs(ll) || eps < 1e-12) break;
      eps *= 0.5;
    }
    const double change = std::abs(ll_next - ll) / std::max(std::abs(ll), 1e-300);
    rho = std::move(next);
    q = std::move(q_next);
    ll = ll_next;
    res.ll_trace.push_back(ll);
    res.iterations = it + 1;
    if (change < config.ll_tol) {
      res.converged = true;
      break;
    }
  }
  res.rho_hat = DensityMatrix::unchecked(rho);
  res.final_ll = ll;
  return res;
}

inline MleResult reconstruct(const Dataset& data, const PovmSet& povm, const MleConfig& config = {}) {
  detail::check_shapes(data, povm);
  if (data.dim != 0 && data.dim != povm.dim) throw ValidationError("dataset and POVM dimensions differ");
  VectorXd counts(static_cast<Index>(data.counts.size()));
  for (std::size_t j = 0; j < data.counts.size(); ++j) counts[static_cast<Index>(j)] = static_cast<double>(data.counts[j]);
  return reconstruct(counts, povm, config);
}

}  // namespace cvtomo
