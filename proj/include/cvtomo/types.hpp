#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "cvtomo/error.hpp"

namespace cvtomo {

using Complex = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Modality { homodyne, heterodyne };

inline std::string_view to_string(Modality m) {
  return m == Modality::homodyne ? "hom" : "het";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "hom" || s == "homodyne") return Modality::homodyne;
  if (s == "het" || s == "heterodyne") return Modality::heterodyne;
  throw ValidationError("unknown modality '" + std::string(s) + "' (expected hom or het)");
}

/// Density matrix in the truncated Fock basis, dimension d = n_c + 1.
///
/// `checked` enforces Hermiticity, unit trace and positivity. `unchecked`
/// exists for intermediate results such as a Bloch vector mapped back to a
/// matrix, which is Hermitian with unit trace but need not be PSD.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kPsdTol = 1e-10;

  DensityMatrix() = default;

  static DensityMatrix unchecked(MatrixXcd m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw ValidationError("density matrix must be square and non-empty");
    }
    DensityMatrix rho;
    rho.m_ = std::move(m);
    return rho;
  }

  static DensityMatrix checked(MatrixXcd m) {
    DensityMatrix rho = unchecked(std::move(m));
    if (!rho.is_hermitian()) throw ValidationError("density matrix is not Hermitian");
    if (!rho.has_unit_trace()) {
      throw ValidationError("density matrix trace " + std::to_string(rho.trace()) + " != 1");
    }
    if (!rho.is_psd()) {
      throw ValidationError("density matrix has negative eigenvalue " +
                            std::to_string(rho.min_eigenvalue()));
    }
    return rho;
  }

  static DensityMatrix maximally_mixed(Index d) {
    return unchecked(MatrixXcd::Identity(d, d) / static_cast<double>(d));
  }

  /// |psi><psi| for a state vector normalized here.
  static DensityMatrix pure(const VectorXcd& psi) {
    const double norm = psi.norm();
    if (!(norm > 0.0)) throw ValidationError("pure state vector has zero norm");
    const VectorXcd v = psi / norm;
    return unchecked(v * v.adjoint());
  }

  static DensityMatrix fock(Index n, Index d) {
    if (n < 0 || n >= d) throw ValidationError("Fock index outside truncated space");
    MatrixXcd m = MatrixXcd::Zero(d, d);
    m(n, n) = 1.0;
    return unchecked(std::move(m));
  }

  Index dim() const { return m_.rows(); }
  const MatrixXcd& matrix() const { return m_; }
  Complex operator()(Index r, Index c) const { return m_(r, c); }

  double trace() const { return m_.trace().real(); }

  bool is_hermitian(double tol = kHermitianTol) const {
    return ((m_ - m_.adjoint()).cwiseAbs().maxCoeff()) < tol;
  }
  bool has_unit_trace(double tol = kTraceTol) const {
    return std::abs(m_.trace() - Complex(1.0, 0.0)) < tol;
  }
  double min_eigenvalue() const {
    const MatrixXcd h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  bool is_psd(double tol = kPsdTol) const { return min_eigenvalue() >= -tol; }
  bool is_valid() const { return is_hermitian() && has_unit_trace() && is_psd(); }

 private:
  MatrixXcd m_;
};

/// Uniform binning of quadrature space. Homodyne grids carry the local
/// oscillator phases; heterodyne grids use the p-axis fields and the same
/// bin count N on both axes (N*N bins).
struct GridSpec {
  double x1 = -10.0;
  double dx = 0.1005;
  std::size_t n_bins = 200;
  std::vector<double> phases;
  double p1 = -10.0;
  double dp = 0.1005;

  double x(std::size_t i) const { return x1 + static_cast<double>(i) * dx; }
  double p(std::size_t i) const { return p1 + static_cast<double>(i) * dp; }
  std::size_t n_phases() const { return phases.size(); }

  /// Number of probability bins per phase (homodyne) or overall (heterodyne).
  std::size_t bins(Modality m) const {
    return m == Modality::homodyne ? n_bins : n_bins * n_bins;
  }
  /// Length of a flattened count record.
  std::size_t record_size(Modality m) const {
    return m == Modality::homodyne ? n_bins * phases.size() : n_bins * n_bins;
  }

  void validate(Modality m) const {
    if (!(dx > 0.0) || !std::isfinite(x1)) throw ValidationError("grid needs dx > 0 and finite x1");
    if (n_bins < 2) throw ValidationError("grid needs at least 2 bins");
    if (m == Modality::homodyne) {
      if (phases.empty()) throw ValidationError("homodyne grid needs at least one phase");
      for (std::size_t s = 0; s < phases.size(); ++s) {
        const double th = phases[s];
        if (!(th >= 0.0 && th < 2.0 * std::numbers::pi)) {
          throw ValidationError("phase " + std::to_string(th) + " outside [0, 2pi)");
        }
        for (std::size_t r = 0; r < s; ++r) {
          if (phases[r] == th) throw ValidationError("duplicate phase " + std::to_string(th));
        }
      }
    } else if (!(dp > 0.0) || !std::isfinite(p1)) {
      throw ValidationError("heterodyne grid needs dp > 0 and finite p1");
    }
  }

  static std::vector<double> even_phases(std::size_t s) {
    std::vector<double> out(s);
    for (std::size_t k = 0; k < s; ++k) {
      out[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(s);
    }
    return out;
  }

  static GridSpec homodyne(double x1, double dx, std::size_t n, std::size_t s) {
    GridSpec g;
    g.x1 = x1;
    g.dx = dx;
    g.n_bins = n;
    g.phases = even_phases(s);
    g.p1 = x1;
    g.dp = dx;
    return g;
  }

  static GridSpec heterodyne(double x1, double dx, std::size_t n) {
    GridSpec g;
    g.x1 = x1;
    g.dx = dx;
    g.n_bins = n;
    g.p1 = x1;
    g.dp = dx;
    return g;
  }

  /// Bin count that places the last center at -x1 (rounded to the nearest bin).
  static std::size_t symmetric_bins(double x1, double dx) {
    return static_cast<std::size_t>(std::llround(-2.0 * x1 / dx)) + 1;
  }

  /// Simulation grid: x1 = -10, dx = 0.1005, N = 200, S = 100.
  static GridSpec simulation(Modality m) {
    return m == Modality::homodyne ? homodyne(-10.0, 0.1005, 200, 100)
                                   : heterodyne(-10.0, 0.1005, 200);
  }

  /// Grid used for Fisher-information studies: S = 500, x1 = -5, dx = 0.1.
  static GridSpec converged(Modality m) {
    const std::size_t n = symmetric_bins(-5.0, 0.1);
    return m == Modality::homodyne ? homodyne(-5.0, 0.1, n, 500) : heterodyne(-5.0, 0.1, n);
  }
};

}  // namespace cvtomo
