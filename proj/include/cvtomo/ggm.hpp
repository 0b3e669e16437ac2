#pragma once

// Generalized Gell-Mann operator basis and Bloch-vector algebra.
//
// Index order: symmetric |l><m| + |m><l| over pairs 0 <= l < m < d in
// lexicographic order, then antisymmetric -i|l><m| + i|m><l| over the same
// pairs, then d-1 diagonal matrices. All elements satisfy Tr(Om_i Om_j) = 2 delta_ij.

#include <cmath>
#include <vector>

#include "cvtomo/types.hpp"

namespace cvtomo {

enum class GgmClass { symmetric, antisymmetric, diagonal };

struct GgmElement {
  GgmClass cls;
  Index l;
  Index m;  // unused for diagonal elements
};

class GgmBasis {
 public:
  static constexpr Index kMaxDim = 64;

  explicit GgmBasis(Index d) : d_(d) {
    if (d < 2 || d > kMaxDim) throw ValidationError("GGM basis needs 2 <= d <= 64");
    elements_.reserve(static_cast<std::size_t>(d * d - 1));
    for (GgmClass cls : {GgmClass::symmetric, GgmClass::antisymmetric}) {
      for (Index l = 0; l < d; ++l) {
        for (Index m = l + 1; m < d; ++m) elements_.push_back({cls, l, m});
      }
    }
    for (Index l = 1; l < d; ++l) elements_.push_back({GgmClass::diagonal, l, l});
  }

  Index dim() const { return d_; }
  Index size() const { return static_cast<Index>(elements_.size()); }
  const GgmElement& element(Index i) const { return elements_[static_cast<std::size_t>(i)]; }

  MatrixXcd matrix(Index i) const {
    const GgmElement& e = element(i);
    MatrixXcd om = MatrixXcd::Zero(d_, d_);
    switch (e.cls) {
      case GgmClass::symmetric:
        om(e.l, e.m) = 1.0;
        om(e.m, e.l) = 1.0;
        break;
      case GgmClass::antisymmetric:
        om(e.l, e.m) = Complex(0.0, -1.0);
        om(e.m, e.l) = Complex(0.0, 1.0);
        break;
      case GgmClass::diagonal: {
        const double c = diagonal_norm(e.l);
        for (Index k = 0; k < e.l; ++k) om(k, k) = c;
        om(e.l, e.l) = -static_cast<double>(e.l) * c;
        break;
      }
    }
    return om;
  }

  std::vector<MatrixXcd> matrices() const {
    std::vector<MatrixXcd> out;
    out.reserve(elements_.size());
    for (Index i = 0; i < size(); ++i) out.push_back(matrix(i));
    return out;
  }

  /// out[j] = <v|Om_j|v> for every basis element, in O(d^2).
  void expectations(const VectorXcd& v, Eigen::Ref<VectorXd> out) const {
    const Index pairs = d_ * (d_ - 1) / 2;
    Index j = 0;
    for (Index l = 0; l < d_; ++l) {
      for (Index m = l + 1; m < d_; ++m, ++j) {
        const Complex z = std::conj(v[l]) * v[m];
        out[j] = 2.0 * z.real();
        out[j + pairs] = 2.0 * z.imag();
      }
    }
    j = 2 * pairs;
    double partial = 0.0;  // sum_{k<l} |v_k|^2
    for (Index l = 1; l < d_; ++l, ++j) {
      partial += std::norm(v[l - 1]);
      out[j] = diagonal_norm(l) * (partial - static_cast<double>(l) * std::norm(v[l]));
    }
  }

  VectorXd expectations(const VectorXcd& v) const {
    VectorXd out(size());
    expectations(v, out);
    return out;
  }

  static double diagonal_norm(Index l) {
    const double dl = static_cast<double>(l);
    return std::sqrt(2.0 / (dl * (dl + 1.0)));
  }

 private:
  Index d_;
  std::vector<GgmElement> elements_;
};

/// Coefficients t of rho = I/d + sum_i t_i Om_i.
struct BlochVector {
  Index dim = 0;
  VectorXd t;

  double norm() const { return t.norm(); }
};

/// t_i = Tr(rho Om_i) / 2.
inline BlochVector to_bloch(const DensityMatrix& rho) {
  const Index d = rho.dim();
  if (d < 2) throw ValidationError("Bloch vector needs d >= 2");
  const Index pairs = d * (d - 1) / 2;
  BlochVector b{d, VectorXd(d * d - 1)};
  Index j = 0;
  for (Index l = 0; l < d; ++l) {
    for (Index m = l + 1; m < d; ++m, ++j) {
      // Tr(rho(|l><m| + |m><l|)) = rho_ml + rho_lm; Tr(rho(-i|l><m| + i|m><l|)) = i(rho_lm - rho_ml)
      const Complex a = rho(l, m);
      const Complex c = rho(m, l);
      b.t[j] = 0.5 * (a + c).real();
      b.t[j + pairs] = 0.5 * (Complex(0.0, 1.0) * (a - c)).real();
    }
  }
  j = 2 * pairs;
  double partial = 0.0;
  for (Index l = 1; l < d; ++l, ++j) {
    partial += rho(l - 1, l - 1).real();
    b.t[j] = 0.5 * GgmBasis::diagonal_norm(l) * (partial - static_cast<double>(l) * rho(l, l).real());
  }
  return b;
}

/// I/d + sum_i t_i Om_i. Hermitian with unit trace; positivity is not checked.
inline DensityMatrix from_bloch(const BlochVector& b) {
  const Index d = b.dim;
  if (d < 2 || b.t.size() != d * d - 1) throw ValidationError("Bloch vector length must be d^2 - 1");
  const Index pairs = d * (d - 1) / 2;
  MatrixXcd m = MatrixXcd::Identity(d, d) / static_cast<double>(d);
  Index j = 0;
  for (Index l = 0; l < d; ++l) {
    for (Index k = l + 1; k < d; ++k, ++j) {
      const Complex z(b.t[j], -b.t[j + pairs]);
      m(l, k) += z;
      m(k, l) += std::conj(z);
    }
  }
  j = 2 * pairs;
  for (Index l = 1; l < d; ++l, ++j) {
    const double c = GgmBasis::diagonal_norm(l) * b.t[j];
    for (Index k = 0; k < l; ++k) m(k, k) += c;
    m(l, l) -= static_cast<double>(l) * c;
  }
  return DensityMatrix::unchecked(std::move(m));
}

/// ||a - b||_F^2 = Tr[(a-b)^dagger (a-b)].
inline double frobenius_sq(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("frobenius_sq: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
  return (a.matrix() - b.matrix()).squaredNorm();
}

}  // namespace cvtomo
