#pragma once

// Ground-truth state factories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cvtomo/fock.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

struct Thermal {
  double lambda = 0.5;
};
struct Coherent {
  Complex alpha{1.8, 0.0};
};
struct SqueezedVacuum {
  double r = 0.6908;
};
struct Fock {
  Index n = 0;
};
struct Superposition {
  std::vector<Complex> coeffs;
};
struct RandomMixed {
  double purity_low = 0.70;
  double purity_high = 0.95;
  std::uint64_t seed = 1;
};

using StateKind = std::variant<Thermal, Coherent, SqueezedVacuum, Fock, Superposition, RandomMixed>;

struct StateSpec {
  StateKind kind = Thermal{};
  Index n_c = 10;

  Index dim() const { return n_c + 1; }

  std::string kind_name() const {
    static constexpr const char* names[] = {"thermal",       "coherent", "squeezed",
                                            "fock", "superposition", "random"};
    return names[kind.index()];
  }

  void validate() const {
    if (n_c < 1 || n_c > 63) throw ValidationError("n_c must lie in [1, 63]");
    std::visit(
        [this](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Thermal>) {
            if (!(std::abs(k.lambda) < 1.0)) throw ValidationError("thermal needs |lambda| < 1");
          } else if constexpr (std::is_same_v<T, Coherent>) {
            if (!std::isfinite(k.alpha.real()) || !std::isfinite(k.alpha.imag())) {
              throw ValidationError("coherent amplitude must be finite");
            }
          } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
            if (!(k.r >= 0.0) || !std::isfinite(k.r)) throw ValidationError("squeezing needs r >= 0");
          } else if constexpr (std::is_same_v<T, Fock>) {
            if (k.n < 0 || k.n > n_c) throw ValidationError("Fock needs 0 <= n <= n_c");
          } else if constexpr (std::is_same_v<T, Superposition>) {
            if (k.coeffs.empty() || static_cast<Index>(k.coeffs.size()) > n_c + 1) {
              throw ValidationError("superposition needs 1..n_c+1 coefficients");
            }
            double norm2 = 0.0;
            for (const auto& c : k.coeffs) norm2 += std::norm(c);
            if (std::abs(norm2 - 1.0) > 1e-9) {
              throw ValidationError("superposition coefficients must have unit 2-norm");
            }
          } else {
            if (!(0.0 < k.purity_low && k.purity_low < k.purity_high && k.purity_high <= 1.0)) {
              throw ValidationError("random state needs 0 < purity_low < purity_high <= 1");
            }
          }
        },
        kind);
  }

  static StateSpec superposition(std::vector<Complex> coeffs, Index n_c) {
    double norm2 = 0.0;
    for (const auto& c : coeffs) norm2 += std::norm(c);
    if (!(norm2 > 0.0)) throw ValidationError("superposition coefficients are all zero");
    for (auto& c : coeffs) c /= std::sqrt(norm2);
    return StateSpec{Superposition{std::move(coeffs)}, n_c};
  }
};

struct MakeStateOptions {
  double truncation_bound = 1e-2;
};

struct PreparedState {
  DensityMatrix rho;
  /// 1 - sum_{n <= n_c} <n|rho_untruncated|n>, for the analytic families.
  std::optional<double> truncation_error;
};

namespace detail {

inline double log_factorial(Index n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline MatrixXcd random_mixed(const RandomMixed& spec, Index d) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXcd g(d, d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < d; ++r) g(r, c) = Complex(normal(rng), normal(rng));
  }
  std::uniform_real_distribution<double> unif(spec.purity_low, spec.purity_high);
  double target = unif(rng);
  // the open interval excludes its endpoints; the bisection target must too
  target = std::clamp(target, spec.purity_low + 1e-9, spec.purity_high - 1e-9);

  MatrixXcd rho0 = g * g.adjoint();
  rho0 /= rho0.trace().real();
  rho0 = 0.5 * (rho0 + rho0.adjoint());
  const double p0 = (rho0 * rho0).trace().real();

  // Below p0, mix toward I/d. Above it, move weight onto rho0's dominant
  // eigenvector instead; purity is monotone in w on both paths and the
  // result keeps full rank for w < 1.
  MatrixXcd anchor;
  if (target <= p0) {
    anchor = MatrixXcd::Identity(d, d) / static_cast<double>(d);
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho0);
    const VectorXcd top = es.eigenvectors().col(d - 1);
    anchor = top * top.adjoint();
  }
  auto mix = [&](double w) -> MatrixXcd {
    return target <= p0 ? MatrixXcd(w * rho0 + (1.0 - w) * anchor) : MatrixXcd((1.0 - w) * rho0 + w * anchor);
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const MatrixXcd m = mix(mid);
    const double pm = (m * m).trace().real();
    (pm < target ? lo : hi) = mid;
  }
  MatrixXcd rho = mix(0.5 * (lo + hi));
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace detail

/// Builds the truncated ground-truth density matrix, renormalized to unit
/// trace. Analytic families are rejected when the discarded mass exceeds
/// `options.truncation_bound`.
inline PreparedState make_state(const StateSpec& spec, const MakeStateOptions& options = {}) {
  spec.validate();
  const Index d = spec.dim();
  PreparedState out;
  auto check = [&](const std::string& parameter, double eps) {
    out.truncation_error = eps;
    if (eps > options.truncation_bound) throw TruncationError(parameter, eps, options.truncation_bound);
  };

  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Thermal>) {
          const double l2 = k.lambda * k.lambda;
          MatrixXcd m = MatrixXcd::Zero(d, d);
          double kept = 0.0;
          for (Index n = 0; n < d; ++n) {
            const double pn = (1.0 - l2) * std::pow(l2, static_cast<double>(n));
            m(n, n) = pn;
            kept += pn;
          }
          check("lambda", std::pow(l2, static_cast<double>(d)));
          out.rho = DensityMatrix::unchecked(m / kept);
        } else if constexpr (std::is_same_v<T, Coherent>) {
          const VectorXcd v = coherent_state(k.alpha, d);
          check("alpha", std::max(0.0, 1.0 - v.squaredNorm()));
          out.rho = DensityMatrix::pure(v);
        } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
          // (-1)^n sqrt((2n)!)/(2^n n!) tanh^n r / sqrt(cosh r) on |2n>
          VectorXcd v = VectorXcd::Zero(d);
          const double th = std::tanh(k.r);
          for (Index n = 0; 2 * n < d; ++n) {
            const double dn = static_cast<double>(n);
            const double logmag = 0.5 * detail::log_factorial(2 * n) - dn * std::log(2.0) -
                                  detail::log_factorial(n) - 0.5 * std::log(std::cosh(k.r));
            const double mag = (n == 0) ? std::exp(logmag) : std::exp(logmag) * std::pow(th, dn);
            v[2 * n] = (n % 2 == 0 ? 1.0 : -1.0) * mag;
          }
          check("r", std::max(0.0, 1.0 - v.squaredNorm()));
          out.rho = DensityMatrix::pure(v);
        } else if constexpr (std::is_same_v<T, Fock>) {
          out.rho = DensityMatrix::fock(k.n, d);
        } else if constexpr (std::is_same_v<T, Superposition>) {
          VectorXcd v = VectorXcd::Zero(d);
          for (std::size_t i = 0; i < k.coeffs.size(); ++i) v[static_cast<Index>(i)] = k.coeffs[i];
          out.rho = DensityMatrix::pure(v);
        } else {
          out.rho = DensityMatrix::unchecked(detail::random_mixed(k, d));
        }
      },
      spec.kind);
  out.rho = DensityMatrix::checked(out.rho.matrix());
  return out;
}

}  // namespace cvtomo
