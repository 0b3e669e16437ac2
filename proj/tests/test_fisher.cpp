#include <gtest/gtest.h>

#include <numbers>

#include "cfi_oracle.hpp"
#include "test_support.hpp"

using namespace cvtomo;
using cvtomo::testing::fd_fisher;
using cvtomo::testing::max_relative_deviation;

namespace {

DensityMatrix diag_state(double a, double b) {
  MatrixXcd m = MatrixXcd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return DensityMatrix::checked(m);
}

}  // namespace

TEST(Cfi, HomodyneMatchesFiniteDifferenceOracle) {
  const BlochVector t = to_bloch(diag_state(0.7, 0.3));
  const GridSpec g = GridSpec::converged(Modality::homodyne);
  const CfiMatrix cfi = homodyne_cfi(t, g, 1);
  EXPECT_LT(max_relative_deviation(cfi.matrix, fd_fisher(t, Modality::homodyne, g)), 1e-4);
}

TEST(Cfi, HeterodyneMatchesFiniteDifferenceOracle) {
  const BlochVector t = to_bloch(diag_state(0.7, 0.3));
  const GridSpec g = GridSpec::converged(Modality::heterodyne);
  const CfiMatrix cfi = heterodyne_cfi(t, g, 1);
  EXPECT_LT(max_relative_deviation(cfi.matrix, fd_fisher(t, Modality::heterodyne, g)), 1e-4);
}

TEST(Cfi, QutritOracleOnCoarseGrids) {
  const BlochVector t = to_bloch(cvtomo::testing::ginibre_state(3, 12));
  const GridSpec gh = GridSpec::homodyne(-5.0, 0.2, 51, 7);
  EXPECT_LT(max_relative_deviation(homodyne_cfi(t, gh, 1).matrix, fd_fisher(t, Modality::homodyne, gh)), 1e-4);
  const GridSpec gq = GridSpec::heterodyne(-5.0, 0.25, 41);
  EXPECT_LT(max_relative_deviation(heterodyne_cfi(t, gq, 1).matrix, fd_fisher(t, Modality::heterodyne, gq)), 1e-4);
}

TEST(Cfi, RootReproducesDirectSum) {
  const auto rho = cvtomo::testing::ginibre_state(4, 2);
  const BlochVector t = to_bloch(rho);
  const GridSpec g = GridSpec::homodyne(-6.0, 0.3, 41, 5);
  const GgmBasis basis(4);
  MatrixXd direct = MatrixXd::Zero(15, 15);
  for (double th : g.phases) {
    for (std::size_t i = 0; i < g.n_bins; ++i) {
      const VectorXcd xi = quadrature_state(g.x(i), th, 4) * std::sqrt(g.dx);
      const VectorXd c = basis.expectations(xi);
      const double q = expectation(rho.matrix(), xi);
      direct += c * c.transpose() / q;
    }
  }
  direct /= static_cast<double>(g.phases.size());
  const CfiMatrix cfi = homodyne_cfi(t, g, 1);
  EXPECT_LT((cfi.matrix - direct).norm() / direct.norm(), 1e-12);
  EXPECT_LT((cfi.root.transpose() * cfi.root - cfi.matrix).norm() / direct.norm(), 1e-12);
  EXPECT_TRUE(cfi.root.isUpperTriangular());
}

TEST(Cfi, LinearInCopies) {
  const BlochVector t = to_bloch(cvtomo::testing::ginibre_state(3, 5));
  for (Modality m : {Modality::homodyne, Modality::heterodyne}) {
    const GridSpec g = m == Modality::homodyne ? GridSpec::homodyne(-5, 0.25, 41, 10) : GridSpec::heterodyne(-5, 0.25, 41);
    const CfiMatrix one = compute_cfi(m, t, g, 1);
    const CfiMatrix two = compute_cfi(m, t, g, 2);
    EXPECT_EQ(two.matrix, MatrixXd(2.0 * one.matrix));
    const double c1 = crlb_frobenius(one);
    const double c10 = crlb_frobenius(compute_cfi(m, t, g, 10));
    EXPECT_NEAR(c1 / c10, 10.0, 1e-10 * 10.0);
    EXPECT_NEAR(crlb_frobenius(one.at_copies(10)), c10, 1e-10 * c10);
  }
}

TEST(Cfi, SymmetricPsdForMixedStates) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const BlochVector t = to_bloch(make_state(StateSpec{RandomMixed{0.6, 0.9, seed}, 3}).rho);
    for (Modality m : {Modality::homodyne, Modality::heterodyne}) {
      const GridSpec g = m == Modality::homodyne ? GridSpec::homodyne(-6, 0.2, 61, 12) : GridSpec::heterodyne(-6, 0.2, 61);
      const MatrixXd a = compute_cfi(m, t, g, 1).matrix;
      EXPECT_LT((a - a.transpose()).norm(), 1e-12 * a.norm());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
      EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
    }
  }
}

TEST(Crlb, ScaledIdentity) {
  const CfiMatrix cfi{2, 1, 4.0 * MatrixXd::Identity(3, 3), {}};
  EXPECT_NEAR(crlb_frobenius(cfi), 6.0 / 4.0, 1e-15);
  EXPECT_NEAR(condition_number(cfi), 1.0, 1e-15);
}

TEST(Crlb, TwoPhaseMaximallyMixedQubitIsInvertible) {
  GridSpec g = GridSpec::homodyne(-5.0, 0.1, 101, 1);
  g.phases = {0.0, std::numbers::pi / 2};
  const CfiMatrix cfi = homodyne_cfi(to_bloch(DensityMatrix::maximally_mixed(2)), g, 1);
  EXPECT_LT(condition_number(cfi), 1e3);
  EXPECT_GT(crlb_frobenius(cfi), 0.0);
}

TEST(Crlb, RegularizedVacuumHeterodyneIsFinite) {
  MatrixXcd m = DensityMatrix::fock(0, 2).matrix() * (1.0 - 1e-3) + MatrixXcd::Identity(2, 2) * (1e-3 / 2);
  const BlochVector t = to_bloch(DensityMatrix::checked(m));
  const CfiMatrix cfi = heterodyne_cfi(t, GridSpec::converged(Modality::heterodyne), 1);
  EXPECT_TRUE(cfi.matrix.allFinite());
  const double v = crlb_frobenius(cfi);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
}

TEST(Crlb, PureStatesSignalConditioning) {
  const BlochVector t = to_bloch(DensityMatrix::fock(5, 11));
  try {
    crlb_frobenius(heterodyne_cfi(t, GridSpec::simulation(Modality::heterodyne), 1));
    FAIL() << "expected IllConditionedError";
  } catch (const IllConditionedError& e) {
    EXPECT_GT(e.condition_number(), 1e12);
  }
  // an odd Fock state vanishes at x = 0, which is a bin center of this grid
  EXPECT_THROW(homodyne_cfi(t, GridSpec::converged(Modality::homodyne), 1), DegenerateBinError);
}

TEST(Crlb, RootSolveStaysStableBeyondGuard) {
  // pure-state bound agrees across two grids once the guard is lifted; neither
  // grid has a bin center on the zero of Q at the origin
  const BlochVector t = to_bloch(DensityMatrix::fock(3, 6));
  const CrlbOptions loose{1e22};
  const double a = crlb_frobenius(heterodyne_cfi(t, GridSpec::simulation(Modality::heterodyne), 1), loose);
  const double b = crlb_frobenius(heterodyne_cfi(t, GridSpec::heterodyne(-6.04, 0.08, 151), 1), loose);
  EXPECT_NEAR(a / b, 1.0, 0.05);
}

TEST(Crlb, HomodyneBeatsHeterodyneForRandomQutrit) {
  const BlochVector t = to_bloch(make_state(StateSpec{RandomMixed{0.7, 0.95, 9}, 2}).rho);
  const double hom = crlb_frobenius(homodyne_cfi(t, GridSpec::converged(Modality::homodyne), 1));
  const double het = crlb_frobenius(heterodyne_cfi(t, GridSpec::converged(Modality::heterodyne), 1));
  EXPECT_LT(hom, het);
}

TEST(Crlb, RefinementAndShiftStability) {
  const BlochVector t = to_bloch(make_state(StateSpec{Thermal{0.5}, 2}, {0.2}).rho);
  const GridSpec base = GridSpec::converged(Modality::homodyne);
  const double a = trace_inverse(homodyne_cfi(t, base, 1));
  GridSpec fine = GridSpec::homodyne(-5.0, 0.05, GridSpec::symmetric_bins(-5.0, 0.05), 500);
  EXPECT_LT(std::abs(trace_inverse(homodyne_cfi(t, fine, 1)) / a - 1.0), 0.02);
  GridSpec shifted = base;
  shifted.x1 += base.dx / 2;
  EXPECT_LT(std::abs(trace_inverse(homodyne_cfi(t, shifted, 1)) / a - 1.0), 0.02);
}

TEST(Sweep, ThermalQutritConvergesByReferenceGrid) {
  const StateSpec spec{Thermal{0.5}, 2};
  SweepOptions opt;
  opt.state.truncation_bound = 0.2;
  const ConvergenceReport r = convergence_sweep(spec, Modality::homodyne, 1, {}, opt);
  ASSERT_TRUE(r.converged());
  const SweepPoint& p = r.selected_point();
  EXPECT_LE(p.phases, 500u);
  EXPECT_GE(p.x1, -5.0);
  EXPECT_GE(p.dx, 0.1);
  EXPECT_LT(p.max_neighbor_pct_err, 2.0);
  EXPECT_EQ(r.points.size(), 125u);
}

TEST(Sweep, HeterodyneCollapsesPhaseAxis) {
  const StateSpec spec{Thermal{0.5}, 2};
  SweepOptions opt;
  opt.state.truncation_bound = 0.2;
  const ConvergenceReport r = convergence_sweep(spec, Modality::heterodyne, 1, {}, opt);
  EXPECT_EQ(r.points.size(), 25u);
  for (const auto& p : r.points) EXPECT_EQ(p.phases, 1u);
  ASSERT_TRUE(r.converged());
  // three forward neighbors, recomputed here
  const std::size_t i = *r.selected;
  const double a = r.points[i].trace_inv_cfi;
  double worst = 0.0;
  for (std::size_t off : {std::size_t{1}, std::size_t{5}, std::size_t{6}}) {
    worst = std::max(worst, 100.0 * std::abs(r.points[i + off].trace_inv_cfi - a) / a);
  }
  EXPECT_DOUBLE_EQ(worst, r.points[i].max_neighbor_pct_err);
}

TEST(Sweep, SinglePointNeverConverges) {
  SweepAxes axes{{500}, {-5.0}, {0.1}};
  SweepOptions opt;
  opt.state.truncation_bound = 0.2;
  const ConvergenceReport r = convergence_sweep(StateSpec{Thermal{0.5}, 2}, Modality::homodyne, 1, axes, opt);
  EXPECT_FALSE(r.converged());
  EXPECT_TRUE(std::isnan(r.points.front().max_neighbor_pct_err));
  EXPECT_TRUE(std::isnan(r.converged_value()));
}

TEST(Sweep, ErrorsNameTheGridPoint) {
  SweepAxes axes{{200}, {-5.0}, {0.1}};
  try {
    convergence_sweep(StateSpec{Fock{1}, 3}, Modality::homodyne, 1, axes);
    FAIL() << "expected DegenerateBinError";
  } catch (const DegenerateBinError& e) {
    EXPECT_NE(std::string(e.what()).find("S=200"), std::string::npos);
  }
}
