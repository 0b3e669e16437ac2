#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_support.hpp"

using namespace cvtomo;

namespace {

VectorXd expected_counts(const DensityMatrix& rho, const PovmSet& povm, double k) {
  VectorXd n(povm.size());
  for (Index j = 0; j < povm.size(); ++j) n[j] = k * povm.probability(rho, j);
  return n;
}

}  // namespace

TEST(Povm, ElementsAndCompleteness) {
  const GridSpec g = GridSpec::simulation(Modality::homodyne);
  const PovmSet hom = build_povm(Modality::homodyne, g, 6);
  EXPECT_EQ(hom.size(), 20000);
  EXPECT_LT(hom.completeness_defect, 1e-10);
  // Pi = dx |x_theta><x_theta|
  const MatrixXcd e = hom.element(150 * 0 + 37);
  const VectorXcd v = quadrature_state(g.x(37), g.phases[0], 6);
  EXPECT_LT(cvtomo::testing::max_abs_diff(e, g.dx * v * v.adjoint()), 1e-15);

  const PovmSet het = build_povm(Modality::heterodyne, GridSpec::simulation(Modality::heterodyne), 6);
  EXPECT_EQ(het.size(), 40000);
  EXPECT_LT(het.completeness_defect, 1e-6);
}

TEST(Mle, TruthIsFixedPointOfNoiseFreeData) {
  const auto rho = make_state(StateSpec{RandomMixed{0.6, 0.9, 4}, 2}).rho;
  for (Modality m : {Modality::homodyne, Modality::heterodyne}) {
    const PovmSet povm = build_povm(m, GridSpec::simulation(m), 3);
    MleConfig cfg;
    cfg.initial = rho;
    cfg.max_iters = 5;
    const MleResult r = reconstruct(expected_counts(rho, povm, 1e6), povm, cfg);
    EXPECT_LT((r.rho_hat.matrix() - rho.matrix()).norm(), 1e-10 * r.iterations) << to_string(m);
  }
}

TEST(Mle, RecoversTruthFromNoiseFreeData) {
  const auto rho = make_state(StateSpec{RandomMixed{0.6, 0.9, 5}, 2}).rho;
  const PovmSet povm = build_povm(Modality::homodyne, GridSpec::homodyne(-7.0, 0.1, 141, 12), 3);
  MleConfig cfg;
  cfg.ll_tol = 1e-15;
  cfg.max_iters = 20000;
  const MleResult r = reconstruct(expected_counts(rho, povm, 1e6), povm, cfg);
  EXPECT_LT(frobenius_sq(r.rho_hat, rho), 1e-8);
}

TEST(Mle, IteratesStayPhysicalAndLikelihoodRises) {
  const auto rho = make_state(StateSpec{RandomMixed{0.7, 0.95, 6}, 3}).rho;
  const GridSpec g = GridSpec::homodyne(-7.0, 0.2, 71, 10);
  const auto dist = bin_distribution(rho, Modality::homodyne, g);
  const Dataset data = sample_counts(dist, 20000, 1, 4);
  const PovmSet povm = build_povm(Modality::homodyne, g, 4);
  const MleResult r = reconstruct(data, povm);
  EXPECT_TRUE(r.rho_hat.is_valid());
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.ll_trace.size(), static_cast<std::size_t>(r.iterations) + 1);
  for (std::size_t i = 1; i < r.ll_trace.size(); ++i) {
    EXPECT_GE(r.ll_trace[i], r.ll_trace[i - 1] - 1e-12 * std::abs(r.ll_trace[i - 1]));
  }
  EXPECT_NEAR(r.final_ll, log_likelihood(r.rho_hat, data, povm), 1e-9 * std::abs(r.final_ll));
  // the estimate explains the data at least as well as the truth
  EXPECT_GE(r.final_ll, log_likelihood(rho, data, povm));
}

TEST(Mle, ErrorShrinksWithCopies) {
  const auto rho = make_state(StateSpec{RandomMixed{0.7, 0.9, 7}, 2}).rho;
  const GridSpec g = GridSpec::heterodyne(-6.0, 0.2, 61);
  const auto dist = bin_distribution(rho, Modality::heterodyne, g);
  const PovmSet povm = build_povm(Modality::heterodyne, g, 3);
  const auto sets = sample_checkpoints(dist, {1000, 1000000}, 11, 3);
  const double e_small = frobenius_sq(reconstruct(sets[0], povm).rho_hat, rho);
  const double e_large = frobenius_sq(reconstruct(sets[1], povm).rho_hat, rho);
  EXPECT_LT(e_large, e_small);
  EXPECT_LT(e_large, 1e-3);
}

TEST(Mle, PermutationInvariant) {
  const auto rho = cvtomo::testing::ginibre_state(3, 8);
  const GridSpec g = GridSpec::heterodyne(-6.0, 0.3, 41);
  const Dataset data = sample_counts(bin_distribution(rho, Modality::heterodyne, g), 50000, 2, 3);
  const PovmSet povm = build_povm(Modality::heterodyne, g, 3);

  std::vector<Index> perm(static_cast<std::size_t>(povm.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  PovmSet shuffled = povm;
  VectorXd counts(povm.size()), shuffled_counts(povm.size());
  for (Index j = 0; j < povm.size(); ++j) counts[j] = static_cast<double>(data.counts[static_cast<std::size_t>(j)]);
  for (Index j = 0; j < povm.size(); ++j) {
    shuffled.vectors.col(j) = povm.vectors.col(perm[static_cast<std::size_t>(j)]);
    shuffled_counts[j] = counts[perm[static_cast<std::size_t>(j)]];
  }
  const MleResult a = reconstruct(counts, povm);
  const MleResult b = reconstruct(shuffled_counts, shuffled);
  EXPECT_LT(cvtomo::testing::max_abs_diff(a.rho_hat.matrix(), b.rho_hat.matrix()), 1e-12);
}

TEST(Mle, DilutedStepAlsoConverges) {
  const auto rho = make_state(StateSpec{RandomMixed{0.7, 0.9, 9}, 2}).rho;
  const GridSpec g = GridSpec::homodyne(-7.0, 0.2, 71, 8);
  const Dataset data = sample_counts(bin_distribution(rho, Modality::homodyne, g), 80000, 4, 3);
  const PovmSet povm = build_povm(Modality::homodyne, g, 3);
  MleConfig diluted;
  diluted.dilution = 0.5;
  const MleResult a = reconstruct(data, povm);
  const MleResult b = reconstruct(data, povm, diluted);
  EXPECT_TRUE(b.rho_hat.is_valid());
  EXPECT_LT(frobenius_sq(a.rho_hat, b.rho_hat), 1e-6);
}

TEST(Mle, RejectsBadInput) {
  const GridSpec g = GridSpec::heterodyne(-5.0, 0.5, 21);
  const PovmSet povm = build_povm(Modality::heterodyne, g, 3);
  EXPECT_THROW(reconstruct(VectorXd::Zero(povm.size()), povm), ValidationError);
  EXPECT_THROW(reconstruct(VectorXd::Ones(povm.size() - 1), povm), ValidationError);
  MleConfig bad;
  bad.max_iters = 0;
  EXPECT_THROW(reconstruct(VectorXd::Ones(povm.size()), povm, bad), ValidationError);
  bad = MleConfig{};
  bad.dilution = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = MleConfig{};
  bad.ll_tol = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  Dataset wrong;
  wrong.modality = Modality::heterodyne;
  wrong.counts.assign(10, 1);
  EXPECT_THROW(reconstruct(wrong, povm), ValidationError);
}

TEST(LogLikelihood, InfiniteWhenObservedBinIsImpossible) {
  const GridSpec g = GridSpec::homodyne(-1.0, 1.0, 3, 1);
  const PovmSet povm = build_povm(Modality::homodyne, g, 2);
  Dataset data;
  data.modality = Modality::homodyne;
  data.grid = g;
  data.counts = {0, 5, 0};
  // |1> has psi_1(0) = 0, so the middle bin is impossible
  EXPECT_EQ(log_likelihood(DensityMatrix::fock(1, 2), data, povm), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isfinite(log_likelihood(DensityMatrix::fock(0, 2), data, povm)));
}
