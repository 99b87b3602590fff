#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "orbit/algebra_tests.hpp"
#include "orbit/counting.hpp"
#include "orbit/errors.hpp"

using namespace orbit;

TEST(JacobianRank, MraDegreeThreeFullRank) {
  Rng rng(1);
  const auto spec = ProblemSpec::cyclic(5);
  const auto basis = invariant_basis_up_to(spec, 3);
  const auto exact = jacobian_rank(basis, spec, rng, RankMode::Exact);
  EXPECT_EQ(exact.rank, 5);
  EXPECT_EQ(exact.verdict, Verdict::Feasible);
  EXPECT_TRUE(exact.singular_values.empty());
  EXPECT_EQ(exact.exact_point.size(), 5u);
  const auto numeric = jacobian_rank(basis, spec, rng, RankMode::Numeric);
  EXPECT_EQ(numeric.rank, 5);
  EXPECT_EQ(numeric.verdict, Verdict::Feasible);
  EXPECT_GE(numeric.gap_ratio, kMinSpectralGap);
}

TEST(JacobianRank, MraDegreeTwoDeficient) {
  Rng rng(2);
  const auto spec = ProblemSpec::cyclic(4);
  const auto r = jacobian_rank(invariant_basis_up_to(spec, 2), spec, rng, RankMode::Exact);
  EXPECT_EQ(r.rank, 3);
  EXPECT_EQ(r.verdict, Verdict::Infeasible);
}

TEST(JacobianRank, RankBoundedByShape) {
  Rng rng(3);
  for (const auto& spec : {ProblemSpec::cyclic(6), ProblemSpec::symmetric(4), ProblemSpec::so3(1, 3)}) {
    const auto r = jacobian_rank(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Numeric);
    EXPECT_LE(r.rank, std::min(r.rows, r.cols));
  }
}

TEST(JacobianRank, SingleShellCryoInfeasible) {
  Rng rng(4);
  for (int F = 2; F <= 4; ++F) {
    const auto spec = ProblemSpec::so3(1, F).with_projection(Projection::Equator);
    const auto r = jacobian_rank(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Numeric);
    EXPECT_LT(r.rank, trdeg_ring(spec));
    EXPECT_EQ(r.verdict, Verdict::Infeasible);
  }
}

TEST(JacobianRank, TwoShellCryoFeasibleSmallF) {
  Rng rng(5);
  for (int F = 2; F <= 3; ++F) {
    const auto spec = ProblemSpec::so3(2, F).with_projection(Projection::Equator);
    const auto r = jacobian_rank(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Numeric);
    EXPECT_EQ(r.rank, 2 * (F * F + 2 * F) - 3);
    EXPECT_EQ(r.verdict, Verdict::Feasible);
  }
}

TEST(JacobianRank, ExactModeNeedsExactBasis) {
  Rng rng(6);
  const auto spec = ProblemSpec::so3(1, 2);
  EXPECT_THROW(jacobian_rank(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Exact), PreconditionError);
  EXPECT_THROW(jacobian_rank(InvariantBasis{}, spec, rng), PreconditionError);
}

TEST(JacobianRank, HeterogeneousMra) {
  Rng rng(7);
  const auto spec = ProblemSpec::cyclic(7).with_heterogeneity(2);
  const auto basis = invariant_basis_up_to(spec, 3);
  const auto r = jacobian_rank(basis, spec, rng, RankMode::Exact);
  EXPECT_EQ(r.target, 15);
  EXPECT_EQ(r.rank, 15);
}

TEST(JacobianRank, SymmetricRestriction) {
  Rng rng(8);
  const auto spec = ProblemSpec::so3(2, 3).with_symmetry(2);
  const auto r = jacobian_rank(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Numeric);
  EXPECT_LE(r.rank, trdeg_ring(spec));
  EXPECT_EQ(r.cols, 2 * 7);
}

TEST(JacobianRank, ConsensusAcrossPoints) {
  Rng rng(9);
  for (const auto& spec : {ProblemSpec::cyclic(6), ProblemSpec::so3(2, 2).with_projection(Projection::Equator)}) {
    const auto r = jacobian_rank_consensus(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Numeric, 5);
    EXPECT_NE(r.verdict, Verdict::Inconclusive);
  }
}

TEST(JacobianRank, NumericNeverBelowExact) {
  Rng rng(10);
  for (int p = 3; p <= 8; ++p) {
    const auto spec = ProblemSpec::cyclic(p);
    const auto [exact, numeric] = cross_check_rank(invariant_basis_up_to(spec, 3), spec, rng);
    EXPECT_EQ(exact.rank, numeric.rank);
  }
}

TEST(TranscendenceBasis, DropsDependentSquare) {
  Rng rng(11);
  const auto spec = ProblemSpec::cyclic(1);
  const auto basis = invariant_basis_up_to(spec, 2);
  ASSERT_EQ(basis.size(), 2u);
  for (auto mode : {RankMode::Exact, RankMode::Numeric}) {
    const auto t = transcendence_basis(basis, spec, rng, mode);
    ASSERT_EQ(t.indices.size(), 1u);
    EXPECT_EQ(t.indices.front(), 0u);
  }
}

TEST(TranscendenceBasis, MraThreeSelectsThree) {
  Rng rng(12);
  const auto spec = ProblemSpec::cyclic(3);
  const auto t = transcendence_basis(invariant_basis_up_to(spec, 3), spec, rng, RankMode::Exact);
  EXPECT_EQ(t.indices.size(), 3u);
}

TEST(TranscendenceBasis, DuplicateSelectedOnce) {
  Rng rng(13);
  const auto spec = ProblemSpec::cyclic(4);
  auto basis = invariant_basis_up_to(spec, 2);
  basis = basis.merged(basis);
  const auto t = transcendence_basis(basis, spec, rng, RankMode::Exact);
  EXPECT_EQ(t.indices.size(), 3u);
  for (std::size_t i : t.indices) EXPECT_LT(i, basis.size() / 2);
}

TEST(TranscendenceBasis, SizeIndependentOfOrder) {
  Rng rng(14);
  for (const auto& spec : {ProblemSpec::cyclic(6), ProblemSpec::so3(2, 2)}) {
    const auto basis = invariant_basis_up_to(spec, 3);
    const auto rank = jacobian_rank(basis, spec, rng).rank;
    std::vector<std::size_t> order(basis.size());
    std::iota(order.begin(), order.end(), 0);
    for (int shuffle = 0; shuffle < 10; ++shuffle) {
      std::shuffle(order.begin(), order.end(), rng);
      const auto t = transcendence_basis(basis.subset(order), spec, rng);
      EXPECT_EQ(static_cast<int>(t.indices.size()), rank);
    }
  }
}

TEST(HessianTest, HeterogeneousMraPasses) {
  Rng rng(15);
  const auto spec = ProblemSpec::cyclic(7).with_heterogeneity(2);
  const auto base = invariant_basis_up_to(spec.base(), 3);
  ASSERT_EQ(count_het_mra(7, 2).distinct, static_cast<std::int64_t>(base.size()));
  const auto r = hessian_test(spec, base, 2, rng);
  EXPECT_EQ(r.cone_dim, 8);
  EXPECT_EQ(r.jacobian_rank, 16);
  EXPECT_EQ(r.hessian_rank, 7);
  EXPECT_TRUE(r.passed);
}

TEST(HessianTest, BoundaryIsPrecondition) {
  Rng rng(16);
  // p = 18, K = 4: distinct entries equal K p + K - 1
  const auto spec = ProblemSpec::cyclic(18).with_heterogeneity(4);
  const auto base = invariant_basis_up_to(spec.base(), 3);
  ASSERT_EQ(count_het_mra(18, 4).distinct, count_het_mra(18, 4).needed);
  EXPECT_THROW(hessian_test(spec, base, 4, rng), PreconditionError);
}

TEST(HessianTest, SingleComponentTrivial) {
  Rng rng(17);
  const auto spec = ProblemSpec::cyclic(5);
  const auto r = hessian_test(spec, invariant_basis_up_to(spec, 3), 1, rng);
  EXPECT_TRUE(r.passed);
}

TEST(HessianTest, HessianIsExactlySymmetric) {
  const auto spec = ProblemSpec::cyclic(5);
  const auto basis = invariant_basis_up_to(spec, 3);
  Rng rng(18);
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(basis.size()));
  for (auto& c : coeffs) c = rng.normal();
  const auto poly = basis.combined(coeffs);
  Eigen::VectorXd x(5);
  for (auto& v : x) v = rng.normal();
  const Eigen::MatrixXd H = hessian(poly, x);
  EXPECT_EQ((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0);
}
