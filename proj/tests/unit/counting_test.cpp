#include <gtest/gtest.h>

#include <set>

#include "orbit/counting.hpp"
#include "orbit/errors.hpp"
#include "orbit/invariants.hpp"

using namespace orbit;

namespace {

// number of distinct Reynolds images of degree-d monomials, asserting disjoint supports
std::uint64_t reynolds_count(const ProblemSpec& spec, int d) {
  std::set<Monomial> covered;
  std::uint64_t count = 0;
  for (const auto& beta : sorted_multi_indices(spec.p, d)) {
    const auto m = Monomial::from_vars(beta);
    if (covered.count(m)) continue;
    const auto image = reynolds(spec, m);
    for (const auto& t : image.exact->terms()) {
      EXPECT_TRUE(covered.insert(t.mono).second);
    }
    ++count;
  }
  return count;
}

std::int64_t naive_classes(int S, int F) {
  using Tuple = std::array<std::pair<int, int>, 3>;
  std::set<Tuple> seen;
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = 0; s2 < S; ++s2)
      for (int s3 = 0; s3 < S; ++s3)
        for (int m1 = -F; m1 <= F; ++m1)
          for (int m2 = -F; m2 <= F; ++m2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) > F) continue;
            Tuple best{};
            bool first = true;
            for (int sign : {1, -1}) {
              Tuple t{{{s1, sign * m1}, {s2, sign * m2}, {s3, sign * m3}}};
              std::sort(t.begin(), t.end());
              do {
                if (first || t < best) best = t;
                first = false;
              } while (std::next_permutation(t.begin(), t.end()));
            }
            seen.insert(best);
          }
  return static_cast<std::int64_t>(seen.size());
}

}  // namespace

TEST(Molien, TrivialGroup) {
  const auto h = molien_series_finite(ProblemSpec::cyclic(1), 6);
  for (auto c : h.coefficients) EXPECT_EQ(c, 1u);
  EXPECT_EQ(h.pole_order, 1);
}

TEST(Molien, SwapOnPlane) {
  const auto h = molien_series_finite(ProblemSpec::cyclic(2), 4);
  EXPECT_EQ(h.coefficients, (std::vector<std::uint64_t>{1, 1, 2, 2, 3}));
  EXPECT_EQ(molien_series_finite(ProblemSpec::symmetric(2), 4).coefficients, h.coefficients);
}

TEST(Molien, PoleOrderIsDimension) {
  for (int p = 1; p <= 9; ++p) {
    EXPECT_EQ(molien_series_finite(ProblemSpec::cyclic(p), 2).pole_order, p);
    EXPECT_EQ(molien_series_finite(ProblemSpec::symmetric(p), 2).pole_order, p);
  }
}

TEST(Molien, MatchesReynoldsCounts) {
  for (int p = 1; p <= 8; ++p) {
    for (const auto& spec : {ProblemSpec::cyclic(p), ProblemSpec::symmetric(p)}) {
      const auto h = molien_series_finite(spec, 5);
      EXPECT_EQ(h.coefficients[0], 1u);
      for (int d = 1; d <= 5; ++d) {
        EXPECT_EQ(h.coefficients[static_cast<std::size_t>(d)], reynolds_count(spec, d))
            << to_string(spec.family) << " p=" << p << " d=" << d;
      }
    }
  }
}

TEST(Molien, RejectsSo3) { EXPECT_THROW(molien_series_finite(ProblemSpec::so3(1, 2), 3), PreconditionError); }

TEST(So3Dim, StandardRepresentation) {
  EXPECT_EQ(so3_invariant_dim({1}, 1), 0);
  EXPECT_EQ(so3_invariant_dim({1}, 2), 1);
  EXPECT_EQ(so3_invariant_dim({1}, 3), 0);
  EXPECT_EQ(so3_invariant_dim({1}, 0), 1);
  EXPECT_THROW(so3_invariant_dim({1}, 7), SpecError);
}

TEST(So3Dim, MatchesSingleShellBasisSizes) {
  for (int F = 1; F <= 6; ++F) {
    std::vector<int> freqs;
    for (int l = 1; l <= F; ++l) freqs.push_back(l);
    EXPECT_EQ(so3_invariant_dim(freqs, 2), static_cast<int>(invariant_basis(ProblemSpec::so3(1, F), 2).size()));
    EXPECT_EQ(so3_invariant_dim(freqs, 3), static_cast<int>(invariant_basis(ProblemSpec::so3(1, F), 3).size()))
        << "F=" << F;
  }
}

TEST(So3Dim, TwoShellsMatchBasisSizes) {
  for (int F = 1; F <= 3; ++F) {
    std::vector<int> freqs;
    for (int s = 0; s < 2; ++s)
      for (int l = 1; l <= F; ++l) freqs.push_back(l);
    EXPECT_EQ(so3_invariant_dim(freqs, 2), static_cast<int>(invariant_basis(ProblemSpec::so3(2, F), 2).size()));
    EXPECT_EQ(so3_invariant_dim(freqs, 3), static_cast<int>(invariant_basis(ProblemSpec::so3(2, F), 3).size()));
  }
}

TEST(Trdeg, Examples) {
  EXPECT_EQ(trdeg_ring(ProblemSpec::cyclic(7)), 7);
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(2, 2)), 13);
  EXPECT_EQ(trdeg_ring(ProblemSpec::cyclic(5).with_heterogeneity(2)), 11);
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(3, 1)), 6);
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(1, 1)), 1);
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(2, 3).with_heterogeneity(3)), 3 * 27 + 2);
}

TEST(Trdeg, SymmetricRestriction) {
  // L=2, F=3, one shell: 7 fixed coordinates, F >= L
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(1, 3).with_symmetry(2)), 6);
  // L > F: only m = 0 survives
  EXPECT_EQ(trdeg_ring(ProblemSpec::so3(2, 3).with_symmetry(5)), 6);
}

TEST(HetMra, PaperExamples) {
  const auto a = count_het_mra(12, 3);
  EXPECT_EQ(a.distinct, 39);
  EXPECT_EQ(a.needed, 38);
  EXPECT_TRUE(a.feasible);
  const auto b = count_het_mra(11, 3);
  EXPECT_EQ(b.distinct, 33);
  EXPECT_EQ(b.needed, 35);
  EXPECT_FALSE(b.feasible);
  for (int p = 1; p <= 60; ++p) EXPECT_TRUE(count_het_mra(p, 2).feasible) << p;
  EXPECT_EQ(count_het_mra(7, 2).distinct, 17);
}

TEST(HetMra, Thresholds) {
  auto threshold = [](int K) {
    int last_bad = 0;
    for (int p = 1; p <= 400; ++p) {
      if (!count_het_mra(p, K).feasible) last_bad = p;
    }
    return last_bad + 1;
  };
  EXPECT_EQ(threshold(2), 1);
  EXPECT_EQ(threshold(3), 12);
  EXPECT_EQ(threshold(4), 18);
  for (int K = 5; K <= 30; ++K) EXPECT_EQ(threshold(K), 6 * K - 5) << K;
}

TEST(Cryo, RelationsCount) {
  EXPECT_EQ(cryo_relations(1), 2);
  EXPECT_EQ(cryo_relations(2), 12);
  EXPECT_EQ(cryo_relations(3), 36);
  EXPECT_EQ(cryo_relations(4), 80);
}

TEST(Cryo, DegreeTwoDimension) { EXPECT_EQ(count_cryo(2, 3, 1).dim_u2, 9); }

TEST(Cryo, ClassesMatchNaiveEnumeration) {
  for (int S = 1; S <= 3; ++S)
    for (int F = 0; F <= 5; ++F) EXPECT_EQ(cryo_triple_classes(S, F), naive_classes(S, F)) << S << ' ' << F;
}

TEST(Cryo, ProjectedBasisSpansClasses) {
  for (int F = 2; F <= 4; ++F) {
    const auto b = invariant_basis(ProblemSpec::so3(2, F).with_projection(Projection::Equator), 3);
    EXPECT_LE(b.size(), static_cast<std::size_t>(cryo_triple_classes(2, F)));
  }
}

TEST(Cryo, FeasibilityRecord) {
  const auto c = count_cryo(2, 2, 1);
  EXPECT_EQ(c.trdeg, 13);
  EXPECT_EQ(c.dim_u3, c.classes - 12);
  EXPECT_EQ(c.feasible, c.dim_u2 + c.dim_u3 >= c.trdeg);
  EXPECT_THROW(count_cryo(1, 1, 1), SpecError);
}
