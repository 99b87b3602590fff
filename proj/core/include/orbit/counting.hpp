#pragma once

#include <cstdint>
#include <vector>

#include "orbit/problem.hpp"

namespace orbit {

/// Dimensions of the invariant ring by degree.
struct HilbertSeries {
  std::vector<std::uint64_t> coefficients;  // degree 0..d_max

  /// Rational form (finite groups): (1/order) sum_j multiplicity_j / prod_c (1 - t^{cycles_j[c]}).
  struct CycleClass {
    std::uint64_t multiplicity = 0;
    std::vector<int> cycle_lengths;
  };
  std::vector<CycleClass> classes;
  std::uint64_t group_order = 0;
  int pole_order = 0;  // order of the pole at t = 1
};

/// Molien series of a finite permutation group acting on R^p, to degree d_max.
HilbertSeries molien_series_finite(const ProblemSpec& spec, int d_max);

/// dim of degree-d SO(3) invariants on the sum of V_l over the multiset `frequencies`, d <= 6.
int so3_invariant_dim(const std::vector<int>& frequencies, int degree);

/// Transcendence degree of the invariant ring (heterogeneous and symmetric variants included).
int trdeg_ring(const ProblemSpec& spec);

struct HetMraCount {
  int p = 0;
  int K = 0;
  std::int64_t distinct = 0;  // script U
  std::int64_t needed = 0;    // K p + K - 1
  bool feasible = false;
};

HetMraCount count_het_mra(int p, int K);

struct CryoCount {
  int S = 0;
  int F = 0;
  int K = 1;
  std::int64_t dim_u2 = 0;
  std::int64_t classes = 0;    // |X(S, F)|
  std::int64_t relations = 0;  // E(S)
  std::int64_t dim_u3 = 0;
  std::int64_t trdeg = 0;
  bool feasible = false;
};

/// |X(S,F)|: classes of (s1,m1,s2,m2,s3,m3), m1+m2+m3 = 0, under permutation and negation.
std::int64_t cryo_triple_classes(int S, int F);

/// E(S) = 2S + 4S(S-1) + S(S-1)(S-2).
std::int64_t cryo_relations(int S);

CryoCount count_cryo(int S, int F, int K);

}  // namespace orbit
