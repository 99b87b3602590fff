#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "orbit/errors.hpp"
#include "orbit/invariants.hpp"
#include "orbit/problem.hpp"

using namespace orbit;

namespace {

std::vector<ProblemSpec> all_families() {
  return {ProblemSpec::cyclic(5), ProblemSpec::symmetric(4), ProblemSpec::so3(2, 3),
          ProblemSpec::cyclic(7).with_projection(Projection::MraRing),
          ProblemSpec::so3(2, 3).with_projection(Projection::Equator)};
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(ProblemSpec, AmbientAndObservedDimensions) {
  EXPECT_EQ(ProblemSpec::cyclic(7).ambient_dim(), 7);
  EXPECT_EQ(ProblemSpec::cyclic(7).with_projection(Projection::MraRing).observed_dim(), 3);
  EXPECT_EQ(ProblemSpec::so3(2, 3).ambient_dim(), 2 * 15);
  EXPECT_EQ(ProblemSpec::so3(2, 3).with_projection(Projection::Equator).observed_dim(), 2 * 7);
}

TEST(ProblemSpec, ValidationRejectsBadInput) {
  EXPECT_THROW(ProblemSpec::cyclic(4).with_projection(Projection::MraRing).validate(), SpecError);
  EXPECT_THROW(ProblemSpec::cyclic(5).with_projection(Projection::Equator).validate(), SpecError);
  EXPECT_THROW(ProblemSpec::cyclic(5).with_heterogeneity(2).with_weights({0.7, 0.7}).validate(), SpecError);
  EXPECT_THROW(ProblemSpec::cyclic(5).with_symmetry(2).validate(), SpecError);
  EXPECT_THROW(ProblemSpec::cyclic(5).with_sigma(-1.0).validate(), SpecError);
  EXPECT_NO_THROW(ProblemSpec::cyclic(5).with_heterogeneity(2).with_weights({1.0, 0.0}).validate());
}

TEST(ProblemSpec, ParseRoundTrip) {
  for (auto f : {GroupFamily::Cyclic, GroupFamily::Symmetric, GroupFamily::SO3}) {
    EXPECT_EQ(parse_group_family(to_string(f)), f);
  }
  for (auto p : {Projection::None, Projection::MraRing, Projection::Equator}) {
    EXPECT_EQ(parse_projection(to_string(p)), p);
  }
  EXPECT_THROW(parse_group_family("dihedral"), SpecError);
}

TEST(Act, CyclicShiftConvention) {
  const auto spec = ProblemSpec::cyclic(3);
  GroupElement g = GroupElement::identity(spec);
  g.residue = 1;
  const Eigen::VectorXd out = act(spec, g, vec({1, 2, 3}));
  EXPECT_EQ(out, vec({3, 1, 2}));
}

TEST(Act, IdentityLeavesSignal) {
  Rng rng(1);
  for (const auto& spec : all_families()) {
    const auto theta = random_signal(spec, rng);
    EXPECT_LT((act(spec, GroupElement::identity(spec), theta[0]) - theta[0]).norm(), 1e-12);
  }
}

TEST(Act, GroupLawAndNorm) {
  Rng rng(2);
  for (const auto& spec : all_families()) {
    for (int t = 0; t < 20; ++t) {
      const auto theta = random_signal(spec, rng);
      const auto g = haar_sample(spec, rng);
      const auto h = haar_sample(spec, rng);
      const Eigen::VectorXd lhs = act(spec, g, act(spec, h, theta[0]));
      const Eigen::VectorXd rhs = act(spec, compose(spec, g, h), theta[0]);
      EXPECT_LT((lhs - rhs).norm(), 1e-10);
      EXPECT_NEAR(act(spec, g, theta[0]).norm(), theta[0].norm(), 1e-10);
      const Eigen::VectorXd back = act(spec, inverse(spec, g), act(spec, g, theta[0]));
      EXPECT_LT((back - theta[0]).norm(), 1e-10);
    }
  }
}

TEST(Act, DimensionMismatchThrows) {
  const auto spec = ProblemSpec::cyclic(3);
  EXPECT_THROW(act(spec, GroupElement::identity(spec), vec({1, 2})), SpecError);
}

TEST(Group, EnumerationSizes) {
  EXPECT_EQ(enumerate_group(ProblemSpec::cyclic(6)).size(), 6u);
  EXPECT_EQ(enumerate_group(ProblemSpec::symmetric(4)).size(), 24u);
  EXPECT_THROW(enumerate_group(ProblemSpec::so3(1, 1)), PreconditionError);
  EXPECT_THROW(enumerate_group(ProblemSpec::symmetric(12)), PreconditionError);
}

TEST(Haar, TrivialCyclicGroup) {
  const auto spec = ProblemSpec::cyclic(1);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(haar_sample(spec, rng).residue, 0);
}

TEST(Haar, CyclicUniform) {
  const auto spec = ProblemSpec::cyclic(5);
  Rng rng(4);
  std::array<int, 5> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(haar_sample(spec, rng).residue)];
  for (int c : counts) EXPECT_NEAR(c / double(n), 0.2, 0.01);
}

TEST(Haar, SymmetricIsPermutation) {
  const auto spec = ProblemSpec::symmetric(6);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto perm = haar_sample(spec, rng).permutation;
    std::sort(perm.begin(), perm.end());
    for (int j = 0; j < 6; ++j) EXPECT_EQ(perm[static_cast<std::size_t>(j)], j);
  }
}

TEST(Haar, So3AngleMean) {
  const auto spec = ProblemSpec::so3(1, 1);
  Rng rng(6);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += std::cos(haar_sample(spec, rng).angle());
  EXPECT_NEAR(acc / n, -0.5, 0.01);
}

TEST(Project, MraRingExample) {
  const auto spec = ProblemSpec::cyclic(5).with_projection(Projection::MraRing);
  EXPECT_EQ(project(spec, vec({1, 2, 3, 4, 5})), vec({6, 6}));
}

TEST(Project, EquatorDropsOddParity) {
  const auto spec = ProblemSpec::so3(1, 1).with_projection(Projection::Equator);
  const Eigen::VectorXd y = project(spec, vec({0.3, 1.7, -0.2}));
  EXPECT_EQ(y.size(), 3);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(project(spec, Eigen::VectorXd::Zero(3)), Eigen::VectorXd::Zero(3));
}

TEST(Project, RequiresProjection) {
  EXPECT_THROW(project(ProblemSpec::cyclic(5), vec({1, 2, 3, 4, 5})), PreconditionError);
}

TEST(Simulate, NoiselessObservationsAreShifts) {
  const auto spec = ProblemSpec::cyclic(3);
  const Signal theta(vec({1, 2, 3}));
  const auto samples = simulate(spec, theta, 10, 99);
  std::set<std::vector<double>> shifts;
  for (const auto& g : enumerate_group(spec)) {
    const Eigen::VectorXd y = act(spec, g, theta[0]);
    shifts.insert({y.data(), y.data() + y.size()});
  }
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd y = samples.observations.row(i);
    EXPECT_TRUE(shifts.count({y.data(), y.data() + y.size()}));
  }
}

TEST(Simulate, DeterministicAndThreadIndependent) {
  const auto spec = ProblemSpec::so3(1, 2).with_sigma(0.5);
  Rng rng(7);
  const auto theta = random_signal(spec, rng);
  const auto a = simulate(spec, theta, 257, 5, 1);
  const auto b = simulate(spec, theta, 257, 5, 3);
  const auto c = simulate(spec, theta, 257, 6, 1);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_NE(a.observations, c.observations);
}

TEST(Simulate, MeanMatchesFirstMoment) {
  const auto spec = ProblemSpec::cyclic(4).with_sigma(1.0);
  const Signal theta(vec({1.0, -0.5, 2.0, 0.25}));
  const int n = 100000;
  const auto samples = simulate(spec, theta, n, 11);
  const auto T1 = exact_moment(spec, theta, 1);
  const Eigen::VectorXd mean = samples.observations.colwise().mean();
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(mean[j], T1.at({j}), 3.0 / std::sqrt(double(n)));
}

TEST(Simulate, ZeroWeightComponentNeverDrawn) {
  const auto spec = ProblemSpec::cyclic(3).with_heterogeneity(2).with_weights({1.0, 0.0});
  const Signal theta(std::vector<Eigen::VectorXd>{vec({1, 2, 3}), vec({10, 20, 30})});
  const auto samples = simulate(spec, theta, 200, 3);
  for (int i = 0; i < 200; ++i) EXPECT_LT(samples.observations.row(i).maxCoeff(), 3.5);
}

TEST(RestrictSymmetric, SurvivingCoordinates) {
  const auto spec = ProblemSpec::so3(1, 3).with_symmetry(2);
  const Signal ones(Eigen::VectorXd::Ones(spec.ambient_dim()));
  const auto r = restrict_symmetric(spec, ones);
  EXPECT_EQ(static_cast<int>(r[0].sum()), 7);
  const auto again = restrict_symmetric(spec, r);
  EXPECT_EQ(again[0], r[0]);
  const auto wide = ProblemSpec::so3(2, 3).with_symmetry(7);
  EXPECT_EQ(static_cast<int>(restrict_symmetric(wide, Signal(Eigen::VectorXd::Ones(wide.ambient_dim())))[0].sum()),
            2 * 3);
  EXPECT_THROW(restrict_symmetric(ProblemSpec::cyclic(3), ones), PreconditionError);
}

TEST(RestrictSymmetric, RandomSignalRespectsRestriction) {
  const auto spec = ProblemSpec::so3(1, 4).with_symmetry(3);
  Rng rng(8);
  const auto theta = random_signal(spec, rng);
  EXPECT_EQ(restrict_symmetric(spec, theta)[0], theta[0]);
}
