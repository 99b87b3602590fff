#include "orbit/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "orbit/errors.hpp"

namespace orbit {

std::string to_string(GroupFamily family) {
  switch (family) {
    case GroupFamily::Cyclic: return "cyclic";
    case GroupFamily::Symmetric: return "symmetric";
    case GroupFamily::SO3: return "so3";
  }
  return "?";
}

std::string to_string(Projection projection) {
  switch (projection) {
    case Projection::None: return "none";
    case Projection::MraRing: return "mra_ring";
    case Projection::Equator: return "equator";
  }
  return "?";
}

GroupFamily parse_group_family(const std::string& name) {
  if (name == "cyclic") return GroupFamily::Cyclic;
  if (name == "symmetric") return GroupFamily::Symmetric;
  if (name == "so3") return GroupFamily::SO3;
  throw SpecError("unknown group family '" + name + "'");
}

Projection parse_projection(const std::string& name) {
  if (name == "none") return Projection::None;
  if (name == "mra_ring") return Projection::MraRing;
  if (name == "equator") return Projection::Equator;
  throw SpecError("unknown projection '" + name + "'");
}

ProblemSpec ProblemSpec::cyclic(int p) {
  ProblemSpec s;
  s.family = GroupFamily::Cyclic;
  s.p = p;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::symmetric(int p) {
  ProblemSpec s;
  s.family = GroupFamily::Symmetric;
  s.p = p;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::so3(int shells, int frequencies) {
  ProblemSpec s;
  s.family = GroupFamily::SO3;
  s.p = 0;
  s.shells = shells;
  s.frequencies = frequencies;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::with_heterogeneity(int K) const {
  if (K < 1) throw SpecError("heterogeneity must be positive");
  ProblemSpec s = *this;
  s.heterogeneity = K;
  s.weights.assign(static_cast<std::size_t>(K), 1.0 / K);
  return s;
}

ProblemSpec ProblemSpec::with_weights(std::vector<double> w) const {
  ProblemSpec s = *this;
  s.heterogeneity = static_cast<int>(w.size());
  s.weights = std::move(w);
  return s;
}

ProblemSpec ProblemSpec::with_projection(Projection proj) const {
  ProblemSpec s = *this;
  s.projection = proj;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::with_sigma(double sg) const {
  ProblemSpec s = *this;
  s.sigma = sg;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::with_symmetry(int L) const {
  ProblemSpec s = *this;
  s.symmetry = L;
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::base() const {
  ProblemSpec s = *this;
  s.heterogeneity = 1;
  s.weights = {1.0};
  return s;
}

void ProblemSpec::validate() const {
  switch (family) {
    case GroupFamily::Cyclic:
    case GroupFamily::Symmetric:
      if (p < 1) throw SpecError("group size p must be positive");
      if (symmetry) throw SpecError("symmetry restriction applies to so3 only");
      break;
    case GroupFamily::SO3:
      if (shells < 1) throw SpecError("so3 needs at least one shell");
      if (frequencies < 1 || frequencies > so3::kMaxFrequency) {
        throw SpecError("so3 frequency count out of range");
      }
      if (symmetry && *symmetry < 1) throw SpecError("symmetry order must be positive");
      break;
  }
  if (projection == Projection::MraRing &&
      (family != GroupFamily::Cyclic || p < 3 || p % 2 == 0)) {
    throw SpecError("mra_ring projection requires cyclic(p) with odd p >= 3");
  }
  if (projection == Projection::Equator && family != GroupFamily::SO3) {
    throw SpecError("equator projection requires so3");
  }
  if (heterogeneity < 1) throw SpecError("heterogeneity must be positive");
  if (weights.size() != static_cast<std::size_t>(heterogeneity)) {
    throw SpecError("mixing weight count must equal heterogeneity");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("mixing weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SpecError("mixing weights must sum to 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw SpecError("noise sigma must be >= 0");
}

int ProblemSpec::ambient_dim() const noexcept {
  if (family == GroupFamily::SO3) return shells * (frequencies * frequencies + 2 * frequencies);
  return p;
}

int ProblemSpec::observed_dim() const noexcept {
  switch (projection) {
    case Projection::None: return ambient_dim();
    case Projection::MraRing: return (p - 1) / 2;
    case Projection::Equator: return shells * (2 * frequencies + 1);
  }
  return ambient_dim();
}

std::uint64_t ProblemSpec::group_order() const {
  if (family == GroupFamily::Cyclic) return static_cast<std::uint64_t>(p);
  if (family == GroupFamily::Symmetric) {
    if (p > 20) throw SpecError("symmetric group order overflows 64 bits");
    std::uint64_t f = 1;
    for (int i = 2; i <= p; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
  }
  throw PreconditionError("so3 is not a finite group");
}

GroupElement GroupElement::identity(const ProblemSpec& spec) {
  GroupElement g;
  g.family = spec.family;
  if (spec.family == GroupFamily::Symmetric) {
    g.permutation.resize(static_cast<std::size_t>(spec.p));
    std::iota(g.permutation.begin(), g.permutation.end(), 0);
  }
  return g;
}

GroupElement compose(const ProblemSpec& spec, const GroupElement& g, const GroupElement& h) {
  GroupElement out;
  out.family = spec.family;
  switch (spec.family) {
    case GroupFamily::Cyclic:
      out.residue = (g.residue + h.residue) % spec.p;
      break;
    case GroupFamily::Symmetric:
      out.permutation.resize(h.permutation.size());
      for (std::size_t i = 0; i < h.permutation.size(); ++i) {
        out.permutation[i] = g.permutation[static_cast<std::size_t>(h.permutation[i])];
      }
      break;
    case GroupFamily::SO3:
      out.rotation = (g.rotation * h.rotation).normalized();
      break;
  }
  return out;
}

GroupElement inverse(const ProblemSpec& spec, const GroupElement& g) {
  GroupElement out;
  out.family = spec.family;
  switch (spec.family) {
    case GroupFamily::Cyclic:
      out.residue = (spec.p - g.residue) % spec.p;
      break;
    case GroupFamily::Symmetric:
      out.permutation.resize(g.permutation.size());
      for (std::size_t i = 0; i < g.permutation.size(); ++i) {
        out.permutation[static_cast<std::size_t>(g.permutation[i])] = static_cast<int>(i);
      }
      break;
    case GroupFamily::SO3:
      out.rotation = g.rotation.conjugate();
      break;
  }
  return out;
}

std::vector<GroupElement> enumerate_group(const ProblemSpec& spec, std::uint64_t cap) {
  if (!spec.is_finite()) throw PreconditionError("cannot enumerate so3");
  const std::uint64_t order = spec.group_order();
  if (order > cap) throw PreconditionError("group too large to enumerate");
  std::vector<GroupElement> out;
  out.reserve(order);
  if (spec.family == GroupFamily::Cyclic) {
    for (int r = 0; r < spec.p; ++r) {
      GroupElement g;
      g.family = spec.family;
      g.residue = r;
      out.push_back(std::move(g));
    }
  } else {
    GroupElement g = GroupElement::identity(spec);
    do {
      out.push_back(g);
    } while (std::next_permutation(g.permutation.begin(), g.permutation.end()));
  }
  return out;
}

Signal random_signal(const ProblemSpec& spec, Rng& rng, double scale) {
  std::vector<Eigen::VectorXd> comps;
  for (int k = 0; k < spec.heterogeneity; ++k) {
    Eigen::VectorXd v(spec.ambient_dim());
    for (int i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
    comps.push_back(std::move(v));
  }
  Signal s(std::move(comps));
  if (spec.symmetry) s = restrict_symmetric(spec, s);
  return s;
}

GroupElement haar_sample(const ProblemSpec& spec, Rng& rng) {
  GroupElement g;
  g.family = spec.family;
  switch (spec.family) {
    case GroupFamily::Cyclic:
      g.residue = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.p)));
      break;
    case GroupFamily::Symmetric:
      g = GroupElement::identity(spec);
      for (int i = spec.p - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(g.permutation[static_cast<std::size_t>(i)], g.permutation[j]);
      }
      break;
    case GroupFamily::SO3:
      g.rotation = so3::haar_quaternion(rng);
      break;
  }
  return g;
}

namespace {

void act_into(const ProblemSpec& spec, const GroupElement& g, const Eigen::VectorXd& theta,
              Eigen::Ref<Eigen::VectorXd> out) {
  const int n = spec.ambient_dim();
  switch (spec.family) {
    case GroupFamily::Cyclic:
      for (int i = 0; i < n; ++i) out[(i + g.residue) % n] = theta[i];
      break;
    case GroupFamily::Symmetric:
      for (int i = 0; i < n; ++i) out[g.permutation[static_cast<std::size_t>(i)]] = theta[i];
      break;
    case GroupFamily::SO3: {
      const int F = spec.frequencies;
      const auto blocks = so3::real_action_blocks(F, g.rotation);
      for (int s = 0; s < spec.shells; ++s) {
        for (int l = 1; l <= F; ++l) {
          const int off = so3_index(F, s, l, -l);
          out.segment(off, 2 * l + 1) = blocks[static_cast<std::size_t>(l)] * theta.segment(off, 2 * l + 1);
        }
      }
      break;
    }
  }
}

}  // namespace

Eigen::VectorXd act(const ProblemSpec& spec, const GroupElement& g, const Eigen::VectorXd& theta) {
  if (theta.size() != spec.ambient_dim()) throw SpecError("act: dimension mismatch");
  Eigen::VectorXd out(theta.size());
  act_into(spec, g, theta, out);
  return out;
}

Eigen::MatrixXd projection_matrix(const ProblemSpec& spec) {
  const int n = spec.ambient_dim();
  switch (spec.projection) {
    case Projection::None:
      return Eigen::MatrixXd::Identity(n, n);
    case Projection::MraRing: {
      const int q = (spec.p - 1) / 2;
      Eigen::MatrixXd P = Eigen::MatrixXd::Zero(q, n);
      for (int j = 0; j < q; ++j) {
        P(j, j) = 1.0;
        P(j, n - 1 - j) = 1.0;
      }
      return P;
    }
    case Projection::Equator: {
      const int F = spec.frequencies;
      Eigen::MatrixXd P = Eigen::MatrixXd::Zero(spec.observed_dim(), n);
      for (int s = 0; s < spec.shells; ++s) {
        for (int l = 1; l <= F; ++l) {
          for (int m = -l; m <= l; ++m) {
            P(s * (2 * F + 1) + m + F, so3_index(F, s, l, m)) = so3::equator_coefficient(l, m);
          }
        }
      }
      return P;
    }
  }
  return Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd project(const ProblemSpec& spec, const Eigen::VectorXd& v) {
  if (spec.projection == Projection::None) throw PreconditionError("spec has no projection");
  if (v.size() != spec.ambient_dim()) throw SpecError("project: dimension mismatch");
  return projection_matrix(spec) * v;
}

SampleGenerator::SampleGenerator(ProblemSpec spec, Signal theta, std::uint64_t seed)
    : spec_(std::move(spec)), theta_(std::move(theta)), seed_(seed), proj_(projection_matrix(spec_)) {
  spec_.validate();
  if (theta_.size() != spec_.heterogeneity) throw SpecError("signal component count != K");
  for (const auto& c : theta_.components) {
    if (c.size() != spec_.ambient_dim()) throw SpecError("signal dimension mismatch");
  }
  cumulative_.resize(spec_.weights.size());
  std::partial_sum(spec_.weights.begin(), spec_.weights.end(), cumulative_.begin());
}

void SampleGenerator::sample(std::int64_t index, Eigen::Ref<Eigen::VectorXd> out) const {
  Rng rng(seed_, static_cast<std::uint64_t>(index));
  std::size_t k = 0;
  if (cumulative_.size() > 1) {
    const double u = rng.uniform() * cumulative_.back();
    while (k + 1 < cumulative_.size() && u >= cumulative_[k]) ++k;
  }
  const GroupElement g = haar_sample(spec_, rng);
  if (spec_.projection == Projection::None) {
    act_into(spec_, g, theta_.components[k], out);
  } else {
    Eigen::VectorXd moved(spec_.ambient_dim());
    act_into(spec_, g, theta_.components[k], moved);
    out.noalias() = proj_ * moved;
  }
  if (spec_.sigma > 0.0) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += spec_.sigma * rng.normal();
  }
}

SampleSet simulate(const ProblemSpec& spec, const Signal& theta, std::int64_t n, std::uint64_t seed,
                   int threads) {
  if (n < 1) throw SpecError("simulate needs n >= 1");
  const SampleGenerator gen(spec, theta, seed);
  SampleSet set;
  set.observations.resize(n, gen.observed_dim());
  set.sigma = spec.sigma;
  set.seed = seed;
  set.truth = theta;
  auto run = [&](std::int64_t lo, std::int64_t hi) {
    Eigen::VectorXd y(gen.observed_dim());
    for (std::int64_t i = lo; i < hi; ++i) {
      gen.sample(i, y);
      set.observations.row(i) = y.transpose();
    }
  };
  threads = std::max(1, threads);
  if (threads == 1 || n < 1024) {
    run(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t lo = t * chunk;
      const std::int64_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(run, lo, hi);
    }
  }
  return set;
}

Signal restrict_symmetric(const ProblemSpec& spec, const Signal& theta) {
  if (spec.family != GroupFamily::SO3 || !spec.symmetry) {
    throw PreconditionError("restrict_symmetric requires an so3 spec with a symmetry order");
  }
  const int L = *spec.symmetry;
  const int F = spec.frequencies;
  Signal out = theta;
  for (auto& c : out.components) {
    if (c.size() != spec.ambient_dim()) throw SpecError("restrict_symmetric: dimension mismatch");
    for (int s = 0; s < spec.shells; ++s) {
      for (int l = 1; l <= F; ++l) {
        for (int m = -l; m <= l; ++m) {
          if (m % L != 0) c[so3_index(F, s, l, m)] = 0.0;
        }
      }
    }
  }
  return out;
}

}  // namespace orbit
