#include "orbit/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "orbit/algebra_tests.hpp"
#include "orbit/errors.hpp"
#include "orbit/so3.hpp"

namespace orbit {

namespace {

constexpr int kCoveringSize = 3000;
constexpr int kCoordinateIterations = 200;
constexpr int kRefinedStarts = 8;
constexpr double kEigenSeparation = 1e-6;
constexpr int kJennrichDraws = 5;
constexpr double kMarchRankTolerance = 1e-9;

using cd = std::complex<double>;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

// ---------------------------------------------------------------------------
// orbit distance

const std::vector<Quaternion>& rotation_covering() {
  static const std::vector<Quaternion> covering = [] {
    Rng rng(0xc0e7'1a9eULL, 0);
    std::vector<Quaternion> out;
    out.reserve(kCoveringSize);
    out.push_back(Quaternion{});
    while (static_cast<int>(out.size()) < kCoveringSize) out.push_back(so3::haar_quaternion(rng));
    return out;
  }();
  return covering;
}

OrbitDistance so3_distance(const ProblemSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  GroupElement g = GroupElement::identity(spec);
  auto cost = [&](const Quaternion& q) {
    g.rotation = q;
    return (a - act(spec, g, b)).squaredNorm();
  };
  const auto& covering = rotation_covering();
  std::vector<std::pair<double, int>> scored;
  scored.reserve(covering.size());
  for (int i = 0; i < static_cast<int>(covering.size()); ++i) scored.emplace_back(cost(covering[static_cast<std::size_t>(i)]), i);
  std::partial_sort(scored.begin(), scored.begin() + kRefinedStarts, scored.end());

  double best = std::numeric_limits<double>::infinity();
  Quaternion best_q;
  for (int start = 0; start < kRefinedStarts; ++start) {
    Quaternion q = covering[static_cast<std::size_t>(scored[static_cast<std::size_t>(start)].second)];
    double f = scored[static_cast<std::size_t>(start)].first;
    // coordinate descent with left-multiplied axis rotations
    double h = 0.2;
    for (int it = 0; it < kCoordinateIterations && h > 1e-12; ++it) {
      bool moved = false;
      for (int axis = 0; axis < 3; ++axis) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::Vector3d w = Eigen::Vector3d::Zero();
          w[axis] = sgn * h;
          const Quaternion trial = (Quaternion::from_rotation_vector(w) * q).normalized();
          const double ft = cost(trial);
          if (ft < f) {
            f = ft;
            q = trial;
            moved = true;
          }
        }
      }
      if (!moved) h *= 0.5;
    }
    // Gauss-Newton polish on the rotation vector
    double mu = 1e-6;
    for (int it = 0; it < 30; ++it) {
      g.rotation = q;
      const Eigen::VectorXd r = a - act(spec, g, b);
      Eigen::MatrixXd J(r.size(), 3);
      const double eps = 1e-6;
      for (int axis = 0; axis < 3; ++axis) {
        Eigen::Vector3d w = Eigen::Vector3d::Zero();
        w[axis] = eps;
        g.rotation = (Quaternion::from_rotation_vector(w) * q).normalized();
        const Eigen::VectorXd rp = a - act(spec, g, b);
        g.rotation = (Quaternion::from_rotation_vector(-w) * q).normalized();
        const Eigen::VectorXd rm = a - act(spec, g, b);
        J.col(axis) = (rp - rm) / (2.0 * eps);
      }
      const Eigen::Matrix3d A = J.transpose() * J + mu * Eigen::Matrix3d::Identity();
      const Eigen::Vector3d step = -A.ldlt().solve(J.transpose() * r);
      const Quaternion trial = (Quaternion::from_rotation_vector(step) * q).normalized();
      const double ft = cost(trial);
      if (ft < f) {
        f = ft;
        q = trial;
        mu = std::max(mu * 0.1, 1e-12);
        if (step.norm() < 1e-14) break;
      } else {
        mu *= 10.0;
        if (mu > 1e6) break;
      }
    }
    if (f < best) {
      best = f;
      best_q = q;
    }
  }
  OrbitDistance out;
  out.value = std::sqrt(std::max(0.0, best));
  out.upper_bound = true;
  out.best = GroupElement::identity(spec);
  out.best.rotation = best_q;
  return out;
}

// ---------------------------------------------------------------------------
// so3 tables

using Slot = std::pair<int, int>;

bool triangle(int l1, int l2, int l3) { return std::abs(l2 - l3) <= l1 && l1 <= l2 + l3; }

std::array<int, 6> canonical_key(std::array<Slot, 3> t) {
  std::sort(t.begin(), t.end());
  return {t[0].first, t[0].second, t[1].first, t[1].second, t[2].first, t[2].second};
}

bool known_zero(const std::array<int, 6>& k) {
  const Slot a{k[0], k[1]}, b{k[2], k[3]}, c{k[4], k[5]};
  if (a == b && b == c) return a.second % 2 == 1;
  if (a == b) return c.second % 2 == 1;
  if (b == c) return a.second % 2 == 1;
  if (a == c) return b.second % 2 == 1;
  return false;
}

int sign_pow(int e) { return e % 2 == 0 ? 1 : -1; }

/// Canonical I3 keys linear in the (s, l) block: the other two slots have frequency < l.
std::vector<std::array<int, 6>> march_keys(int S, int l, int s) {
  std::vector<Slot> known;
  for (int sh = 0; sh < S; ++sh)
    for (int k = 1; k < l; ++k) known.emplace_back(sh, k);
  std::vector<std::array<int, 6>> keys;
  for (std::size_t i = 0; i < known.size(); ++i)
    for (std::size_t j = i; j < known.size(); ++j) {
      if (!triangle(l, known[i].second, known[j].second)) continue;
      const auto key = canonical_key({known[i], known[j], Slot{s, l}});
      if (!known_zero(key)) keys.push_back(key);
    }
  return keys;
}

// ---------------------------------------------------------------------------
// least squares

struct InvariantResidual : Eigen::DenseFunctor<double> {
  const InvariantBasis* basis;
  const Eigen::VectorXd* targets;
  int K;
  int signal_vars;

  InvariantResidual(const InvariantBasis& b, const Eigen::VectorXd& t, int k, int svars, int inputs)
      : Eigen::DenseFunctor<double>(inputs, std::max<int>(inputs, static_cast<int>(t.size()) + (k > 1 ? 1 : 0))),
        basis(&b),
        targets(&t),
        K(k),
        signal_vars(svars) {}

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    fvec.setZero(values());
    const auto n = targets->size();
    fvec.head(n) = basis->evaluate(x) - *targets;
    if (K > 1) fvec[n] = x.tail(K).sum() - 1.0;
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    fjac.setZero(values(), inputs());
    const auto n = targets->size();
    fjac.topRows(n) = basis->jacobian(x);
    if (K > 1) fjac.row(n).tail(K).setOnes();
    return 0;
  }
};

struct StartOutcome {
  Eigen::VectorXd x;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

double invariant_residual(const InvariantBasis& basis, const Eigen::VectorXd& targets, const Eigen::VectorXd& x) {
  return (basis.evaluate(x) - targets).cwiseAbs().maxCoeff();
}

Eigen::VectorXd scaled_start(const InvariantBasis& basis, const Eigen::VectorXd& targets, Eigen::VectorXd x,
                             int signal_vars) {
  // match the degree-2 members by a common scale of the signal part
  const Eigen::VectorXd f = basis.evaluate(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis.members[i].degree != 2) continue;
    num += f[static_cast<Eigen::Index>(i)] * targets[static_cast<Eigen::Index>(i)];
    den += f[static_cast<Eigen::Index>(i)] * f[static_cast<Eigen::Index>(i)];
  }
  if (den > 0.0 && num > 0.0) x.head(signal_vars) *= std::sqrt(std::sqrt(num / den));
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------

OrbitDistance orbit_distance_detail(const ProblemSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() != spec.ambient_dim()) throw SpecError("orbit distance: dimension mismatch");
  if (!spec.is_finite()) return so3_distance(spec, a, b);
  const auto group = enumerate_group(spec);
  OrbitDistance out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& g : group) {
    const double d = (a - act(spec, g, b)).norm();
    if (d < out.value) {
      out.value = d;
      out.best = g;
    }
  }
  return out;
}

double orbit_distance(const ProblemSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return orbit_distance_detail(spec, a, b).value;
}

double signal_distance(const ProblemSpec& spec, const Signal& a, const Signal& b) {
  if (a.size() != b.size() || a.size() == 0) throw SpecError("signal distance: component counts differ");
  const ProblemSpec base = spec.base();
  const int K = a.size();
  Eigen::MatrixXd D(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) D(i, j) = orbit_distance(base, a[i], b[j]);
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int i = 0; i < K; ++i) worst = std::max(worst, D(i, perm[static_cast<std::size_t>(i)]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---------------------------------------------------------------------------
// Jennrich

std::vector<Eigen::VectorXd> jennrich_components(const MomentTensor& t3, int rank, Rng& rng) {
  if (t3.order() != 3) throw SpecError("Jennrich needs an order-3 tensor");
  const int p = t3.dim();
  if (rank < 1 || rank > p) throw PreconditionError("Jennrich needs 1 <= rank <= dimension");
  const std::vector<double> dense = t3.dense();
  auto at = [&](int i, int j, int k) {
    return dense[(static_cast<std::size_t>(i) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)) * static_cast<std::size_t>(p) + static_cast<std::size_t>(k)];
  };
  // best-separated spectrum over a few contraction pairs
  double best_sep = -1.0;
  Eigen::MatrixXd W, vecs;
  std::string failure = "Jennrich: eigenvalue collision";
  for (int draw = 0; draw < kJennrichDraws; ++draw) {
    Eigen::VectorXd u(p), v(p);
    for (int i = 0; i < p; ++i) u[i] = rng.normal();
    for (int i = 0; i < p; ++i) v[i] = rng.normal();
    Eigen::MatrixXd Mu = Eigen::MatrixXd::Zero(p, p), Mv = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
          Mu(i, j) += at(i, j, k) * u[k];
          Mv(i, j) += at(i, j, k) * v[k];
        }
    // restrict to the rank-r column space
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Mv, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv[0] <= 0.0 || sv[rank - 1] <= 1e-12 * sv[0]) {
      failure = "Jennrich: contraction is rank deficient";
      continue;
    }
    const Eigen::MatrixXd Wd = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd A = (Wd.transpose() * Mu * Wd) * (Wd.transpose() * Mv * Wd).partialPivLu().inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) continue;
    const Eigen::VectorXcd lambda = es.eigenvalues();
    const double scale = lambda.cwiseAbs().maxCoeff();
    double sep = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < i; ++j) sep = std::min(sep, std::abs(lambda[i] - lambda[j]) / scale);
    bool real = true;
    for (int i = 0; i < rank; ++i) real = real && std::abs(lambda[i].imag()) <= kEigenSeparation * scale;
    if (!real) failure = "Jennrich: complex eigenvalues";
    if (!real || sep < kEigenSeparation || sep <= best_sep) continue;
    best_sep = sep;
    W = Wd;
    vecs = es.eigenvectors().real();
  }
  if (best_sep < 0.0) throw SolverError(failure);
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < rank; ++i) {
    Eigen::VectorXd b = W * vecs.col(i);
    b.normalize();
    dirs.push_back(std::move(b));
  }
  // weights c_i with T = sum c_i b_i^{(x)3}
  const auto& idx = t3.multi_indices();
  Eigen::MatrixXd L(static_cast<Eigen::Index>(idx.size()), rank);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t e = 0; e < idx.size(); ++e) {
    const double mult = std::sqrt(static_cast<double>(permutation_count(idx[e])));
    rhs[static_cast<Eigen::Index>(e)] = mult * t3.values()[e];
    for (int i = 0; i < rank; ++i) {
      const auto& b = dirs[static_cast<std::size_t>(i)];
      L(static_cast<Eigen::Index>(e), i) = mult * b[idx[e][0]] * b[idx[e][1]] * b[idx[e][2]];
    }
  }
  const Eigen::VectorXd c = L.colPivHouseholderQr().solve(rhs);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < rank; ++i) out.push_back(std::cbrt(c[i]) * dirs[static_cast<std::size_t>(i)]);
  return out;
}

RecoveryResult jennrich_recover(const MomentTensor& t3, const ProblemSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.family != GroupFamily::Cyclic || spec.projection != Projection::None || spec.heterogeneity != 1) {
    throw PreconditionError("Jennrich recovery needs the homogeneous cyclic regular representation");
  }
  const int r = static_cast<int>(spec.group_order());
  if (t3.dim() != spec.observed_dim()) throw SpecError("tensor dimension does not match the ProblemSpec");
  const auto comps = jennrich_components(t3, r, rng);
  const double lift = std::cbrt(static_cast<double>(r));
  const Eigen::VectorXd ref = lift * comps.front();
  Eigen::VectorXd avg = ref;
  for (std::size_t i = 1; i < comps.size(); ++i) {
    const Eigen::VectorXd cand = lift * comps[i];
    avg += act(spec, orbit_distance_detail(spec, ref, cand).best, cand);
  }
  avg /= static_cast<double>(comps.size());

  RecoveryResult res;
  res.method = "jennrich";
  res.candidates.emplace_back(avg);
  res.residual = max_abs_diff(exact_moment(spec, res.candidates.front(), 3).values(), t3.values());
  res.gauge_note = "cyclic shift fixed by aligning all components to the first; components averaged";

  // local least-squares polish on the T3 entries
  const auto basis = invariant_basis(spec, 3);
  const std::vector<MomentTensor> moments{MomentTensor(1, t3.dim()), MomentTensor(2, t3.dim()), t3};
  const auto polished =
      lsq_recover(basis, contract_functionals(basis, moments), spec, res.candidates.front(), rng, {.starts = 1});
  const double polished_residual = max_abs_diff(exact_moment(spec, polished.candidates.front(), 3).values(), t3.values());
  if (polished_residual < res.residual) {
    res.candidates.front() = polished.candidates.front();
    res.residual = polished_residual;
    res.gauge_note += "; polished by least squares on T3";
  }
  return res;
}

// ---------------------------------------------------------------------------
// so3 tables

double So3InvariantTables::i2_at(int s1, int s2, int l) const {
  const auto it = i2.find({std::min(s1, s2), std::max(s1, s2), l});
  if (it == i2.end()) throw SpecError("missing I2 value");
  return it->second;
}

double So3InvariantTables::i3_at(std::array<int, 6> key) const {
  const auto it = i3.find(canonical_key({Slot{key[0], key[1]}, Slot{key[2], key[3]}, Slot{key[4], key[5]}}));
  return it == i3.end() ? 0.0 : it->second;
}

So3InvariantTables so3_tables_from_signal(const ProblemSpec& spec, const Eigen::VectorXd& theta) {
  const auto x = so3_complex_blocks(spec, theta);
  So3InvariantTables t;
  t.shells = spec.shells;
  t.frequencies = spec.frequencies;
  const int S = spec.shells, F = spec.frequencies;
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = s1; s2 < S; ++s2)
      for (int l = 1; l <= F; ++l) t.i2[{s1, s2, l}] = so3_i2_value(x, s1, s2, l).real();
  std::vector<Slot> slots;
  for (int s = 0; s < S; ++s)
    for (int l = 1; l <= F; ++l) slots.emplace_back(s, l);
  for (std::size_t i = 0; i < slots.size(); ++i)
    for (std::size_t j = i; j < slots.size(); ++j)
      for (std::size_t k = j; k < slots.size(); ++k) {
        const std::array<int, 6> key{slots[i].first, slots[i].second, slots[j].first,
                                     slots[j].second, slots[k].first, slots[k].second};
        if (!triangle(key[1], key[3], key[5]) || known_zero(key)) continue;
        t.i3[key] = so3_i3_value(x, key).real();
      }
  return t;
}

So3InvariantTables so3_tables_from_values(const InvariantBasis& degree2, const Eigen::VectorXd& values2,
                                          const InvariantBasis& degree3, const Eigen::VectorXd& values3,
                                          int shells, int frequencies) {
  So3InvariantTables t;
  t.shells = shells;
  t.frequencies = frequencies;
  for (std::size_t i = 0; i < degree2.size(); ++i) {
    const auto& m = degree2.members[i];
    if (m.kind != InvariantKind::I2) throw SpecError("expected I2 members");
    t.i2[{m.key[0], m.key[1], m.key[2]}] = values2[static_cast<Eigen::Index>(i)];
  }
  for (std::size_t i = 0; i < degree3.size(); ++i) {
    const auto& m = degree3.members[i];
    if (m.kind != InvariantKind::I3) throw SpecError("expected I3 members");
    t.i3[{m.key[0], m.key[1], m.key[2], m.key[3], m.key[4], m.key[5]}] = values3[static_cast<Eigen::Index>(i)];
  }
  return t;
}

// ---------------------------------------------------------------------------
// degree-2 projection

double projection_coefficient(int l, int m) {
  return sign_pow(std::abs(m)) * so3::equator_coefficient_complex(l, m) * so3::equator_coefficient_complex(l, -m);
}

Rational scaled_projection_coefficient(int l, int m) {
  if (l < 1 || l > 8 || m < 0 || m > l) throw SpecError("exact projection coefficients need 1 <= l <= 8, 0 <= m <= l");
  if ((l + m) % 2 == 1) return Rational(0);
  // (2l+1) (l-m)!/(l+m)! ((l+m-1)!!/(l-m)!!)^2
  Rational r(2 * l + 1);
  for (int j = l - m + 1; j <= l + m; ++j) r /= j;
  for (int j = l + m - 1; j > 0; j -= 2) r *= Rational(static_cast<long long>(j) * j);
  for (int j = l - m; j > 0; j -= 2) r /= Rational(static_cast<long long>(j) * j);
  return projection_coefficient(l, m) < 0.0 ? -r : r;
}

namespace {

template <class Table, class Coef>
Table project_impl(const Table& i2, int S, int F, Coef coef) {
  Table p2;
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = s1; s2 < S; ++s2)
      for (int m = 0; m <= F; ++m) {
        typename Table::mapped_type acc(0);
        for (int l = std::max(1, m); l <= F; ++l) acc += coef(l, m) * i2.at({s1, s2, l});
        p2[{s1, s2, m}] = acc;
      }
  return p2;
}

template <class Table, class Coef>
Table unproject_impl(const Table& p2, int S, int F, Coef coef) {
  Table i2;
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = s1; s2 < S; ++s2)
      for (int m = F; m >= 1; --m) {
        // row m couples I2(l) for l >= m with l = m (mod 2); pivot at l = m
        auto rhs = p2.at({s1, s2, m});
        for (int l = m + 2; l <= F; l += 2) rhs -= coef(l, m) * i2.at({s1, s2, l});
        i2[{s1, s2, m}] = rhs / coef(m, m);
      }
  return i2;
}

}  // namespace

DegreeTwoTable project_degree2(const DegreeTwoTable& i2, int shells, int frequencies) {
  return project_impl(i2, shells, frequencies, projection_coefficient);
}

DegreeTwoTable unproject_degree2(const DegreeTwoTable& p2, int shells, int frequencies) {
  return unproject_impl(p2, shells, frequencies, projection_coefficient);
}

ExactDegreeTwoTable project_degree2_exact(const ExactDegreeTwoTable& i2, int shells, int frequencies) {
  return project_impl(i2, shells, frequencies, scaled_projection_coefficient);
}

ExactDegreeTwoTable unproject_degree2_exact(const ExactDegreeTwoTable& p2_scaled, int shells, int frequencies) {
  return unproject_impl(p2_scaled, shells, frequencies, scaled_projection_coefficient);
}

// ---------------------------------------------------------------------------
// frequency marching

int frequency_march_equations(int shells, int l) {
  if (shells < 1 || l < 2) throw SpecError("equation count needs shells >= 1 and l >= 2");
  return static_cast<int>(march_keys(shells, l, 0).size());
}

RecoveryResult frequency_march(const So3InvariantTables& tables, Rng& /*rng*/) {
  const int S = tables.shells, F = tables.frequencies;
  if (S < 3) throw PreconditionError("frequency marching needs at least 3 shells");
  if (F < 1) throw PreconditionError("frequency marching needs F >= 1");
  const ProblemSpec spec = ProblemSpec::so3(S, F);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(spec.ambient_dim());

  // l = 1: Gram of the shell vectors is -3 I2(., ., 1)
  Eigen::MatrixXd G(S, S);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b) G(a, b) = -3.0 * tables.i2_at(a, b, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(std::abs(ev[S - 1]), std::abs(ev[0]));
  if (ev[0] < -1e-8 * top) throw SolverError("frequency marching: l=1 Gram matrix is not positive semidefinite");
  if (ev[S - 3] <= kMarchRankTolerance * top) throw SolverError("frequency marching: l=1 Gram matrix has rank < 3");
  Eigen::MatrixXd V(S, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd col = es.eigenvectors().col(S - 1 - c);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
    V.col(c) = std::sqrt(ev[S - 1 - c]) * col;
  }
  for (int s = 0; s < S; ++s) theta.segment(so3_index(F, s, 1, -1), 3) = V.row(s).transpose();

  // sign from the largest I3 over three distinct shells at l = 1
  std::array<int, 6> sign_key{};
  double sign_target = 0.0;
  for (int a = 0; a < S; ++a)
    for (int b = a + 1; b < S; ++b)
      for (int c = b + 1; c < S; ++c) {
        const std::array<int, 6> key{a, 1, b, 1, c, 1};
        const double v = tables.i3_at(key);
        if (std::abs(v) > std::abs(sign_target)) {
          sign_target = v;
          sign_key = key;
        }
      }
  if (sign_target == 0.0) throw SolverError("frequency marching: no l=1 triple invariant fixes the sign");
  {
    const double got = so3_i3_value(so3_complex_blocks(spec, theta), sign_key).real();
    if (got * sign_target < 0.0) {
      for (int s = 0; s < S; ++s) theta.segment(so3_index(F, s, 1, -1), 3) *= -1.0;
    }
  }

  // l >= 2: linear systems from I3 with two known slots
  for (int l = 2; l <= F; ++l) {
    const Eigen::MatrixXcd B = so3::basis_change(l).complex_from_h;
    auto blocks = so3_complex_blocks(spec, theta);
    for (int s = 0; s < S; ++s) {
      std::vector<std::array<int, 6>> keys;
      std::vector<double> rhs;
      for (const auto& key : march_keys(S, l, s)) {
        const auto it = tables.i3.find(key);
        if (it == tables.i3.end()) continue;
        keys.push_back(key);
        rhs.push_back(it->second);
      }
      const int n = 2 * l + 1;
      Eigen::MatrixXd M(static_cast<Eigen::Index>(keys.size()), n);
      for (int a = 0; a < n; ++a) {
        blocks[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)] = B.col(a);
        for (std::size_t e = 0; e < keys.size(); ++e) M(static_cast<Eigen::Index>(e), a) = so3_i3_value(blocks, keys[e]).real();
      }
      if (static_cast<int>(keys.size()) < n) throw SolverError("frequency marching: too few equations at l=" + std::to_string(l));
      Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv[n - 1] <= kMarchRankTolerance * sv[0]) {
        throw SolverError("frequency marching: rank-deficient system at l=" + std::to_string(l));
      }
      const Eigen::VectorXd sol = svd.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size())));
      theta.segment(so3_index(F, s, l, -l), n) = sol;
      blocks[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)] = B * sol.cast<cd>();
    }
  }

  RecoveryResult res;
  res.method = "frequency_march";
  res.candidates.emplace_back(theta);
  const auto got = so3_tables_from_signal(spec, theta);
  double r = 0.0;
  for (const auto& [k, v] : tables.i2) r = std::max(r, std::abs(got.i2.at(k) - v));
  for (const auto& [k, v] : tables.i3) r = std::max(r, std::abs(got.i3_at(k) - v));
  res.residual = r;
  res.gauge_note =
      "rotation fixed by the principal factor U sqrt(Lambda) of the l=1 Gram matrix; sign fixed by I3 on l=1 shells " +
      std::to_string(sign_key[0] + 1) + "," + std::to_string(sign_key[2] + 1) + "," + std::to_string(sign_key[4] + 1) +
      "; the reflected signal is not enumerated";
  return res;
}

// ---------------------------------------------------------------------------
// least squares

RecoveryResult lsq_recover(const InvariantBasis& basis, const Eigen::VectorXd& targets, const ProblemSpec& spec,
                           const std::optional<Signal>& init, Rng& rng, const LsqOptions& options) {
  spec.validate();
  if (targets.size() != static_cast<Eigen::Index>(basis.size())) throw SpecError("one target per invariant required");
  if (options.starts < 1) throw SpecError("lsq needs at least one start");
  const int K = spec.heterogeneity;
  const int signal_vars = K * spec.ambient_dim();
  const int inputs = signal_vars + (K > 1 ? K : 0);
  if (basis.num_vars != inputs) throw SpecError("basis variables do not match the ProblemSpec layout");

  const std::uint64_t base_seed = rng.next_u64();
  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(options.starts));
  auto run = [&](int start) {
    Eigen::VectorXd x;
    if (start == 0 && init) {
      x = flatten_signal(spec, *init);
    } else {
      Rng r(base_seed, static_cast<std::uint64_t>(start));
      x = flatten_signal(spec, random_signal(spec, r));
      if (K > 1) {
        for (int k = 0; k < K; ++k) x[signal_vars + k] = 1.0 / K * (1.0 + 0.2 * (r.uniform() - 0.5));
        x.tail(K) /= x.tail(K).sum();
      }
      x = scaled_start(basis, targets, std::move(x), signal_vars);
    }
    InvariantResidual functor(basis, targets, K, signal_vars, inputs);
    Eigen::LevenbergMarquardt<InvariantResidual> lm(functor);
    lm.setMaxfev(options.max_evaluations);
    lm.setXtol(1e-15);
    lm.setFtol(1e-15);
    lm.setGtol(0.0);
    lm.minimize(x);
    if (K > 1) {
      const double sum = x.tail(K).sum();
      if (sum > 0.0) x.tail(K) /= sum;
    }
    auto& o = outcomes[static_cast<std::size_t>(start)];
    o.iterations = static_cast<int>(lm.iterations());
    o.residual = invariant_residual(basis, targets, x);
    if (!std::isfinite(o.residual)) o.residual = std::numeric_limits<double>::infinity();
    o.x = std::move(x);
  };
  const int threads = std::max(1, std::min(options.threads, options.starts));
  if (threads == 1) {
    for (int s = 0; s < options.starts; ++s) run(s);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int s = t; s < options.starts; s += threads) run(s);
      });
    }
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < outcomes.size(); ++s) {
    if (outcomes[s].residual < outcomes[best].residual) best = s;
  }
  const auto& o = outcomes[best];
  RecoveryResult res;
  res.method = "lsq";
  res.candidates.push_back(unflatten_signal(spec, o.x));
  if (K > 1) res.weights.assign(o.x.data() + signal_vars, o.x.data() + signal_vars + K);
  res.residual = o.residual;
  res.iterations = o.iterations;
  const double scale = std::max(1.0, targets.size() > 0 ? targets.cwiseAbs().maxCoeff() : 0.0);
  res.success = o.residual < options.tolerance * scale;
  res.gauge_note = "best of " + std::to_string(options.starts) + " starts (start " + std::to_string(best) +
                   "); no global optimality claim";
  return res;
}

RecoveryResult recover_from_moments(const std::vector<MomentTensor>& moments, const ProblemSpec& spec, Rng& rng,
                                    const LsqOptions& options) {
  spec.validate();
  if (spec.heterogeneity != 1) throw PreconditionError("use demix_then_recover for heterogeneous specs");
  if (moments.size() < 3) throw PreconditionError("recovery needs moments up to order 3");
  if (spec.family == GroupFamily::Cyclic && spec.projection == Projection::None) {
    return jennrich_recover(moments[2], spec, rng);
  }
  if (spec.family == GroupFamily::SO3 && spec.projection == Projection::None && !spec.symmetry && spec.shells >= 3) {
    const auto b2 = invariant_basis(spec, 2);
    const auto b3 = invariant_basis(spec, 3);
    const auto tables = so3_tables_from_values(b2, contract_functionals(b2, moments), b3,
                                               contract_functionals(b3, moments), spec.shells, spec.frequencies);
    return frequency_march(tables, rng);
  }
  const auto basis = invariant_basis_up_to(spec, 3);
  return lsq_recover(basis, contract_functionals(basis, moments), spec, std::nullopt, rng, options);
}

DemixResult demix_then_recover(const std::vector<MomentTensor>& moments, const ProblemSpec& spec, Rng& rng,
                               const DemixOptions& options) {
  spec.validate();
  const int K = spec.heterogeneity;
  const ProblemSpec base = spec.base();
  DemixResult out;
  if (K == 1) {
    out.components.push_back(recover_from_moments(moments, base, rng, options.lsq));
    out.weights = {1.0};
    out.residual = out.components.front().residual;
    out.mixed = out.components.front();
    return out;
  }
  if (!options.assume_identifiable) {
    const auto report = hessian_test(spec, invariant_basis_up_to(base, 3), K, rng);
    if (!report.passed) throw PreconditionError("de-mixing is not certified by the Hessian test for this spec");
  }
  const auto lifted = invariant_basis_up_to(spec, 3);
  out.mixed = lsq_recover(lifted, contract_functionals(lifted, moments), spec, std::nullopt, rng, options.lsq);
  if (!out.mixed.success) {
    throw SolverError("de-mixing optimization failed; best residual " + std::to_string(out.mixed.residual));
  }
  out.residual = out.mixed.residual;
  const Signal& mix = out.mixed.candidates.front();
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return out.mixed.weights[static_cast<std::size_t>(a)] > out.mixed.weights[static_cast<std::size_t>(b)];
  });
  for (int k : order) {
    const Signal comp(mix[k]);
    std::vector<MomentTensor> comp_moments;
    for (int d = 1; d <= 3; ++d) comp_moments.push_back(exact_moment(base, comp, d));
    out.components.push_back(recover_from_moments(comp_moments, base, rng, options.lsq));
    out.weights.push_back(out.mixed.weights[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace orbit
