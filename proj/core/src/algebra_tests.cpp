#include "orbit/algebra_tests.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <gmpxx.h>

#include "orbit/counting.hpp"
#include "orbit/errors.hpp"

namespace orbit {

namespace {

using QVector = std::vector<mpq_class>;

void require_layout(const InvariantBasis& basis, const ProblemSpec& spec) {
  if (basis.empty()) throw PreconditionError("basis is empty");
  if (basis.components != spec.heterogeneity) throw SpecError("basis and spec disagree on K");
  const int expected = spec.heterogeneity == 1 ? spec.ambient_dim()
                                               : spec.heterogeneity * spec.ambient_dim() + spec.heterogeneity;
  if (basis.num_vars != expected) throw SpecError("basis variable count does not match spec");
}

/// Flattened indices of free signal coordinates within one component.
std::vector<int> free_coordinates(const ProblemSpec& spec) {
  std::vector<int> out;
  if (spec.family == GroupFamily::SO3 && spec.symmetry) {
    const int L = *spec.symmetry;
    for (int s = 0; s < spec.shells; ++s)
      for (int l = 1; l <= spec.frequencies; ++l)
        for (int m = -l; m <= l; ++m)
          if (m % L == 0) out.push_back(so3_index(spec.frequencies, s, l, m));
  } else {
    for (int i = 0; i < spec.ambient_dim(); ++i) out.push_back(i);
  }
  return out;
}

template <class Row, class Out>
void reduce_columns(const ProblemSpec& spec, const Row& full, Out& out) {
  const int K = spec.heterogeneity;
  const int p = spec.ambient_dim();
  const auto free = free_coordinates(spec);
  out.clear();
  for (int k = 0; k < K; ++k)
    for (int c : free) out.push_back(full[static_cast<std::size_t>(k * p + c)]);
  for (int j = 0; j + 1 < K; ++j) {
    out.push_back(full[static_cast<std::size_t>(K * p + j)] - full[static_cast<std::size_t>(K * p + K - 1)]);
  }
}

int numeric_rank(const Eigen::VectorXd& sv, double& gap) {
  gap = std::numeric_limits<double>::infinity();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > kRankTolerance * sv[0]) ++rank;
  if (rank < sv.size()) gap = sv[rank] > 0.0 ? sv[rank - 1] / sv[rank] : std::numeric_limits<double>::infinity();
  return rank;
}

Eigen::MatrixXd normalized_rows(Eigen::MatrixXd J) {
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    const double n = J.row(i).norm();
    if (n > 0.0) J.row(i) /= n;
  }
  return J;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& J) {
  if (J.rows() == 0 || J.cols() == 0) return {};
  return Eigen::BDCSVD<Eigen::MatrixXd>(J).singularValues();
}

QVector random_exact_point(const ProblemSpec& spec, Rng& rng, std::vector<std::string>& text) {
  const int K = spec.heterogeneity;
  const int p = spec.ambient_dim();
  const auto free = free_coordinates(spec);
  QVector x(static_cast<std::size_t>(K == 1 ? p : K * p + K), mpq_class(0));
  for (int k = 0; k < K; ++k) {
    for (int c : free) {
      mpq_class v(static_cast<long>(rng.below(20001)) - 10000, 10000);
      v.canonicalize();
      x[static_cast<std::size_t>(k * p + c)] = v;
    }
  }
  if (K > 1) {
    std::vector<long> a;
    long total = 0;
    for (int k = 0; k < K; ++k) {
      a.push_back(1 + static_cast<long>(rng.below(10000)));
      total += a.back();
    }
    for (int k = 0; k < K; ++k) {
      mpq_class w(a[static_cast<std::size_t>(k)], total);
      w.canonicalize();
      x[static_cast<std::size_t>(K * p + k)] = w;
    }
  }
  text.clear();
  for (const auto& v : x) text.push_back(v.get_str());
  return x;
}

mpq_class to_mpq(const Rational& r) {
  mpq_class q(mpz_class(std::to_string(r.numerator())), mpz_class(std::to_string(r.denominator())));
  q.canonicalize();
  return q;
}

QVector exact_gradient(const RationalPolynomial& poly, const QVector& x) {
  QVector g(x.size(), mpq_class(0));
  for (const auto& t : poly.terms()) {
    const auto ex = t.mono.exponents();
    const mpq_class c = to_mpq(t.coeff);
    for (std::size_t i = 0; i < ex.size(); ++i) {
      mpq_class prod = c * ex[i].second;
      for (std::size_t j = 0; j < ex.size(); ++j) {
        const int power = j == i ? ex[j].second - 1 : ex[j].second;
        for (int e = 0; e < power; ++e) prod *= x[ex[j].first];
      }
      g[ex[i].first] += prod;
    }
  }
  return g;
}

std::vector<std::vector<mpz_class>> integer_rows(const std::vector<QVector>& rows) {
  std::vector<std::vector<mpz_class>> out;
  for (const auto& r : rows) {
    mpz_class l = 1;
    for (const auto& v : r) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
    std::vector<mpz_class> z;
    z.reserve(r.size());
    for (const auto& v : r) z.push_back(v.get_num() * (l / v.get_den()));
    out.push_back(std::move(z));
  }
  return out;
}

/// Fraction-free (Bareiss) elimination rank.
int bareiss_rank(std::vector<std::vector<mpz_class>> A) {
  const std::size_t m = A.size();
  if (m == 0) return 0;
  const std::size_t n = A.front().size();
  mpz_class prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < n && r < m; ++c) {
    std::size_t piv = r;
    while (piv < m && A[piv][c] == 0) ++piv;
    if (piv == m) continue;
    std::swap(A[piv], A[r]);
    for (std::size_t i = r + 1; i < m; ++i) {
      for (std::size_t j = c + 1; j < n; ++j) {
        A[i][j] = (A[r][c] * A[i][j] - A[i][c] * A[r][j]);
        mpz_divexact(A[i][j].get_mpz_t(), A[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      A[i][c] = 0;
    }
    prev = A[r][c];
    ++r;
  }
  return static_cast<int>(r);
}

std::vector<QVector> exact_jacobian(const InvariantBasis& basis, const ProblemSpec& spec, const QVector& x) {
  if (!basis.has_exact()) throw PreconditionError("exact mode needs exact coefficients (finite groups)");
  std::vector<QVector> rows;
  for (const auto& m : basis.members) {
    QVector reduced;
    reduce_columns(spec, exact_gradient(*m.exact, x), reduced);
    rows.push_back(std::move(reduced));
  }
  return rows;
}

/// Incremental echelon form over Q.
class ExactEchelon {
 public:
  bool add(QVector v) {
    for (const auto& [col, row] : rows_) {
      if (v[col] == 0) continue;
      const mpq_class f = v[col] / row[col];
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= f * row[j];
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] != 0) {
        rows_.emplace_back(j, std::move(v));
        return true;
      }
    }
    return false;
  }

 private:
  std::vector<std::pair<std::size_t, QVector>> rows_;
};

void finish_verdict(RankReport& r) {
  if (r.mode == RankMode::Numeric && r.gap_ratio < kMinSpectralGap) {
    r.verdict = Verdict::Inconclusive;
  } else {
    r.verdict = r.rank >= r.target ? Verdict::Feasible : Verdict::Infeasible;
  }
}

}  // namespace

std::string to_string(RankMode mode) { return mode == RankMode::Exact ? "exact" : "numeric"; }

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Feasible:
      return "feasible";
    case Verdict::Infeasible:
      return "infeasible";
    case Verdict::Inconclusive:
      break;
  }
  return "inconclusive";
}

Eigen::VectorXd random_point(const ProblemSpec& spec, Rng& rng) {
  const auto theta = random_signal(spec, rng);
  ProblemSpec s = spec;
  if (spec.heterogeneity > 1) {
    std::vector<double> w;
    double total = 0.0;
    for (int k = 0; k < spec.heterogeneity; ++k) {
      w.push_back(0.1 + rng.uniform());
      total += w.back();
    }
    for (auto& v : w) v /= total;
    s.weights = w;
  }
  return flatten_signal(s, theta);
}

Eigen::MatrixXd reduced_jacobian(const InvariantBasis& basis, const ProblemSpec& spec, const Eigen::VectorXd& x) {
  require_layout(basis, spec);
  const Eigen::MatrixXd full = basis.jacobian(x);
  std::vector<double> tmp;
  std::vector<double> row(static_cast<std::size_t>(full.cols()));
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    for (Eigen::Index j = 0; j < full.cols(); ++j) row[static_cast<std::size_t>(j)] = full(i, j);
    reduce_columns(spec, row, tmp);
    if (i == 0) out.resize(full.rows(), static_cast<Eigen::Index>(tmp.size()));
    for (std::size_t j = 0; j < tmp.size(); ++j) out(i, static_cast<Eigen::Index>(j)) = tmp[j];
  }
  return out;
}

RankReport jacobian_rank(const InvariantBasis& basis, const ProblemSpec& spec, Rng& rng, RankMode mode) {
  require_layout(basis, spec);
  RankReport r;
  r.labels = basis.labels();
  r.mode = mode;
  r.target = trdeg_ring(spec);
  if (mode == RankMode::Exact) {
    const QVector x = random_exact_point(spec, rng, r.exact_point);
    for (const auto& v : x) r.point.push_back(v.get_d());
    const auto rows = exact_jacobian(basis, spec, x);
    r.rows = static_cast<int>(rows.size());
    r.cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    r.rank = bareiss_rank(integer_rows(rows));
  } else {
    const Eigen::VectorXd x = random_point(spec, rng);
    r.point.assign(x.data(), x.data() + x.size());
    const Eigen::MatrixXd J = normalized_rows(reduced_jacobian(basis, spec, x));
    r.rows = static_cast<int>(J.rows());
    r.cols = static_cast<int>(J.cols());
    const Eigen::VectorXd sv = singular_values(J);
    r.singular_values.assign(sv.data(), sv.data() + sv.size());
    r.rank = numeric_rank(sv, r.gap_ratio);
  }
  finish_verdict(r);
  return r;
}

RankReport jacobian_rank_consensus(const InvariantBasis& basis, const ProblemSpec& spec, Rng& rng, RankMode mode,
                                   int points) {
  RankReport first = jacobian_rank(basis, spec, rng, mode);
  for (int i = 1; i < points; ++i) {
    const RankReport next = jacobian_rank(basis, spec, rng, mode);
    if (next.rank != first.rank || next.verdict == Verdict::Inconclusive) {
      first.verdict = Verdict::Inconclusive;
      first.rank = std::min(first.rank, next.rank);
    }
    first.gap_ratio = std::min(first.gap_ratio, next.gap_ratio);
  }
  return first;
}

std::pair<RankReport, RankReport> cross_check_rank(const InvariantBasis& basis, const ProblemSpec& spec, Rng& rng) {
  RankReport exact = jacobian_rank(basis, spec, rng, RankMode::Exact);
  RankReport numeric = jacobian_rank(basis, spec, rng, RankMode::Numeric);
  if (numeric.verdict != Verdict::Inconclusive && numeric.rank < exact.rank) {
    throw std::logic_error("numeric rank below certified exact rank");
  }
  return {std::move(exact), std::move(numeric)};
}

TranscendenceBasis transcendence_basis(const InvariantBasis& basis, const ProblemSpec& spec, Rng& rng,
                                       RankMode mode) {
  require_layout(basis, spec);
  TranscendenceBasis out;
  out.mode = mode;
  if (mode == RankMode::Exact) {
    std::vector<std::string> text;
    const QVector x = random_exact_point(spec, rng, text);
    ExactEchelon echelon;
    const auto rows = exact_jacobian(basis, spec, x);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (echelon.add(rows[i])) out.indices.push_back(i);
    }
  } else {
    const Eigen::MatrixXd J = normalized_rows(reduced_jacobian(basis, spec, random_point(spec, rng)));
    double gap = 0.0;
    const Eigen::VectorXd full_sv = singular_values(J);
    const int full_rank = numeric_rank(full_sv, gap);
    if (gap < kMinSpectralGap) throw InconclusiveError("spectral gap too small for greedy selection");
    const double floor = kRankTolerance * (full_sv.size() ? full_sv[0] : 0.0);
    Eigen::MatrixXd chosen(0, J.cols());
    for (Eigen::Index i = 0; i < J.rows() && static_cast<int>(out.indices.size()) < full_rank; ++i) {
      Eigen::MatrixXd trial(chosen.rows() + 1, J.cols());
      trial << chosen, J.row(i);
      const Eigen::VectorXd sv = singular_values(trial);
      if (sv.size() > chosen.rows() && sv[chosen.rows()] > floor) {
        chosen = std::move(trial);
        out.indices.push_back(static_cast<std::size_t>(i));
      }
    }
  }
  for (std::size_t i : out.indices) out.labels.push_back(basis.members[i].label);
  return out;
}

HessianReport hessian_test(const ProblemSpec& spec, const InvariantBasis& base_basis, int K, Rng& rng,
                           int max_attempts) {
  const ProblemSpec base = spec.base();
  require_layout(base_basis, base);
  if (K < 1) throw SpecError("K must be positive");
  HessianReport report;
  report.K = K;
  const RankReport base_rank = jacobian_rank_consensus(base_basis, base, rng, RankMode::Numeric, 3);
  if (base_rank.verdict == Verdict::Inconclusive) throw InconclusiveError("homogeneous Jacobian rank inconclusive");
  report.cone_dim = base_rank.rank + 1;
  report.expected_jacobian_rank = K * report.cone_dim;
  const int p = base.ambient_dim();
  const int N = static_cast<int>(base_basis.size());
  const int orbit_dim = p - trdeg_ring(base);
  report.expected_hessian_rank = p - orbit_dim;

  if (K == 1) {
    report.passed = base_rank.rank == trdeg_ring(base);
    report.jacobian_rank = report.cone_dim;
    return report;
  }
  if (report.expected_jacobian_rank >= N + 1) {
    throw PreconditionError("stacked Jacobian has no kernel: K dim(M) = " +
                            std::to_string(report.expected_jacobian_rank) + " >= " + std::to_string(N + 1));
  }

  std::vector<Polynomial> members;
  for (std::size_t i = 0; i < base_basis.size(); ++i) members.push_back(base_basis.materialize(i));

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    report.attempts = attempt;
    report.points.clear();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K * (p + 1), N + 1);
    std::vector<Eigen::VectorXd> thetas;
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd theta = random_signal(base, rng)[0];
      const double lambda = 1.0;
      thetas.push_back(theta);
      std::vector<double> pt(theta.data(), theta.data() + theta.size());
      pt.push_back(lambda);
      report.points.push_back(std::move(pt));
      const Eigen::MatrixXd grad = base_basis.jacobian(theta);  // N x p
      const Eigen::VectorXd vals = base_basis.evaluate(theta);
      const int r0 = k * (p + 1);
      J.block(r0, 0, p, N) = lambda * grad.transpose();
      J.block(r0 + p, 0, 1, N) = vals.transpose();
      J(r0 + p, N) = 1.0;
    }
    Eigen::VectorXd scale(N + 1);
    for (int c = 0; c <= N; ++c) {
      scale[c] = J.col(c).norm();
      if (scale[c] == 0.0) scale[c] = 1.0;
      J.col(c) /= scale[c];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    double gap = 0.0;
    report.jacobian_rank = numeric_rank(svd.singularValues(), gap);
    if (report.jacobian_rank != report.expected_jacobian_rank) continue;

    const Eigen::MatrixXd kernel = svd.matrixV().rightCols(N + 1 - report.jacobian_rank);
    Eigen::VectorXd mix(kernel.cols());
    for (auto& v : mix) v = rng.normal();
    Eigen::VectorXd ell = kernel * mix;
    ell = ell.cwiseQuotient(scale);
    ell /= ell.norm();
    report.kernel = ell;

    // pullback lambda * (sum_i ell_i f_i(theta) + ell_N) in variables (theta, lambda)
    std::vector<Term<double>> terms;
    const auto lambda_var = static_cast<std::uint32_t>(p);
    for (int i = 0; i < N; ++i) {
      if (ell[i] == 0.0) continue;
      for (const auto& t : members[static_cast<std::size_t>(i)].terms()) {
        Monomial m = t.mono;
        m.push(lambda_var);
        terms.push_back({m, ell[i] * t.coeff});
      }
    }
    terms.push_back({Monomial::from_vars(std::array<std::uint32_t, 1>{lambda_var}), ell[N]});
    const Polynomial pulled = Polynomial::from_terms(std::move(terms));
    Eigen::VectorXd at(p + 1);
    at << thetas.front(), 1.0;
    const Eigen::MatrixXd H = hessian(pulled, at);
    const Eigen::VectorXd hsv = Eigen::JacobiSVD<Eigen::MatrixXd>(H).singularValues();
    report.hessian_singular_values.assign(hsv.data(), hsv.data() + hsv.size());
    double hgap = 0.0;
    report.hessian_rank = numeric_rank(hsv, hgap);
    if (report.hessian_rank == report.expected_hessian_rank) {
      report.passed = true;
      return report;
    }
  }
  report.passed = false;
  return report;
}

}  // namespace orbit
