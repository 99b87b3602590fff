#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/rational.hpp>
#include <Eigen/Dense>

namespace orbit {

inline constexpr int kMaxMonomialDegree = 6;

/// Monomial stored as a sorted multiset of variable indices.
struct Monomial {
  std::array<std::uint32_t, kMaxMonomialDegree> vars{};
  std::uint8_t degree = 0;

  static Monomial one() noexcept { return {}; }

  template <class Range>
  static Monomial from_vars(const Range& range) {
    Monomial m;
    for (auto v : range) m.push(static_cast<std::uint32_t>(v));
    return m;
  }

  void push(std::uint32_t var) {
    if (degree >= kMaxMonomialDegree) throw std::length_error("monomial degree exceeds limit");
    auto pos = static_cast<std::size_t>(degree);
    while (pos > 0 && vars[pos - 1] > var) {
      vars[pos] = vars[pos - 1];
      --pos;
    }
    vars[pos] = var;
    ++degree;
  }

  [[nodiscard]] Monomial operator*(const Monomial& rhs) const {
    Monomial out = *this;
    for (int i = 0; i < rhs.degree; ++i) out.push(rhs.vars[static_cast<std::size_t>(i)]);
    return out;
  }

  [[nodiscard]] std::span<const std::uint32_t> span() const noexcept {
    return {vars.data(), static_cast<std::size_t>(degree)};
  }

  /// (variable, power) pairs in increasing variable order.
  [[nodiscard]] std::vector<std::pair<std::uint32_t, int>> exponents() const {
    std::vector<std::pair<std::uint32_t, int>> out;
    for (auto v : span()) {
      if (!out.empty() && out.back().first == v) {
        ++out.back().second;
      } else {
        out.emplace_back(v, 1);
      }
    }
    return out;
  }

  auto operator<=>(const Monomial&) const = default;
  bool operator==(const Monomial&) const = default;
};

template <class Coeff>
struct Term {
  Monomial mono;
  Coeff coeff;
};

/// Sparse polynomial with terms kept sorted by monomial and merged.
template <class Coeff>
class BasicPolynomial {
 public:
  using coefficient_type = Coeff;

  BasicPolynomial() = default;

  static BasicPolynomial from_terms(std::vector<Term<Coeff>> terms) {
    std::sort(terms.begin(), terms.end(),
              [](const Term<Coeff>& a, const Term<Coeff>& b) { return a.mono < b.mono; });
    BasicPolynomial p;
    for (auto& t : terms) {
      if (!p.terms_.empty() && p.terms_.back().mono == t.mono) {
        p.terms_.back().coeff += t.coeff;
      } else {
        p.terms_.push_back(std::move(t));
      }
    }
    std::erase_if(p.terms_, [](const Term<Coeff>& t) { return t.coeff == Coeff(0); });
    return p;
  }

  static BasicPolynomial monomial(const Monomial& m, Coeff c = Coeff(1)) {
    return from_terms({Term<Coeff>{m, c}});
  }

  [[nodiscard]] const std::vector<Term<Coeff>>& terms() const noexcept { return terms_; }
  [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

  [[nodiscard]] int degree() const noexcept {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, static_cast<int>(t.mono.degree));
    return d;
  }

  [[nodiscard]] bool is_homogeneous() const noexcept {
    return std::all_of(terms_.begin(), terms_.end(), [&](const Term<Coeff>& t) {
      return t.mono.degree == terms_.front().mono.degree;
    });
  }

  /// One past the largest variable index used.
  [[nodiscard]] std::uint32_t num_vars() const noexcept {
    std::uint32_t n = 0;
    for (const auto& t : terms_) {
      if (t.mono.degree > 0) n = std::max(n, t.mono.vars[t.mono.degree - 1u] + 1u);
    }
    return n;
  }

  [[nodiscard]] BasicPolynomial operator+(const BasicPolynomial& rhs) const {
    std::vector<Term<Coeff>> all = terms_;
    all.insert(all.end(), rhs.terms_.begin(), rhs.terms_.end());
    return from_terms(std::move(all));
  }

  [[nodiscard]] BasicPolynomial operator*(const BasicPolynomial& rhs) const {
    std::vector<Term<Coeff>> all;
    all.reserve(terms_.size() * rhs.terms_.size());
    for (const auto& a : terms_) {
      for (const auto& b : rhs.terms_) all.push_back({a.mono * b.mono, a.coeff * b.coeff});
    }
    return from_terms(std::move(all));
  }

  [[nodiscard]] BasicPolynomial scaled(const Coeff& c) const {
    std::vector<Term<Coeff>> all = terms_;
    for (auto& t : all) t.coeff *= c;
    return from_terms(std::move(all));
  }

  /// Applies a variable renaming (image of each index).
  template <class Map>
  [[nodiscard]] BasicPolynomial renamed(const Map& image) const {
    std::vector<Term<Coeff>> all;
    all.reserve(terms_.size());
    for (const auto& t : terms_) {
      Monomial m;
      for (auto v : t.mono.span()) m.push(static_cast<std::uint32_t>(image(v)));
      all.push_back({m, t.coeff});
    }
    return from_terms(std::move(all));
  }

  bool operator==(const BasicPolynomial& rhs) const {
    if (terms_.size() != rhs.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!(terms_[i].mono == rhs.terms_[i].mono) || !(terms_[i].coeff == rhs.terms_[i].coeff)) {
        return false;
      }
    }
    return true;
  }

  /// Evaluation with caller-chosen scalar type (double, mpq_class, ...).
  template <class Scalar, class Vec>
  [[nodiscard]] Scalar evaluate_as(const Vec& x) const {
    Scalar acc(0);
    for (const auto& t : terms_) {
      Scalar prod = Scalar(t.coeff);
      for (auto v : t.mono.span()) prod *= x[v];
      acc += prod;
    }
    return acc;
  }

 private:
  std::vector<Term<Coeff>> terms_;
};

using Polynomial = BasicPolynomial<double>;
using Rational = boost::rational<long long>;
using RationalPolynomial = BasicPolynomial<Rational>;

double evaluate(const Polynomial& poly, std::span<const double> x);

/// grad += scale * d poly / dx.
void accumulate_gradient(const Polynomial& poly, std::span<const double> x, double scale,
                         std::span<double> grad);

Eigen::VectorXd gradient(const Polynomial& poly, const Eigen::VectorXd& x);

/// Second derivatives from the symbolic expansion; exactly symmetric.
Eigen::MatrixXd hessian(const Polynomial& poly, const Eigen::VectorXd& x);

Polynomial to_numeric(const RationalPolynomial& poly);

/// Largest absolute coefficient (0 for the zero polynomial).
double max_abs_coefficient(const Polynomial& poly);

/// Drops terms whose magnitude is below rel_tol times the largest coefficient.
Polynomial pruned(const Polynomial& poly, double rel_tol);

}  // namespace orbit
