#include "orbit/polynomial.hpp"

#include <cmath>

namespace orbit {

double evaluate(const Polynomial& poly, std::span<const double> x) {
  double acc = 0.0;
  for (const auto& t : poly.terms()) {
    double prod = t.coeff;
    for (auto v : t.mono.span()) prod *= x[v];
    acc += prod;
  }
  return acc;
}

void accumulate_gradient(const Polynomial& poly, std::span<const double> x, double scale,
                         std::span<double> grad) {
  for (const auto& t : poly.terms()) {
    const auto vars = t.mono.span();
    const std::size_t d = vars.size();
    for (std::size_t i = 0; i < d; ++i) {
      if (i > 0 && vars[i] == vars[i - 1]) continue;
      std::size_t mult = 1;
      while (i + mult < d && vars[i + mult] == vars[i]) ++mult;
      double prod = scale * t.coeff * static_cast<double>(mult);
      bool skipped = false;
      for (std::size_t j = 0; j < d; ++j) {
        if (!skipped && vars[j] == vars[i]) {
          skipped = true;
          continue;
        }
        prod *= x[vars[j]];
      }
      grad[vars[i]] += prod;
    }
  }
}

Eigen::VectorXd gradient(const Polynomial& poly, const Eigen::VectorXd& x) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  accumulate_gradient(poly, {x.data(), static_cast<std::size_t>(x.size())}, 1.0,
                      {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

Eigen::MatrixXd hessian(const Polynomial& poly, const Eigen::VectorXd& x) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (const auto& t : poly.terms()) {
    const auto vars = t.mono.span();
    const std::size_t d = vars.size();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        double prod = t.coeff;
        for (std::size_t k = 0; k < d; ++k) {
          if (k != i && k != j) prod *= x[vars[k]];
        }
        H(vars[i], vars[j]) += prod;
        H(vars[j], vars[i]) += prod;
      }
    }
  }
  return H;
}

Polynomial to_numeric(const RationalPolynomial& poly) {
  std::vector<Term<double>> terms;
  terms.reserve(poly.size());
  for (const auto& t : poly.terms()) {
    terms.push_back({t.mono, boost::rational_cast<double>(t.coeff)});
  }
  return Polynomial::from_terms(std::move(terms));
}

double max_abs_coefficient(const Polynomial& poly) {
  double m = 0.0;
  for (const auto& t : poly.terms()) m = std::max(m, std::abs(t.coeff));
  return m;
}

Polynomial pruned(const Polynomial& poly, double rel_tol) {
  const double cut = rel_tol * max_abs_coefficient(poly);
  std::vector<Term<double>> keep;
  for (const auto& t : poly.terms()) {
    if (std::abs(t.coeff) > cut) keep.push_back(t);
  }
  return Polynomial::from_terms(std::move(keep));
}

}  // namespace orbit
