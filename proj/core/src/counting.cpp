#include "orbit/counting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "orbit/errors.hpp"

namespace orbit {

namespace {

using boost::multiprecision::cpp_int;

// partitions of n with multiplicity n!/z_lambda
void partitions(int n, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  for (int k = std::min(n, max_part); k >= 1; --k) {
    cur.push_back(k);
    partitions(n - k, k, cur, out);
    cur.pop_back();
  }
}

cpp_int factorial(int n) {
  cpp_int f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

cpp_int class_size(const std::vector<int>& lambda, int n) {
  std::map<int, int> mult;
  for (int k : lambda) ++mult[k];
  cpp_int z = 1;
  for (const auto& [k, c] : mult) {
    for (int i = 0; i < c; ++i) z *= k;
    z *= factorial(c);
  }
  return factorial(n) / z;
}

std::vector<cpp_int> series_of_cycles(const std::vector<int>& lengths, int d_max) {
  std::vector<cpp_int> s(static_cast<std::size_t>(d_max) + 1, 0);
  s[0] = 1;
  for (int len : lengths) {
    // multiply by 1 / (1 - t^len)
    for (int d = len; d <= d_max; ++d) s[static_cast<std::size_t>(d)] += s[static_cast<std::size_t>(d - len)];
  }
  return s;
}

}  // namespace

HilbertSeries molien_series_finite(const ProblemSpec& spec, int d_max) {
  if (!spec.is_finite()) throw PreconditionError("molien series requires a finite group");
  if (d_max < 0) throw SpecError("d_max must be nonnegative");
  const int p = spec.p;
  HilbertSeries out;
  std::map<std::vector<int>, cpp_int> classes;
  cpp_int order = 0;
  if (spec.family == GroupFamily::Cyclic) {
    for (int r = 0; r < p; ++r) {
      const int g = std::gcd(r, p);
      classes[std::vector<int>(static_cast<std::size_t>(g), p / g)] += 1;
    }
    order = p;
  } else {
    std::vector<std::vector<int>> parts;
    std::vector<int> cur;
    partitions(p, p, cur, parts);
    for (auto& lambda : parts) {
      std::sort(lambda.begin(), lambda.end());
      classes[lambda] += class_size(lambda, p);
    }
    order = factorial(p);
  }
  std::vector<cpp_int> total(static_cast<std::size_t>(d_max) + 1, 0);
  for (const auto& [lengths, count] : classes) {
    const auto s = series_of_cycles(lengths, d_max);
    for (std::size_t d = 0; d < s.size(); ++d) total[d] += count * s[d];
    out.classes.push_back({count.convert_to<std::uint64_t>(), lengths});
    out.pole_order = std::max(out.pole_order, static_cast<int>(lengths.size()));
  }
  for (auto& c : total) {
    if (c % order != 0) throw std::logic_error("molien average is not an integer");
    out.coefficients.push_back(cpp_int(c / order).convert_to<std::uint64_t>());
  }
  out.group_order = order > cpp_int(std::numeric_limits<std::uint64_t>::max())
                        ? 0
                        : order.convert_to<std::uint64_t>();
  return out;
}

int so3_invariant_dim(const std::vector<int>& frequencies, int degree) {
  if (degree < 0 || degree > 6) throw SpecError("so3_invariant_dim supports degree <= 6");
  for (int l : frequencies) {
    if (l < 0) throw SpecError("negative frequency");
  }
  if (degree == 0) return 1;
  auto character = [&](double phi) {
    double acc = 0.0;
    for (int l : frequencies) {
      acc += 1.0;
      for (int k = 1; k <= l; ++k) acc += 2.0 * std::cos(k * phi);
    }
    return acc;
  };
  // character of Sym^d via Newton's identities on power sums chi(k phi)
  auto sym_character = [&](double phi) {
    std::array<double, 7> h{};
    h[0] = 1.0;
    for (int n = 1; n <= degree; ++n) {
      double acc = 0.0;
      for (int i = 1; i <= n; ++i) acc += character(i * phi) * h[static_cast<std::size_t>(n - i)];
      h[static_cast<std::size_t>(n)] = acc / n;
    }
    return h[static_cast<std::size_t>(degree)];
  };
  auto integrand = [&](double phi) { return (1.0 - std::cos(phi)) * sym_character(phi) / std::numbers::pi; };
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::numbers::pi, 15, 1e-12, &error);
  const double rounded = std::round(value);
  if (std::abs(value - rounded) + error >= 0.4) throw InconclusiveError("quadrature could not resolve the dimension");
  return static_cast<int>(rounded);
}

int trdeg_ring(const ProblemSpec& spec) {
  spec.validate();
  const int K = spec.heterogeneity;
  int base = 0;
  if (spec.is_finite()) {
    base = spec.p;
  } else if (spec.symmetry) {
    const int L = *spec.symmetry;
    int fixed = 0;
    for (int l = 1; l <= spec.frequencies; ++l) {
      for (int m = -l; m <= l; ++m) fixed += (m % L == 0);
    }
    fixed *= spec.shells;
    base = spec.frequencies >= L ? fixed - 1 : fixed;
  } else if (spec.frequencies >= 2) {
    base = spec.shells * (spec.frequencies * spec.frequencies + 2 * spec.frequencies) - 3;
  } else {
    base = spec.shells == 1 ? 1 : 3 * spec.shells - 3;
  }
  return K * base + K - 1;
}

HetMraCount count_het_mra(int p, int K) {
  if (p < 1 || K < 1) throw SpecError("count_het_mra requires p, K >= 1");
  HetMraCount c;
  c.p = p;
  c.K = K;
  const std::int64_t t = static_cast<std::int64_t>(p - 1) * (p - 2);
  c.distinct = p + 2 + p / 2 + (t + 5) / 6;
  c.needed = static_cast<std::int64_t>(K) * p + K - 1;
  c.feasible = c.distinct >= c.needed;
  return c;
}

std::int64_t cryo_triple_classes(int S, int F) {
  if (S < 1 || F < 0) throw SpecError("cryo_triple_classes requires S >= 1, F >= 0");
  using Slot = std::pair<int, int>;
  std::vector<Slot> labels;
  for (int s = 0; s < S; ++s) {
    for (int m = -F; m <= F; ++m) labels.emplace_back(s, m);
  }
  std::int64_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i; j < labels.size(); ++j) {
      for (std::size_t k = j; k < labels.size(); ++k) {
        if (labels[i].second + labels[j].second + labels[k].second != 0) continue;
        std::array<Slot, 3> neg{Slot{labels[i].first, -labels[i].second}, Slot{labels[j].first, -labels[j].second},
                                Slot{labels[k].first, -labels[k].second}};
        std::sort(neg.begin(), neg.end());
        const std::array<Slot, 3> t{labels[i], labels[j], labels[k]};
        if (neg < t) continue;
        ++count;
      }
    }
  }
  return count;
}

std::int64_t cryo_relations(int S) {
  const std::int64_t s = S;
  return 2 * s + 4 * s * (s - 1) + s * (s - 1) * (s - 2);
}

CryoCount count_cryo(int S, int F, int K) {
  if (S < 1 || F < 2 || K < 1) throw SpecError("count_cryo requires S >= 1, F >= 2, K >= 1");
  CryoCount c;
  c.S = S;
  c.F = F;
  c.K = K;
  c.dim_u2 = static_cast<std::int64_t>(S) * (S + 1) * F / 2;
  c.classes = cryo_triple_classes(S, F);
  c.relations = cryo_relations(S);
  c.dim_u3 = c.classes - c.relations;
  c.trdeg = trdeg_ring(ProblemSpec::so3(S, F).with_heterogeneity(K));
  c.feasible = c.dim_u2 + c.dim_u3 >= c.trdeg;
  return c;
}

}  // namespace orbit
