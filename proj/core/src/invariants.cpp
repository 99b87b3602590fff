#include "orbit/invariants.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "orbit/errors.hpp"
#include "orbit/so3.hpp"

namespace orbit {

namespace {

using cd = std::complex<double>;
using ComplexTerms = std::vector<std::pair<Monomial, cd>>;

int sign_pow(int e) { return (e % 2 == 0) ? 1 : -1; }

void check_degree(int degree) {
  if (degree < 1 || degree > 3) throw PreconditionError("invariant degree must be 1, 2 or 3");
}

std::string join_ints(const std::vector<int>& v, int offset_every_other_from = -1) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    int value = v[i];
    if (offset_every_other_from >= 0 && static_cast<int>(i) % 2 == offset_every_other_from) value += 1;
    os << value;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// finite groups

std::vector<int> image_map(const ProblemSpec& spec, const GroupElement& g) {
  // variable j of g.x is variable image[j] of x
  const int n = spec.p;
  std::vector<int> image(static_cast<std::size_t>(n));
  if (spec.family == GroupFamily::Cyclic) {
    for (int j = 0; j < n; ++j) image[static_cast<std::size_t>(j)] = ((j - g.residue) % n + n) % n;
  } else {
    for (int i = 0; i < n; ++i) {
      image[static_cast<std::size_t>(g.permutation[static_cast<std::size_t>(i)])] = i;
    }
  }
  return image;
}

RationalPolynomial observed_coordinate_product(const ProblemSpec& spec, const std::vector<int>& beta) {
  // product over the observed coordinates, each a linear form in x
  RationalPolynomial acc = RationalPolynomial::monomial(Monomial::one());
  for (int b : beta) {
    std::vector<Term<Rational>> lin;
    if (spec.projection == Projection::MraRing) {
      lin.push_back({Monomial::from_vars(std::array<int, 1>{b}), Rational(1)});
      lin.push_back({Monomial::from_vars(std::array<int, 1>{spec.p - 1 - b}), Rational(1)});
    } else {
      lin.push_back({Monomial::from_vars(std::array<int, 1>{b}), Rational(1)});
    }
    acc = acc * RationalPolynomial::from_terms(std::move(lin));
  }
  return acc;
}

std::vector<int> sorted_image(const std::vector<int>& beta, const std::vector<int>& image) {
  std::vector<int> out;
  out.reserve(beta.size());
  for (int b : beta) out.push_back(image[static_cast<std::size_t>(b)]);
  std::sort(out.begin(), out.end());
  return out;
}

InvariantBasis finite_basis(const ProblemSpec& spec, int degree) {
  const auto group = enumerate_group(spec);
  std::vector<std::vector<int>> images;
  images.reserve(group.size());
  for (const auto& g : group) images.push_back(image_map(spec, g));

  InvariantBasis basis;
  basis.num_vars = spec.ambient_dim();
  basis.block_vars = basis.num_vars;
  const int q = spec.observed_dim();
  std::vector<RationalPolynomial> seen;
  for (const auto& beta : sorted_multi_indices(q, degree)) {
    RationalPolynomial poly;
    if (spec.projection == Projection::None) {
      bool minimal = true;
      for (const auto& img : images) {
        if (sorted_image(beta, img) < beta) {
          minimal = false;
          break;
        }
      }
      if (!minimal) continue;
      poly = reynolds(spec, Monomial::from_vars(beta)).exact.value();
    } else {
      poly = reynolds(spec, observed_coordinate_product(spec, beta));
      if (poly.is_zero()) continue;
      if (std::find(seen.begin(), seen.end(), poly) != seen.end()) continue;
      seen.push_back(poly);
    }
    InvariantPolynomial member;
    member.degree = degree;
    member.kind = InvariantKind::FiniteMoment;
    member.key = beta;
    member.label = "T" + std::to_string(degree) + "[" + join_ints(beta) + "]";
    member.poly = to_numeric(poly);
    member.exact = std::move(poly);
    basis.add_direct(std::move(member), {MomentFunctionalTerm{beta, cd(1.0, 0.0)}});
  }
  return basis;
}

// ---------------------------------------------------------------------------
// so3

struct So3Tables {
  int S = 0;
  int F = 0;
  // nonzero entries of complex_from_h per frequency: rows[l][k+l] = {(a, value)}
  std::vector<std::vector<std::vector<std::pair<int, cd>>>> rows;
  // columns: cols[l][a+l] = {(k, value)}
  std::vector<std::vector<std::vector<std::pair<int, cd>>>> cols;
  Eigen::MatrixXcd circle;  // b from h, orders -F..F

  So3Tables(int shells, int freqs) : S(shells), F(freqs) {
    rows.resize(static_cast<std::size_t>(F) + 1);
    cols.resize(static_cast<std::size_t>(F) + 1);
    for (int l = 1; l <= F; ++l) {
      const Eigen::MatrixXcd B = so3::basis_change(l).complex_from_h;
      rows[l].resize(2 * l + 1);
      cols[l].resize(2 * l + 1);
      for (int k = -l; k <= l; ++k) {
        for (int a = -l; a <= l; ++a) {
          const cd v = B(k + l, a + l);
          if (std::abs(v) > 0.0) {
            rows[l][k + l].emplace_back(a, v);
            cols[l][a + l].emplace_back(k, v);
          }
        }
      }
    }
    circle = so3::circle_complex_from_h(F);
  }

  [[nodiscard]] int var(int s, int l, int a) const { return so3_index(F, s, l, a); }
  [[nodiscard]] int obs(int s, int m) const { return s * (2 * F + 1) + m + F; }
};

bool triangle(int l1, int l2, int l3) { return std::abs(l2 - l3) <= l1 && l1 <= l2 + l3; }

using Slot = std::pair<int, int>;  // (shell, frequency) or (shell, order)
using Triple = std::array<Slot, 3>;

Triple canonical(Triple t) {
  std::sort(t.begin(), t.end());
  return t;
}

double i3_weight(int l1, int l2, int l3, int k1, int k2, int k3) {
  if (k1 + k2 + k3 != 0) return 0.0;
  return sign_pow(std::abs(k1)) / (2.0 * l1 + 1.0) * so3::clebsch_gordan(l2, k2, l3, k3, l1, -k1);
}

Polynomial realify(ComplexTerms terms, const std::string& what) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ComplexTerms merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().first == t.first) {
      merged.back().second += t.second;
    } else {
      merged.push_back(t);
    }
  }
  double maxabs = 0.0;
  for (const auto& t : merged) maxabs = std::max(maxabs, std::abs(t.second));
  std::vector<Term<double>> out;
  for (const auto& t : merged) {
    if (std::abs(t.second.imag()) > 1e-9 * maxabs) {
      throw std::logic_error(what + ": imaginary part does not vanish");
    }
    if (std::abs(t.second.real()) > 1e-12 * maxabs) out.push_back({t.first, t.second.real()});
  }
  return Polynomial::from_terms(std::move(out));
}

Polynomial i2_polynomial(const So3Tables& tb, int s1, int s2, int l) {
  ComplexTerms terms;
  for (int k = -l; k <= l; ++k) {
    const double w = sign_pow(std::abs(k)) / (2.0 * l + 1.0);
    for (const auto& [a, va] : tb.rows[l][k + l]) {
      for (const auto& [b, vb] : tb.rows[l][-k + l]) {
        terms.emplace_back(Monomial::from_vars(std::array<int, 2>{tb.var(s1, l, a), tb.var(s2, l, b)}),
                           w * va * vb);
      }
    }
  }
  return realify(std::move(terms), "I2");
}

Polynomial i3_polynomial(const So3Tables& tb, const Triple& t) {
  const auto [s1, l1] = t[0];
  const auto [s2, l2] = t[1];
  const auto [s3, l3] = t[2];
  ComplexTerms terms;
  for (int k2 = -l2; k2 <= l2; ++k2) {
    for (int k3 = -l3; k3 <= l3; ++k3) {
      const int k1 = -k2 - k3;
      if (std::abs(k1) > l1) continue;
      const double w = i3_weight(l1, l2, l3, k1, k2, k3);
      if (w == 0.0) continue;
      for (const auto& [a, va] : tb.rows[l1][k1 + l1]) {
        for (const auto& [b, vb] : tb.rows[l2][k2 + l2]) {
          for (const auto& [c, vc] : tb.rows[l3][k3 + l3]) {
            terms.emplace_back(Monomial::from_vars(std::array<int, 3>{
                                   tb.var(s1, l1, a), tb.var(s2, l2, b), tb.var(s3, l3, c)}),
                               w * va * vb * vc);
          }
        }
      }
    }
  }
  return realify(std::move(terms), "I3");
}

// complex coefficient vectors x_Y per (shell, frequency)
using ComplexBlocks = std::vector<std::vector<Eigen::VectorXcd>>;

ComplexBlocks complex_blocks(const So3Tables& tb, const Eigen::VectorXd& theta) {
  ComplexBlocks x(static_cast<std::size_t>(tb.S), std::vector<Eigen::VectorXcd>(static_cast<std::size_t>(tb.F) + 1));
  for (int s = 0; s < tb.S; ++s) {
    for (int l = 1; l <= tb.F; ++l) {
      const Eigen::MatrixXcd B = so3::basis_change(l).complex_from_h;
      x[s][l] = B * theta.segment(tb.var(s, l, -l), 2 * l + 1).cast<cd>();
    }
  }
  return x;
}

cd j2_value(const ComplexBlocks& x, int s1, int s2, int l) {
  cd acc = 0.0;
  for (int k = -l; k <= l; ++k) acc += static_cast<double>(sign_pow(std::abs(k))) * x[s1][l][k + l] * x[s2][l][-k + l];
  return acc / (2.0 * l + 1.0);
}

cd j3_value(const ComplexBlocks& x, const Triple& t) {
  const auto [s1, l1] = t[0];
  const auto [s2, l2] = t[1];
  const auto [s3, l3] = t[2];
  cd acc = 0.0;
  for (int k2 = -l2; k2 <= l2; ++k2) {
    for (int k3 = -l3; k3 <= l3; ++k3) {
      const int k1 = -k2 - k3;
      if (std::abs(k1) > l1) continue;
      const double w = i3_weight(l1, l2, l3, k1, k2, k3);
      if (w != 0.0) acc += w * x[s1][l1][k1 + l1] * x[s2][l2][k2 + l2] * x[s3][l3][k3 + l3];
    }
  }
  return acc;
}

bool known_zero_i3(const Triple& t) {
  if (t[0] == t[1] && t[1] == t[2]) return t[0].second % 2 == 1;
  for (int i = 0; i < 3; ++i) {
    const Slot& a = t[static_cast<std::size_t>(i)];
    const Slot& b = t[static_cast<std::size_t>((i + 1) % 3)];
    const Slot& c = t[static_cast<std::size_t>((i + 2) % 3)];
    if (a == b && a != c) return c.second % 2 == 1;
  }
  return false;
}

std::vector<MomentFunctionalTerm> collapse(std::map<std::vector<int>, cd> acc) {
  std::vector<MomentFunctionalTerm> out;
  double maxabs = 0.0;
  for (const auto& [k, v] : acc) maxabs = std::max(maxabs, std::abs(v));
  for (auto& [k, v] : acc) {
    if (std::abs(v) > 1e-14 * maxabs) out.push_back({k, v});
  }
  return out;
}

/// coefficient map on sorted observed indices for an entry of T^Y (unprojected)
std::vector<MomentFunctionalTerm> unprojected_entry(const So3Tables& tb,
                                                    const std::vector<std::array<int, 3>>& slots,
                                                    cd scale) {
  // slots: (s, l, k); T^Y = B^{(x)d} T^H
  std::map<std::vector<int>, cd> acc;
  const std::size_t d = slots.size();
  std::vector<std::size_t> pos(d, 0);
  std::vector<const std::vector<std::pair<int, cd>>*> lists(d);
  for (std::size_t i = 0; i < d; ++i) {
    lists[i] = &tb.rows[slots[i][1]][slots[i][2] + slots[i][1]];
  }
  for (;;) {
    cd c = scale;
    std::vector<int> idx(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto& [a, v] = (*lists[i])[pos[i]];
      c *= v;
      idx[i] = tb.var(slots[i][0], slots[i][1], a);
    }
    std::sort(idx.begin(), idx.end());
    acc[idx] += c;
    std::size_t i = 0;
    while (i < d && ++pos[i] == lists[i]->size()) pos[i++] = 0;
    if (i == d) break;
  }
  return collapse(std::move(acc));
}

std::vector<MomentFunctionalTerm> projected_entry(const So3Tables& tb,
                                                  const std::vector<std::array<int, 2>>& slots) {
  // slots: (s, m); T^b = C^{(x)d} T^h
  std::map<std::vector<int>, cd> acc;
  const std::size_t d = slots.size();
  std::vector<std::vector<std::pair<int, cd>>> lists(d);
  for (std::size_t i = 0; i < d; ++i) {
    const int m = slots[i][1];
    for (int a = -tb.F; a <= tb.F; ++a) {
      const cd v = tb.circle(m + tb.F, a + tb.F);
      if (std::abs(v) > 0.0) lists[i].emplace_back(a, v);
    }
  }
  std::vector<std::size_t> pos(d, 0);
  for (;;) {
    cd c = 1.0;
    std::vector<int> idx(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto& [a, v] = lists[i][pos[i]];
      c *= v;
      idx[i] = tb.obs(slots[i][0], a);
    }
    std::sort(idx.begin(), idx.end());
    acc[idx] += c;
    std::size_t i = 0;
    while (i < d && ++pos[i] == lists[i].size()) pos[i++] = 0;
    if (i == d) break;
  }
  return collapse(std::move(acc));
}

struct I3Atoms {
  std::map<Triple, int> atom_of;  // canonical triple -> atom index (absent if zero)
  std::vector<Triple> order;
};

std::vector<Slot> shell_frequency_slots(int S, int F) {
  std::vector<Slot> out;
  for (int s = 0; s < S; ++s) {
    for (int l = 1; l <= F; ++l) out.emplace_back(s, l);
  }
  return out;
}

void add_i2_members(const So3Tables& tb, InvariantBasis& basis) {
  for (int s1 = 0; s1 < tb.S; ++s1) {
    for (int s2 = s1; s2 < tb.S; ++s2) {
      for (int l = 1; l <= tb.F; ++l) {
        InvariantPolynomial m;
        m.degree = 2;
        m.kind = InvariantKind::I2;
        m.key = {s1, s2, l};
        m.label = "I2(" + std::to_string(s1 + 1) + "," + std::to_string(s2 + 1) + "," + std::to_string(l) + ")";
        m.poly = i2_polynomial(tb, s1, s2, l);
        auto functional = unprojected_entry(tb, {{s1, l, 0}, {s2, l, 0}}, cd(1.0, 0.0));
        basis.add_direct(std::move(m), std::move(functional));
      }
    }
  }
}

std::vector<Triple> canonical_i3_triples(int S, int F) {
  const auto slots = shell_frequency_slots(S, F);
  std::vector<Triple> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (std::size_t j = i; j < slots.size(); ++j) {
      for (std::size_t k = j; k < slots.size(); ++k) {
        const Triple t{slots[i], slots[j], slots[k]};
        if (!triangle(t[0].second, t[1].second, t[2].second)) continue;
        if (known_zero_i3(t)) continue;
        out.push_back(t);
      }
    }
  }
  return out;
}

I3Atoms add_i3_members(const So3Tables& tb, InvariantBasis& basis, bool as_members) {
  I3Atoms atoms;
  for (const Triple& t : canonical_i3_triples(tb.S, tb.F)) {
    Polynomial poly = i3_polynomial(tb, t);
    if (poly.is_zero()) continue;
    InvariantPolynomial m;
    m.degree = 3;
    m.kind = InvariantKind::I3;
    m.key = {t[0].first, t[0].second, t[1].first, t[1].second, t[2].first, t[2].second};
    m.label = "I3(" + join_ints(m.key, 0) + ")";
    if (as_members) {
      // entry of T^Y with the largest coupling coefficient
      const int l1 = t[0].second, l2 = t[1].second, l3 = t[2].second;
      int best2 = 0, best3 = 0;
      double best = 0.0;
      for (int k2 = -l2; k2 <= l2; ++k2) {
        for (int k3 = -l3; k3 <= l3; ++k3) {
          const int k1 = -k2 - k3;
          if (std::abs(k1) > l1) continue;
          const double c = std::abs(so3::clebsch_gordan(l2, k2, l3, k3, l1, -k1));
          if (c > best + 1e-12) {
            best = c;
            best2 = k2;
            best3 = k3;
          }
        }
      }
      const int k1 = -best2 - best3;
      const double cg = so3::clebsch_gordan(l2, best2, l3, best3, l1, -k1);
      auto functional = unprojected_entry(
          tb, {{t[0].first, l1, k1}, {t[1].first, l2, best2}, {t[2].first, l3, best3}},
          cd(sign_pow(std::abs(k1)) / cg, 0.0));
      atoms.atom_of[t] = static_cast<int>(basis.atoms.size());
      m.poly = std::move(poly);
      basis.add_direct(std::move(m), std::move(functional));
    } else {
      atoms.atom_of[t] = static_cast<int>(basis.atoms.size());
      basis.atoms.push_back(std::move(poly));
    }
    atoms.order.push_back(t);
  }
  return atoms;
}

ComplexBlocks probe_point(const So3Tables& tb) {
  Rng rng(0x1d3a5eedULL, 7);
  ComplexBlocks x(static_cast<std::size_t>(tb.S), std::vector<Eigen::VectorXcd>(static_cast<std::size_t>(tb.F) + 1));
  for (int s = 0; s < tb.S; ++s) {
    for (int l = 1; l <= tb.F; ++l) {
      x[s][l].resize(2 * l + 1);
      for (int k = 0; k < 2 * l + 1; ++k) x[s][l][k] = cd(rng.normal(), rng.normal());
    }
  }
  return x;
}

InvariantBasis so3_projected_degree2(const So3Tables& tb) {
  InvariantBasis basis;
  basis.num_vars = tb.S * (tb.F * tb.F + 2 * tb.F);
  basis.block_vars = basis.num_vars;
  // I2 atoms
  std::map<std::array<int, 3>, int> atom_of;
  for (int s1 = 0; s1 < tb.S; ++s1) {
    for (int s2 = s1; s2 < tb.S; ++s2) {
      for (int l = 1; l <= tb.F; ++l) {
        atom_of[{s1, s2, l}] = static_cast<int>(basis.atoms.size());
        basis.atoms.push_back(i2_polynomial(tb, s1, s2, l));
      }
    }
  }
  for (int s1 = 0; s1 < tb.S; ++s1) {
    for (int s2 = s1; s2 < tb.S; ++s2) {
      for (int m = 0; m <= tb.F; ++m) {
        std::vector<std::pair<int, double>> combo;
        for (int l = std::max(1, m); l <= tb.F; ++l) {
          const double c = sign_pow(m) * so3::equator_coefficient_complex(l, m) *
                           so3::equator_coefficient_complex(l, -m);
          if (std::abs(c) > 0.0) combo.emplace_back(atom_of.at({s1, s2, l}), c);
        }
        if (combo.empty()) continue;
        InvariantPolynomial mem;
        mem.degree = 2;
        mem.kind = InvariantKind::P2;
        mem.key = {s1, s2, m};
        mem.label = "P2(" + std::to_string(s1 + 1) + "," + std::to_string(s2 + 1) + "," + std::to_string(m) + ")";
        basis.members.push_back(std::move(mem));
        basis.combinations.push_back(std::move(combo));
        basis.functionals.push_back(projected_entry(tb, {{s1, m}, {s2, -m}}));
      }
    }
  }
  return basis;
}

std::vector<std::array<Slot, 3>> canonical_p3_classes(int S, int F) {
  std::vector<Slot> labels;
  for (int s = 0; s < S; ++s) {
    for (int m = -F; m <= F; ++m) labels.emplace_back(s, m);
  }
  std::vector<std::array<Slot, 3>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i; j < labels.size(); ++j) {
      for (std::size_t k = j; k < labels.size(); ++k) {
        const Triple t{labels[i], labels[j], labels[k]};
        if (t[0].second + t[1].second + t[2].second != 0) continue;
        Triple neg = t;
        for (auto& sl : neg) sl.second = -sl.second;
        neg = canonical(neg);
        if (neg < t) continue;
        out.push_back(t);
      }
    }
  }
  return out;
}

InvariantBasis so3_projected_degree3(const So3Tables& tb) {
  InvariantBasis basis;
  basis.num_vars = tb.S * (tb.F * tb.F + 2 * tb.F);
  basis.block_vars = basis.num_vars;
  const I3Atoms atoms = add_i3_members(tb, basis, false);
  const ComplexBlocks probe = probe_point(tb);
  std::map<Triple, cd> canonical_value;
  for (const auto& t : atoms.order) canonical_value[t] = j3_value(probe, t);
  std::map<Triple, double> ratio_cache;
  auto ratio = [&](const Triple& ordered) -> std::pair<int, double> {
    const Triple c = canonical(ordered);
    const auto it = atoms.atom_of.find(c);
    if (it == atoms.atom_of.end()) return {-1, 0.0};
    auto rc = ratio_cache.find(ordered);
    if (rc == ratio_cache.end()) {
      const cd r = j3_value(probe, ordered) / canonical_value.at(c);
      rc = ratio_cache.emplace(ordered, r.real()).first;
    }
    return {it->second, rc->second};
  };

  for (const auto& cls : canonical_p3_classes(tb.S, tb.F)) {
    const auto [s1, m1] = cls[0];
    const auto [s2, m2] = cls[1];
    const auto [s3, m3] = cls[2];
    std::map<int, double> combo;
    for (int l1 = std::max(1, std::abs(m1)); l1 <= tb.F; ++l1) {
      const double c1 = so3::equator_coefficient_complex(l1, m1);
      if (c1 == 0.0) continue;
      for (int l2 = std::max(1, std::abs(m2)); l2 <= tb.F; ++l2) {
        const double c2 = so3::equator_coefficient_complex(l2, m2);
        if (c2 == 0.0) continue;
        for (int l3 = std::max(1, std::abs(m3)); l3 <= tb.F; ++l3) {
          if (!triangle(l1, l2, l3)) continue;
          const double c3 = so3::equator_coefficient_complex(l3, m3);
          if (c3 == 0.0) continue;
          const double cg = so3::clebsch_gordan(l2, m2, l3, m3, l1, -m1);
          if (cg == 0.0) continue;
          const auto [atom, kappa] = ratio(Triple{Slot{s1, l1}, Slot{s2, l2}, Slot{s3, l3}});
          if (atom < 0) continue;
          combo[atom] += sign_pow(std::abs(m1)) * c1 * c2 * c3 * cg * kappa;
        }
      }
    }
    double maxabs = 0.0;
    for (const auto& [a, v] : combo) maxabs = std::max(maxabs, std::abs(v));
    std::vector<std::pair<int, double>> kept;
    for (const auto& [a, v] : combo) {
      if (std::abs(v) > 1e-12 * maxabs) kept.emplace_back(a, v);
    }
    if (kept.empty()) continue;
    InvariantPolynomial mem;
    mem.degree = 3;
    mem.kind = InvariantKind::P3;
    mem.key = {s1, m1, s2, m2, s3, m3};
    std::ostringstream label;
    label << "P3(" << s1 + 1 << ',' << m1 << ',' << s2 + 1 << ',' << m2 << ',' << s3 + 1 << ',' << m3 << ')';
    mem.label = label.str();
    basis.members.push_back(std::move(mem));
    basis.combinations.push_back(std::move(kept));
    basis.functionals.push_back(projected_entry(tb, {{s1, m1}, {s2, m2}, {s3, m3}}));
  }
  return basis;
}

InvariantBasis so3_basis(const ProblemSpec& spec, int degree) {
  const So3Tables tb(spec.shells, spec.frequencies);
  InvariantBasis basis;
  basis.num_vars = spec.ambient_dim();
  basis.block_vars = basis.num_vars;
  if (degree == 1) return basis;
  if (spec.projection == Projection::Equator) {
    return degree == 2 ? so3_projected_degree2(tb) : so3_projected_degree3(tb);
  }
  if (degree == 2) {
    add_i2_members(tb, basis);
  } else {
    add_i3_members(tb, basis, true);
  }
  return basis;
}

// ---------------------------------------------------------------------------
// exact moments

MomentTensor finite_moment(const ProblemSpec& spec, const Signal& theta, int degree) {
  const auto group = enumerate_group(spec);
  const Eigen::MatrixXd P = projection_matrix(spec);
  MomentTensor T(degree, spec.observed_dim());
  const auto& idx = T.multi_indices();
  auto& vals = T.values();
  const double inv_order = 1.0 / static_cast<double>(group.size());
  for (int k = 0; k < theta.size(); ++k) {
    const double w = spec.weights[static_cast<std::size_t>(k)] * inv_order;
    for (const auto& g : group) {
      const Eigen::VectorXd y = P * act(spec, g, theta[k]);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double prod = w;
        for (int v : idx[i]) prod *= y[v];
        vals[i] += prod;
      }
    }
  }
  return T;
}

MomentTensor so3_moment(const ProblemSpec& spec, const Signal& theta, int degree) {
  const So3Tables tb(spec.shells, spec.frequencies);
  const int F = tb.F;
  MomentTensor T(degree, spec.observed_dim());
  if (degree == 1) return T;
  const bool projected = spec.projection == Projection::Equator;
  auto& vals = T.values();
  const auto& idx = T.multi_indices();

  for (int comp = 0; comp < theta.size(); ++comp) {
    const double weight = spec.weights[static_cast<std::size_t>(comp)];
    const ComplexBlocks x = complex_blocks(tb, theta[comp]);
    std::map<Triple, cd> j3_cache;
    auto j3 = [&](const Triple& t) {
      auto it = j3_cache.find(t);
      if (it == j3_cache.end()) it = j3_cache.emplace(t, j3_value(x, t)).first;
      return it->second;
    };
    // T^Y entry for slots (s, l, k)
    auto ty2 = [&](int s1, int l1, int k1, int s2, int l2, int k2) -> cd {
      if (l1 != l2 || k1 + k2 != 0) return 0.0;
      return static_cast<double>(sign_pow(std::abs(k1))) * j2_value(x, s1, s2, l1);
    };
    auto ty3 = [&](int s1, int l1, int k1, int s2, int l2, int k2, int s3, int l3, int k3) -> cd {
      if (k1 + k2 + k3 != 0 || !triangle(l1, l2, l3)) return 0.0;
      const double cg = so3::clebsch_gordan(l2, k2, l3, k3, l1, -k1);
      if (cg == 0.0) return 0.0;
      return sign_pow(std::abs(k1)) * cg * j3(Triple{Slot{s1, l1}, Slot{s2, l2}, Slot{s3, l3}});
    };

    for (std::size_t e = 0; e < idx.size(); ++e) {
      const auto& I = idx[e];
      cd total = 0.0;
      if (!projected) {
        // T^H = (B^dagger)^{(x)d} T^Y
        std::array<int, 3> s{}, l{}, a{};
        for (int i = 0; i < degree; ++i) {
          int rem = I[static_cast<std::size_t>(i)];
          const int per = F * F + 2 * F;
          s[i] = rem / per;
          rem %= per;
          l[i] = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rem + 1)) + 1e-9));
          while (l[i] * l[i] - 1 > rem) --l[i];
          while ((l[i] + 1) * (l[i] + 1) - 1 <= rem) ++l[i];
          a[i] = rem - (l[i] * l[i] - 1) - l[i];
        }
        if (degree == 2) {
          if (l[0] != l[1]) continue;
          for (const auto& [k1, v1] : tb.cols[l[0]][a[0] + l[0]]) {
            for (const auto& [k2, v2] : tb.cols[l[1]][a[1] + l[1]]) {
              total += std::conj(v1) * std::conj(v2) * ty2(s[0], l[0], k1, s[1], l[1], k2);
            }
          }
        } else {
          if (!triangle(l[0], l[1], l[2])) continue;
          for (const auto& [k1, v1] : tb.cols[l[0]][a[0] + l[0]]) {
            for (const auto& [k2, v2] : tb.cols[l[1]][a[1] + l[1]]) {
              for (const auto& [k3, v3] : tb.cols[l[2]][a[2] + l[2]]) {
                total += std::conj(v1) * std::conj(v2) * std::conj(v3) *
                         ty3(s[0], l[0], k1, s[1], l[1], k2, s[2], l[2], k3);
              }
            }
          }
        }
      } else {
        // T^h = (C^dagger)^{(x)d} T^b, T^b = sum_l c c (c) T^Y
        std::array<int, 3> s{}, a{};
        for (int i = 0; i < degree; ++i) {
          s[i] = I[static_cast<std::size_t>(i)] / (2 * F + 1);
          a[i] = I[static_cast<std::size_t>(i)] % (2 * F + 1) - F;
        }
        auto circle_col = [&](int aa) {
          std::vector<std::pair<int, cd>> col;
          for (int m = -F; m <= F; ++m) {
            const cd v = tb.circle(m + F, aa + F);
            if (std::abs(v) > 0.0) col.emplace_back(m, v);
          }
          return col;
        };
        if (degree == 2) {
          for (const auto& [m1, v1] : circle_col(a[0])) {
            for (const auto& [m2, v2] : circle_col(a[1])) {
              if (m1 + m2 != 0) continue;
              cd tb_entry = 0.0;
              for (int ll = std::max(1, std::abs(m1)); ll <= F; ++ll) {
                const double c = so3::equator_coefficient_complex(ll, m1) *
                                 so3::equator_coefficient_complex(ll, m2);
                if (c != 0.0) tb_entry += c * ty2(s[0], ll, m1, s[1], ll, m2);
              }
              total += std::conj(v1) * std::conj(v2) * tb_entry;
            }
          }
        } else {
          for (const auto& [m1, v1] : circle_col(a[0])) {
            for (const auto& [m2, v2] : circle_col(a[1])) {
              for (const auto& [m3, v3] : circle_col(a[2])) {
                if (m1 + m2 + m3 != 0) continue;
                cd tb_entry = 0.0;
                for (int l1 = std::max(1, std::abs(m1)); l1 <= F; ++l1) {
                  const double c1 = so3::equator_coefficient_complex(l1, m1);
                  if (c1 == 0.0) continue;
                  for (int l2 = std::max(1, std::abs(m2)); l2 <= F; ++l2) {
                    const double c2 = so3::equator_coefficient_complex(l2, m2);
                    if (c2 == 0.0) continue;
                    for (int l3 = std::max(1, std::abs(m3)); l3 <= F; ++l3) {
                      const double c3 = so3::equator_coefficient_complex(l3, m3);
                      if (c3 == 0.0) continue;
                      tb_entry += c1 * c2 * c3 * ty3(s[0], l1, m1, s[1], l2, m2, s[2], l3, m3);
                    }
                  }
                }
                total += std::conj(v1) * std::conj(v2) * std::conj(v3) * tb_entry;
              }
            }
          }
        }
      }
      vals[e] += weight * total.real();
    }
  }
  return T;
}

}  // namespace

So3ComplexBlocks so3_complex_blocks(const ProblemSpec& spec, const Eigen::VectorXd& theta) {
  if (spec.family != GroupFamily::SO3) throw PreconditionError("so3 coefficients need an so3 spec");
  if (theta.size() != spec.ambient_dim()) throw SpecError("signal has wrong dimension");
  return complex_blocks(So3Tables(spec.shells, spec.frequencies), theta);
}

std::complex<double> so3_i2_value(const So3ComplexBlocks& x, int s1, int s2, int l) {
  return j2_value(x, s1, s2, l);
}

std::complex<double> so3_i3_value(const So3ComplexBlocks& x, const std::array<int, 6>& key) {
  if (!triangle(key[1], key[3], key[5])) return 0.0;
  return j3_value(x, Triple{Slot{key[0], key[1]}, Slot{key[2], key[3]}, Slot{key[4], key[5]}});
}

// ---------------------------------------------------------------------------
// InvariantBasis

bool InvariantBasis::has_exact() const {
  return !members.empty() &&
         std::all_of(members.begin(), members.end(), [](const auto& m) { return m.exact.has_value(); });
}

std::vector<std::string> InvariantBasis::labels() const {
  std::vector<std::string> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.label);
  return out;
}

int InvariantBasis::max_degree() const {
  int d = 0;
  for (const auto& m : members) d = std::max(d, m.degree);
  return d;
}

void InvariantBasis::add_direct(InvariantPolynomial member, std::vector<MomentFunctionalTerm> functional) {
  combinations.push_back({{static_cast<int>(atoms.size()), 1.0}});
  atoms.push_back(member.poly);
  members.push_back(std::move(member));
  functionals.push_back(std::move(functional));
}

Eigen::VectorXd InvariantBasis::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != num_vars) throw SpecError("evaluate: dimension mismatch");
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  std::vector<double> atom_values(atoms.size());
  for (std::size_t j = 0; j < atoms.size(); ++j) atom_values[j] = orbit::evaluate(atoms[j], xs);
  Eigen::VectorXd out(static_cast<Eigen::Index>(members.size()));
  for (std::size_t i = 0; i < members.size(); ++i) {
    double acc = 0.0;
    for (const auto& [a, c] : combinations[i]) acc += c * atom_values[static_cast<std::size_t>(a)];
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

Eigen::MatrixXd InvariantBasis::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != num_vars) throw SpecError("jacobian: dimension mismatch");
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> G =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
          static_cast<Eigen::Index>(atoms.size()), num_vars);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    accumulate_gradient(atoms[j], xs, 1.0,
                        {G.data() + j * static_cast<std::size_t>(num_vars), static_cast<std::size_t>(num_vars)});
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(members.size()), num_vars);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (const auto& [a, c] : combinations[i]) J.row(static_cast<Eigen::Index>(i)) += c * G.row(a);
  }
  return J;
}

Polynomial InvariantBasis::materialize(std::size_t i) const {
  const auto& combo = combinations.at(i);
  if (combo.size() == 1 && combo.front().second == 1.0) return atoms[static_cast<std::size_t>(combo.front().first)];
  std::vector<Term<double>> terms;
  for (const auto& [a, c] : combo) {
    for (const auto& t : atoms[static_cast<std::size_t>(a)].terms()) terms.push_back({t.mono, c * t.coeff});
  }
  return pruned(Polynomial::from_terms(std::move(terms)), 1e-14);
}

Polynomial InvariantBasis::combined(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != static_cast<Eigen::Index>(members.size())) throw SpecError("combined: size mismatch");
  std::vector<Term<double>> terms;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double w = coeffs[static_cast<Eigen::Index>(i)];
    if (w == 0.0) continue;
    for (const auto& [a, c] : combinations[i]) {
      for (const auto& t : atoms[static_cast<std::size_t>(a)].terms()) terms.push_back({t.mono, w * c * t.coeff});
    }
  }
  return Polynomial::from_terms(std::move(terms));
}

InvariantBasis InvariantBasis::subset(const std::vector<std::size_t>& which) const {
  InvariantBasis out;
  out.num_vars = num_vars;
  out.components = components;
  out.block_vars = block_vars;
  out.atoms = atoms;
  for (std::size_t i : which) {
    out.members.push_back(members.at(i));
    out.combinations.push_back(combinations.at(i));
    out.functionals.push_back(functionals.at(i));
  }
  return out;
}

InvariantBasis InvariantBasis::merged(const InvariantBasis& other) const {
  if (members.empty()) return other;
  if (other.members.empty()) return *this;
  if (other.num_vars != num_vars) throw SpecError("merged: variable count mismatch");
  InvariantBasis out = *this;
  const int offset = static_cast<int>(atoms.size());
  out.atoms.insert(out.atoms.end(), other.atoms.begin(), other.atoms.end());
  for (std::size_t i = 0; i < other.members.size(); ++i) {
    out.members.push_back(other.members[i]);
    auto combo = other.combinations[i];
    for (auto& [a, c] : combo) a += offset;
    out.combinations.push_back(std::move(combo));
    out.functionals.push_back(other.functionals[i]);
  }
  return out;
}

void InvariantBasis::materialize_all() {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].poly.is_zero()) members[i].poly = materialize(i);
  }
}

// ---------------------------------------------------------------------------

InvariantPolynomial reynolds(const ProblemSpec& spec, const Monomial& monomial) {
  if (!spec.is_finite()) throw PreconditionError("reynolds requires a finite group");
  const auto group = enumerate_group(spec);
  const Rational share(1, static_cast<long long>(group.size()));
  std::vector<Term<Rational>> terms;
  terms.reserve(group.size());
  for (const auto& g : group) {
    const auto image = image_map(spec, g);
    Monomial m;
    for (auto v : monomial.span()) {
      if (v >= static_cast<std::uint32_t>(spec.p)) throw SpecError("reynolds: variable out of range");
      m.push(static_cast<std::uint32_t>(image[v]));
    }
    terms.push_back({m, share});
  }
  InvariantPolynomial out;
  out.degree = monomial.degree;
  out.kind = InvariantKind::FiniteMoment;
  out.exact = RationalPolynomial::from_terms(std::move(terms));
  out.poly = to_numeric(*out.exact);
  std::ostringstream label;
  label << "R(";
  for (std::size_t i = 0; i < monomial.degree; ++i) label << (i ? "*" : "") << 'x' << monomial.vars[i] + 1;
  label << ')';
  out.label = label.str();
  for (auto v : monomial.span()) out.key.push_back(static_cast<int>(v));
  return out;
}

RationalPolynomial reynolds(const ProblemSpec& spec, const RationalPolynomial& poly) {
  if (!spec.is_finite()) throw PreconditionError("reynolds requires a finite group");
  const auto group = enumerate_group(spec);
  const Rational share(1, static_cast<long long>(group.size()));
  std::vector<Term<Rational>> terms;
  for (const auto& g : group) {
    const auto image = image_map(spec, g);
    for (const auto& t : poly.terms()) {
      Monomial m;
      for (auto v : t.mono.span()) m.push(static_cast<std::uint32_t>(image[v]));
      terms.push_back({m, t.coeff * share});
    }
  }
  return RationalPolynomial::from_terms(std::move(terms));
}

InvariantBasis lift_heterogeneous(const InvariantBasis& base, int K) {
  if (K < 1) throw SpecError("lift: K must be positive");
  if (base.components != 1) throw SpecError("lift: base basis must be homogeneous");
  const int p = base.num_vars;
  InvariantBasis out;
  out.num_vars = K * p + K;
  out.components = K;
  out.block_vars = p;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const Polynomial f = base.materialize(i);
    std::vector<Term<double>> terms;
    std::optional<RationalPolynomial> exact;
    std::vector<Term<Rational>> exact_terms;
    for (int k = 0; k < K; ++k) {
      const auto weight = Monomial::from_vars(std::array<int, 1>{K * p + k});
      for (const auto& t : f.terms()) {
        Monomial m = weight;
        for (auto v : t.mono.span()) m.push(static_cast<std::uint32_t>(k * p) + v);
        terms.push_back({m, t.coeff});
      }
      if (base.members[i].exact) {
        for (const auto& t : base.members[i].exact->terms()) {
          Monomial m = weight;
          for (auto v : t.mono.span()) m.push(static_cast<std::uint32_t>(k * p) + v);
          exact_terms.push_back({m, t.coeff});
        }
      }
    }
    InvariantPolynomial member = base.members[i];
    member.kind = InvariantKind::Lifted;
    member.label = "sum_k w_k " + base.members[i].label;
    member.degree = base.members[i].degree + 1;
    member.poly = Polynomial::from_terms(std::move(terms));
    if (base.members[i].exact) member.exact = RationalPolynomial::from_terms(std::move(exact_terms));
    out.add_direct(std::move(member), base.functionals[i]);
  }
  return out;
}

InvariantBasis invariant_basis(const ProblemSpec& spec, int degree) {
  spec.validate();
  check_degree(degree);
  const ProblemSpec base = spec.base();
  InvariantBasis basis = base.is_finite() ? finite_basis(base, degree) : so3_basis(base, degree);
  if (spec.heterogeneity > 1) return lift_heterogeneous(basis, spec.heterogeneity);
  return basis;
}

InvariantBasis invariant_basis_up_to(const ProblemSpec& spec, int max_degree) {
  check_degree(max_degree);
  InvariantBasis out;
  for (int d = 1; d <= max_degree; ++d) out = out.merged(invariant_basis(spec, d));
  if (out.members.empty()) {
    out.num_vars = spec.heterogeneity > 1 ? spec.heterogeneity * (spec.ambient_dim() + 1) : spec.ambient_dim();
    out.components = spec.heterogeneity;
    out.block_vars = spec.ambient_dim();
  }
  return out;
}

MomentTensor exact_moment(const ProblemSpec& spec, const Signal& theta, int degree) {
  spec.validate();
  check_degree(degree);
  if (theta.size() != spec.heterogeneity) throw SpecError("exact_moment: component count != K");
  for (const auto& c : theta.components) {
    if (c.size() != spec.ambient_dim()) throw SpecError("exact_moment: dimension mismatch");
  }
  MomentTensor T = spec.is_finite() ? finite_moment(spec, theta, degree) : so3_moment(spec, theta, degree);
  T.provenance = Provenance::Exact;
  return T;
}

Eigen::VectorXd evaluate_basis(const InvariantBasis& basis, const Eigen::VectorXd& x) {
  return basis.evaluate(x);
}

Eigen::VectorXd contract_functionals(const InvariantBasis& basis, const std::vector<MomentTensor>& moments) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const int d = static_cast<int>(basis.functionals[i].empty() ? 0 : basis.functionals[i].front().index.size());
    if (d < 1 || d > static_cast<int>(moments.size())) throw SpecError("contract: missing moment order");
    const MomentTensor& T = moments[static_cast<std::size_t>(d - 1)];
    cd acc = 0.0;
    for (const auto& term : basis.functionals[i]) acc += term.coeff * T.at(term.index);
    out[static_cast<Eigen::Index>(i)] = acc.real();
  }
  return out;
}

Eigen::VectorXd flatten_signal(const ProblemSpec& spec, const Signal& theta) {
  const int K = spec.heterogeneity;
  const int p = spec.ambient_dim();
  if (theta.size() != K) throw SpecError("flatten: component count != K");
  Eigen::VectorXd x(K == 1 ? p : K * p + K);
  for (int k = 0; k < K; ++k) x.segment(k * p, p) = theta[k];
  if (K > 1) {
    for (int k = 0; k < K; ++k) x[K * p + k] = spec.weights[static_cast<std::size_t>(k)];
  }
  return x;
}

Signal unflatten_signal(const ProblemSpec& spec, const Eigen::VectorXd& x) {
  const int K = spec.heterogeneity;
  const int p = spec.ambient_dim();
  std::vector<Eigen::VectorXd> comps;
  for (int k = 0; k < K; ++k) comps.emplace_back(x.segment(k * p, p));
  return Signal(std::move(comps));
}

}  // namespace orbit
