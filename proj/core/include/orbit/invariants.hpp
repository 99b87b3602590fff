#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbit/moment_tensor.hpp"
#include "orbit/polynomial.hpp"
#include "orbit/problem.hpp"

namespace orbit {

enum class InvariantKind {
  FiniteMoment,  // Reynolds image of a moment entry
  I2,
  I3,
  P2,
  P3,
  Lifted,  // heterogeneous sum over components
};

struct InvariantPolynomial {
  std::string label;
  int degree = 0;
  InvariantKind kind = InvariantKind::FiniteMoment;
  /// Structured key: multi-index for finite groups, (s1,s2,l) for I2, (s1,l1,s2,l2,s3,l3)
  /// for I3, (s1,s2,m) for P2, (s1,m1,s2,m2,s3,m3) for P3. Shells are zero-based.
  std::vector<int> key;
  /// Explicit real polynomial. Empty for members defined through atom combinations
  /// until InvariantBasis::materialize is called.
  Polynomial poly;
  /// Exact coefficients (finite groups only).
  std::optional<RationalPolynomial> exact;
};

/// Coefficient of one observed moment entry in a member's defining combination.
struct MomentFunctionalTerm {
  std::vector<int> index;  // sorted observed multi-index
  std::complex<double> coeff;
};

/// Spanning set for invariants of bounded degree. Each member is a linear
/// combination of atom polynomials (identity combination for direct bases).
class InvariantBasis {
 public:
  int num_vars = 0;
  /// Heterogeneous layout: K blocks of `block_vars` then K weight variables.
  int components = 1;
  int block_vars = 0;

  std::vector<InvariantPolynomial> members;
  std::vector<Polynomial> atoms;
  std::vector<std::vector<std::pair<int, double>>> combinations;
  std::vector<std::vector<MomentFunctionalTerm>> functionals;

  [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
  [[nodiscard]] bool empty() const noexcept { return members.empty(); }
  [[nodiscard]] bool has_exact() const;
  [[nodiscard]] std::vector<std::string> labels() const;
  [[nodiscard]] int max_degree() const;

  /// Adds a member that equals a single new atom.
  void add_direct(InvariantPolynomial member, std::vector<MomentFunctionalTerm> functional = {});

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  [[nodiscard]] Polynomial materialize(std::size_t i) const;
  /// Sum_i coeffs[i] * member_i as one explicit polynomial.
  [[nodiscard]] Polynomial combined(const Eigen::VectorXd& coeffs) const;
  [[nodiscard]] InvariantBasis subset(const std::vector<std::size_t>& which) const;
  /// Concatenation of two bases over the same variables.
  [[nodiscard]] InvariantBasis merged(const InvariantBasis& other) const;
  /// Fills `poly` on every member.
  void materialize_all();
};

/// Exact group average of a monomial (finite groups).
InvariantPolynomial reynolds(const ProblemSpec& spec, const Monomial& monomial);

/// Exact group average of a polynomial (finite groups).
RationalPolynomial reynolds(const ProblemSpec& spec, const RationalPolynomial& poly);

/// Spanning set for the degree-d invariants built from observable moments, d in {1,2,3}.
/// Heterogeneous specs get the lifted sums over components.
InvariantBasis invariant_basis(const ProblemSpec& spec, int degree);

/// Union of invariant_basis(spec, d) for d = 1..max_degree.
InvariantBasis invariant_basis_up_to(const ProblemSpec& spec, int max_degree);

/// Lifts a homogeneous basis to K components: f -> sum_k w_k f(x^(k)).
InvariantBasis lift_heterogeneous(const InvariantBasis& base, int K);

/// Order-d moment tensor of the observations, d in {1,2,3}.
MomentTensor exact_moment(const ProblemSpec& spec, const Signal& theta, int degree);

/// Invariant values at a signal; heterogeneous bases take the flattened
/// (components, weights) vector produced by flatten_signal.
Eigen::VectorXd evaluate_basis(const InvariantBasis& basis, const Eigen::VectorXd& x);

/// Contracts each member's defining functional against exact or estimated moments.
/// `moments[d-1]` holds the order-d tensor.
Eigen::VectorXd contract_functionals(const InvariantBasis& basis,
                                     const std::vector<MomentTensor>& moments);

/// Complex harmonic coefficients x[s][l] (l = 1..F) of one so3 component.
using So3ComplexBlocks = std::vector<std::vector<Eigen::VectorXcd>>;
So3ComplexBlocks so3_complex_blocks(const ProblemSpec& spec, const Eigen::VectorXd& theta);

/// Value of I2(s1, s2, l) from complex coefficients (zero-based shells).
std::complex<double> so3_i2_value(const So3ComplexBlocks& x, int s1, int s2, int l);

/// Value of the I3 contraction for slots (s1,l1),(s2,l2),(s3,l3) in the given order.
std::complex<double> so3_i3_value(const So3ComplexBlocks& x, const std::array<int, 6>& key);

/// Concatenated components followed by the weights when K > 1.
Eigen::VectorXd flatten_signal(const ProblemSpec& spec, const Signal& theta);
Signal unflatten_signal(const ProblemSpec& spec, const Eigen::VectorXd& x);

}  // namespace orbit
