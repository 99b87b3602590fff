#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbit/invariants.hpp"
#include "orbit/moment_tensor.hpp"
#include "orbit/polynomial.hpp"
#include "orbit/problem.hpp"
#include "orbit/rng.hpp"

namespace orbit {

struct RecoveryResult {
  std::vector<Signal> candidates;
  /// Max over the used invariants of |f(candidate) - target|.
  double residual = 0.0;
  std::string method;
  std::string gauge_note;
  bool success = true;
  int iterations = 0;
  /// Mixture weights of the candidate (K > 1 least squares only).
  std::vector<double> weights;
};

struct OrbitDistance {
  double value = 0.0;
  /// True for so3, where the minimum over the group is searched numerically.
  bool upper_bound = false;
  GroupElement best;
};

/// min over g of ||a - g.b||. Finite groups enumerate (at most 10^6 elements); so3 uses a
/// 3000-point covering, coordinate descent and a Gauss-Newton polish.
OrbitDistance orbit_distance_detail(const ProblemSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double orbit_distance(const ProblemSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Mixture distance: min over component matchings of the largest per-component orbit distance.
double signal_distance(const ProblemSpec& spec, const Signal& a, const Signal& b);

/// Rank-r symmetric decomposition T = sum_i a_i^{(x)3} from two random contractions.
/// Throws SolverError on eigenvalue collisions or rank deficiency.
std::vector<Eigen::VectorXd> jennrich_components(const MomentTensor& t3, int rank, Rng& rng);

/// Decomposition of T3 = sum_i a_i^{(x)3} for the regular cyclic representation.
/// Throws SolverError on eigenvalue collisions or rank deficiency.
RecoveryResult jennrich_recover(const MomentTensor& t3, const ProblemSpec& spec, Rng& rng);

/// I2(s1,s2,l) with s1 <= s2 and I3 keyed by the sorted slot triple ((s,l),(s,l),(s,l)).
struct So3InvariantTables {
  int shells = 0;
  int frequencies = 0;
  std::map<std::array<int, 3>, double> i2;
  std::map<std::array<int, 6>, double> i3;

  [[nodiscard]] double i2_at(int s1, int s2, int l) const;
  /// Canonical-order value; zero when the triple is absent.
  [[nodiscard]] double i3_at(std::array<int, 6> key) const;
};

So3InvariantTables so3_tables_from_signal(const ProblemSpec& spec, const Eigen::VectorXd& theta);
So3InvariantTables so3_tables_from_values(const InvariantBasis& degree2, const Eigen::VectorXd& values2,
                                          const InvariantBasis& degree3, const Eigen::VectorXd& values3,
                                          int shells, int frequencies);

/// P2(s1,s2,m) keyed with s1 <= s2, m = 0..F.
using DegreeTwoTable = std::map<std::array<int, 3>, double>;
using ExactDegreeTwoTable = std::map<std::array<int, 3>, Rational>;

/// Coefficient c(l, m) with P2(m) = sum_l c(l, m) I2(l).
double projection_coefficient(int l, int m);
/// 4 pi c(l, m) as an exact rational (F <= 8).
Rational scaled_projection_coefficient(int l, int m);

DegreeTwoTable project_degree2(const DegreeTwoTable& i2, int shells, int frequencies);
DegreeTwoTable unproject_degree2(const DegreeTwoTable& p2, int shells, int frequencies);
/// Exact versions on tables scaled by 4 pi (P2 side) so all coefficients are rational.
ExactDegreeTwoTable project_degree2_exact(const ExactDegreeTwoTable& i2, int shells, int frequencies);
ExactDegreeTwoTable unproject_degree2_exact(const ExactDegreeTwoTable& p2_scaled, int shells, int frequencies);

/// Number of I3 equations that are linear in one shell's frequency-l block.
int frequency_march_equations(int shells, int l);

/// Unprojected so3 recovery from I2/I3 tables, frequency by frequency. Requires S >= 3.
RecoveryResult frequency_march(const So3InvariantTables& tables, Rng& rng);

struct LsqOptions {
  int starts = 20;
  int max_evaluations = 4000;
  /// Success when the residual is below tolerance * max(1, max|target|).
  double tolerance = 1e-8;
  int threads = 1;
};

/// Multi-start Levenberg-Marquardt on sum_j (f_j(x) - t_j)^2. With K > 1 the weights are
/// free variables with an extra sum-to-one residual. Best start wins (lowest residual, then index).
RecoveryResult lsq_recover(const InvariantBasis& basis, const Eigen::VectorXd& targets, const ProblemSpec& spec,
                           const std::optional<Signal>& init, Rng& rng, const LsqOptions& options = {});

/// Homogeneous solver chosen by spec: Jennrich (cyclic regular), frequency marching
/// (unprojected so3, S >= 3), least squares otherwise. `moments[d-1]` is the order-d tensor.
RecoveryResult recover_from_moments(const std::vector<MomentTensor>& moments, const ProblemSpec& spec, Rng& rng,
                                    const LsqOptions& options = {});

struct DemixOptions {
  LsqOptions lsq;
  /// Skip the Hessian identifiability check.
  bool assume_identifiable = false;
};

struct DemixResult {
  std::vector<RecoveryResult> components;
  std::vector<double> weights;
  double residual = 0.0;
  RecoveryResult mixed;
};

/// Fits (w_k, theta_k) to the mixed invariants, then reruns the homogeneous solver on each
/// component's moments. Weights are renormalized to sum to one.
DemixResult demix_then_recover(const std::vector<MomentTensor>& moments, const ProblemSpec& spec, Rng& rng,
                               const DemixOptions& options = {});

}  // namespace orbit
