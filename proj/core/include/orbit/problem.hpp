#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbit/rng.hpp"
#include "orbit/so3.hpp"

namespace orbit {

enum class GroupFamily { Cyclic, Symmetric, SO3 };
enum class Projection { None, MraRing, Equator };

std::string to_string(GroupFamily family);
std::string to_string(Projection projection);
GroupFamily parse_group_family(const std::string& name);
Projection parse_projection(const std::string& name);

/// Full description of an orbit recovery experiment.
struct ProblemSpec {
  GroupFamily family = GroupFamily::Cyclic;
  int p = 1;      // cyclic / symmetric size
  int shells = 0;  // so3 only
  int frequencies = 0;  // so3 only
  Projection projection = Projection::None;
  int heterogeneity = 1;
  std::vector<double> weights{1.0};
  double sigma = 0.0;
  std::optional<int> symmetry;  // so3 cyclic-about-z order

  static ProblemSpec cyclic(int p);
  static ProblemSpec symmetric(int p);
  static ProblemSpec so3(int shells, int frequencies);

  /// Copy with K components and uniform weights.
  [[nodiscard]] ProblemSpec with_heterogeneity(int K) const;
  [[nodiscard]] ProblemSpec with_weights(std::vector<double> w) const;
  [[nodiscard]] ProblemSpec with_projection(Projection proj) const;
  [[nodiscard]] ProblemSpec with_sigma(double s) const;
  [[nodiscard]] ProblemSpec with_symmetry(int L) const;

  /// Throws SpecError when any invariant is violated.
  void validate() const;

  [[nodiscard]] bool is_finite() const noexcept { return family != GroupFamily::SO3; }
  [[nodiscard]] int ambient_dim() const noexcept;
  [[nodiscard]] int observed_dim() const noexcept;
  /// Order of a finite group; throws for so3 or on overflow.
  [[nodiscard]] std::uint64_t group_order() const;
  /// Homogeneous version of a heterogeneous spec (K = 1).
  [[nodiscard]] ProblemSpec base() const;
};

/// Offset of coefficient (s, l, m) inside an so3 component vector (zero-based shell).
inline int so3_index(int frequencies, int shell, int l, int m) noexcept {
  const int per_shell = frequencies * frequencies + 2 * frequencies;
  return shell * per_shell + (l * l - 1) + (m + l);
}

struct GroupElement {
  GroupFamily family = GroupFamily::Cyclic;
  int residue = 0;
  std::vector<int> permutation;  // image of index i
  Quaternion rotation;

  static GroupElement identity(const ProblemSpec& spec);
  /// Rotation angle for so3; 0 for finite groups.
  [[nodiscard]] double angle() const noexcept { return rotation.angle(); }
};

/// g * h, acting as "h first, then g".
GroupElement compose(const ProblemSpec& spec, const GroupElement& g, const GroupElement& h);
GroupElement inverse(const ProblemSpec& spec, const GroupElement& g);

/// All elements of a finite group, in a fixed order. Throws above `cap`.
std::vector<GroupElement> enumerate_group(const ProblemSpec& spec, std::uint64_t cap = 1'000'000);

struct Signal {
  std::vector<Eigen::VectorXd> components;

  Signal() = default;
  explicit Signal(std::vector<Eigen::VectorXd> comps) : components(std::move(comps)) {}
  explicit Signal(Eigen::VectorXd single) : components{std::move(single)} {}

  [[nodiscard]] int size() const noexcept { return static_cast<int>(components.size()); }
  const Eigen::VectorXd& operator[](int k) const { return components.at(static_cast<std::size_t>(k)); }
};

/// Standard-normal components of ambient dimension (restricted when the ProblemSpec asks).
Signal random_signal(const ProblemSpec& spec, Rng& rng, double scale = 1.0);

struct SampleSet {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> observations;  // n x q
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<Signal> truth;

  [[nodiscard]] std::int64_t n() const noexcept { return observations.rows(); }
  [[nodiscard]] int q() const noexcept { return static_cast<int>(observations.cols()); }
};

GroupElement haar_sample(const ProblemSpec& spec, Rng& rng);

/// g . theta (orthogonal; for so3 block-diagonal over shells and frequencies).
Eigen::VectorXd act(const ProblemSpec& spec, const GroupElement& g, const Eigen::VectorXd& theta);

/// Linear observation map as a q x dim(V) matrix (identity without projection).
Eigen::MatrixXd projection_matrix(const ProblemSpec& spec);

Eigen::VectorXd project(const ProblemSpec& spec, const Eigen::VectorXd& v);

/// Deterministic per-index sample generator; sample i depends only on (seed, i).
class SampleGenerator {
 public:
  SampleGenerator(ProblemSpec spec, Signal theta, std::uint64_t seed);

  void sample(std::int64_t index, Eigen::Ref<Eigen::VectorXd> out) const;
  [[nodiscard]] int observed_dim() const noexcept { return static_cast<int>(proj_.rows()); }
  [[nodiscard]] const ProblemSpec& spec() const noexcept { return spec_; }

 private:
  ProblemSpec spec_;
  Signal theta_;
  std::uint64_t seed_;
  Eigen::MatrixXd proj_;
  std::vector<double> cumulative_;
};

/// n draws y_i = Pi(g_i . theta_{k_i}) + sigma * xi_i. Sample i uses stream i of `seed`,
/// so the output does not depend on `threads`.
SampleSet simulate(const ProblemSpec& spec, const Signal& theta, std::int64_t n, std::uint64_t seed,
                   int threads = 1);

/// Zeroes coefficients with m not divisible by the symmetry order.
Signal restrict_symmetric(const ProblemSpec& spec, const Signal& theta);

}  // namespace orbit
