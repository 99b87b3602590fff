#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "orbit/rng.hpp"

namespace orbit {

/// Unit quaternion w + xi + yj + zk representing a rotation in SO(3).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);
  /// Exponential map of a rotation vector (axis times angle).
  static Quaternion from_rotation_vector(const Eigen::Vector3d& omega);

  [[nodiscard]] Quaternion operator*(const Quaternion& rhs) const noexcept;
  [[nodiscard]] Quaternion conjugate() const noexcept { return {w, -x, -y, -z}; }
  [[nodiscard]] double norm() const noexcept;
  [[nodiscard]] Quaternion normalized() const;
  [[nodiscard]] Eigen::Matrix3d rotation_matrix() const noexcept;
  /// Rotation angle in [0, pi].
  [[nodiscard]] double angle() const noexcept;
};

namespace so3 {

inline constexpr int kMaxFrequency = 64;

/// <l1 m1 l2 m2 | l m>; zero outside the selection rules.
double clebsch_gordan(int l1, int m1, int l2, int m2, int l, int m);

/// Associated Legendre value P_l^m(0) without the Condon-Shortley phase, 0 <= m <= l.
double legendre_p0(int l, int m);

/// N_{lm} = sqrt((2l+1)(l-m)! / (4 pi (l+m)!)), any |m| <= l.
double sh_normalization(int l, int m);

/// Wigner D^l(q) in the complex harmonic basis, rows and columns ordered m = -l..l.
/// Coefficient vectors transform as x -> D x.
Eigen::MatrixXcd wigner_d(int l, const Quaternion& q);

/// D^0 .. D^lmax for one rotation.
std::vector<Eigen::MatrixXcd> wigner_d_all(int lmax, const Quaternion& q);

/// Action of q on the real H-basis coefficients of frequency l (real orthogonal).
Eigen::MatrixXd real_action_block(int l, const Quaternion& q);

/// Blocks for l = 0..lmax.
std::vector<Eigen::MatrixXd> real_action_blocks(int lmax, const Quaternion& q);

/// Unitary basis changes for one frequency. Complex coefficients are obtained
/// from real ones by x_Y = complex_from_h * theta_H (resp. complex_from_s).
struct BasisChange {
  int l = 0;
  Eigen::MatrixXcd complex_from_h;
  Eigen::MatrixXcd complex_from_s;
};

BasisChange basis_change(int l);

/// Same structure on the circle: b-coefficients from h-coefficients, orders -F..F.
Eigen::MatrixXcd circle_complex_from_h(int max_order);

/// Coefficient c with equator(H_{lm}) = c * h_m.
double equator_coefficient(int l, int m);

/// Coefficient of b_m in the equator restriction of Y_{lm}.
double equator_coefficient_complex(int l, int m);

Quaternion haar_quaternion(Rng& rng);

}  // namespace so3
}  // namespace orbit
