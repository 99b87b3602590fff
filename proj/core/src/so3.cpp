#include "orbit/so3.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "orbit/errors.hpp"

namespace orbit {

namespace {

using cd = std::complex<double>;

constexpr int kLogFactorialSize = 4 * so3::kMaxFrequency + 8;

const std::array<long double, kLogFactorialSize>& log_factorials() {
  static const auto table = [] {
    std::array<long double, kLogFactorialSize> t{};
    for (int n = 1; n < kLogFactorialSize; ++n) t[n] = t[n - 1] + std::log(static_cast<long double>(n));
    return t;
  }();
  return table;
}

long double lf(int n) { return log_factorials().at(static_cast<std::size_t>(n)); }

int sign_pow(int e) { return (e % 2 == 0) ? 1 : -1; }

void check_frequency(int l) {
  if (l < 0 || l > so3::kMaxFrequency) {
    throw SpecError("frequency out of supported range: " + std::to_string(l));
  }
}

// CG(L-1, M - m2; 1, m2 | L, M) for m2 in {-1,0,1}, indexed [L][M + L][m2 + 1].
const std::vector<std::vector<std::array<double, 3>>>& step_coupling() {
  static const auto table = [] {
    std::vector<std::vector<std::array<double, 3>>> t(so3::kMaxFrequency + 1);
    for (int L = 1; L <= so3::kMaxFrequency; ++L) {
      t[L].resize(2 * L + 1);
      for (int M = -L; M <= L; ++M) {
        for (int m2 = -1; m2 <= 1; ++m2) {
          const int m1 = M - m2;
          t[L][M + L][m2 + 1] =
              std::abs(m1) <= L - 1 ? so3::clebsch_gordan(L - 1, m1, 1, m2, L, M) : 0.0;
        }
      }
    }
    return t;
  }();
  return table;
}

Eigen::Matrix3cd wigner_d1(const Eigen::Matrix3d& R) {
  const double s = 1.0 / std::sqrt(2.0);
  // spherical unit vectors for m = -1, 0, 1
  std::array<Eigen::Vector3cd, 3> u;
  u[0] << cd(s, 0), cd(0, -s), cd(0, 0);
  u[1] << cd(0, 0), cd(0, 0), cd(1, 0);
  u[2] << cd(-s, 0), cd(0, -s), cd(0, 0);
  Eigen::Matrix3cd D;
  const Eigen::Matrix3cd Rc = R.cast<cd>();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) D(a, b) = u[a].dot(Rc * u[b]);
  }
  return D;
}

}  // namespace

Quaternion Quaternion::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return {};
  const double h = 0.5 * angle;
  const double s = std::sin(h) / n;
  return {std::cos(h), axis.x() * s, axis.y() * s, axis.z() * s};
}

Quaternion Quaternion::from_rotation_vector(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-300) return {};
  return from_axis_angle(omega, angle);
}

Quaternion Quaternion::operator*(const Quaternion& r) const noexcept {
  return {w * r.w - x * r.x - y * r.y - z * r.z, w * r.x + x * r.w + y * r.z - z * r.y,
          w * r.y - x * r.z + y * r.w + z * r.x, w * r.z + x * r.y - y * r.x + z * r.w};
}

double Quaternion::norm() const noexcept { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0) throw SpecError("zero quaternion cannot be normalized");
  return {w / n, x / n, y / n, z / n};
}

Eigen::Matrix3d Quaternion::rotation_matrix() const noexcept {
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),  //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

double Quaternion::angle() const noexcept {
  const double c = std::min(1.0, std::abs(w) / norm());
  return 2.0 * std::acos(c);
}

namespace so3 {

double clebsch_gordan(int l1, int m1, int l2, int m2, int l, int m) {
  if (m != m1 + m2) return 0.0;
  if (l1 < 0 || l2 < 0 || l < 0) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  if (l < std::abs(l1 - l2) || l > l1 + l2) return 0.0;
  if (l1 + l2 + l + 1 >= kLogFactorialSize) throw SpecError("Clebsch-Gordan degree too large");

  const long double log_pre =
      0.5L * (std::log(2.0L * l + 1.0L) + lf(l + l1 - l2) + lf(l - l1 + l2) + lf(l1 + l2 - l) -
             lf(l1 + l2 + l + 1) + lf(l + m) + lf(l - m) + lf(l1 - m1) + lf(l1 + m1) +
             lf(l2 - m2) + lf(l2 + m2));
  const int k_lo = std::max({0, l2 - l - m1, l1 - l + m2});
  const int k_hi = std::min({l1 + l2 - l, l1 - m1, l2 + m2});
  long double sum = 0.0L;
  long double carry = 0.0L;
  for (int k = k_lo; k <= k_hi; ++k) {
    const long double log_den = lf(k) + lf(l1 + l2 - l - k) + lf(l1 - m1 - k) + lf(l2 + m2 - k) +
                           lf(l - l2 + m1 + k) + lf(l - l1 - m2 + k);
    const long double term = sign_pow(k) * std::exp(log_pre - log_den);
    const long double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return static_cast<double>(sum + carry);
}

double legendre_p0(int l, int m) {
  if (m < 0 || m > l) throw SpecError("legendre_p0 requires 0 <= m <= l");
  if ((l + m) % 2 != 0) return 0.0;
  const int h = (l + m) / 2;
  const long double log_abs = lf(l) - lf(h) - lf(l - h) + lf(l + m) - l * std::log(2.0L) - lf(l);
  return sign_pow((l - m) / 2) * static_cast<double>(std::exp(log_abs));
}

double sh_normalization(int l, int m) {
  if (std::abs(m) > l) throw SpecError("sh_normalization requires |m| <= l");
  return std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * std::exp(lf(l - m) - lf(l + m)));
}

std::vector<Eigen::MatrixXcd> wigner_d_all(int lmax, const Quaternion& q) {
  check_frequency(lmax);
  std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(lmax) + 1);
  out[0] = Eigen::MatrixXcd::Ones(1, 1);
  if (lmax == 0) return out;
  const Eigen::Matrix3cd d1 = wigner_d1(q.normalized().rotation_matrix());
  out[1] = d1;
  const auto& cg = step_coupling();
  for (int L = 2; L <= lmax; ++L) {
    const Eigen::MatrixXcd& prev = out[L - 1];
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2 * L + 1, 2 * L + 1);
    for (int M = -L; M <= L; ++M) {
      for (int K = -L; K <= L; ++K) {
        cd acc = 0.0;
        for (int a = -1; a <= 1; ++a) {
          const int m1 = M - a;
          if (std::abs(m1) > L - 1) continue;
          const double ca = cg[L][M + L][a + 1];
          for (int b = -1; b <= 1; ++b) {
            const int k1 = K - b;
            if (std::abs(k1) > L - 1) continue;
            acc += ca * cg[L][K + L][b + 1] * prev(m1 + L - 1, k1 + L - 1) * d1(a + 1, b + 1);
          }
        }
        D(M + L, K + L) = acc;
      }
    }
    out[L] = std::move(D);
  }
  return out;
}

Eigen::MatrixXcd wigner_d(int l, const Quaternion& q) { return wigner_d_all(l, q)[l]; }

BasisChange basis_change(int l) {
  check_frequency(l);
  const int n = 2 * l + 1;
  const double s = 1.0 / std::sqrt(2.0);
  const cd i(0.0, 1.0);
  BasisChange bc;
  bc.l = l;
  bc.complex_from_h = Eigen::MatrixXcd::Zero(n, n);
  bc.complex_from_s = Eigen::MatrixXcd::Zero(n, n);
  auto H = [&](int row, int col) -> cd& { return bc.complex_from_h(row + l, col + l); };
  auto S = [&](int row, int col) -> cd& { return bc.complex_from_s(row + l, col + l); };
  H(0, 0) = std::pow(i, l);
  S(0, 0) = 1.0;
  for (int a = 1; a <= l; ++a) {
    H(a, a) = s;
    H(-a, a) = sign_pow(l + a) * s;
    H(a, -a) = i * s;
    H(-a, -a) = -i * static_cast<double>(sign_pow(l + a)) * s;
    S(a, a) = sign_pow(a) * s;
    S(-a, a) = s;
    S(a, -a) = -i * static_cast<double>(sign_pow(a)) * s;
    S(-a, -a) = i * s;
  }
  return bc;
}

Eigen::MatrixXcd circle_complex_from_h(int max_order) {
  const int F = max_order;
  const double s = 1.0 / std::sqrt(2.0);
  const cd i(0.0, 1.0);
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2 * F + 1, 2 * F + 1);
  C(F, F) = 1.0;
  for (int a = 1; a <= F; ++a) {
    C(F + a, F + a) = s;
    C(F - a, F + a) = sign_pow(a) * s;
    C(F + a, F - a) = i * s;
    C(F - a, F - a) = -i * static_cast<double>(sign_pow(a)) * s;
  }
  return C;
}

double equator_coefficient_complex(int l, int m) {
  const int a = std::abs(m);
  const double base = sh_normalization(l, a) * legendre_p0(l, a);
  return m >= 0 ? sign_pow(m) * base : base;
}

double equator_coefficient(int l, int m) {
  const int a = std::abs(m);
  const double base = sh_normalization(l, a) * legendre_p0(l, a);
  if (m == 0) return (l % 2 == 0) ? sign_pow(l / 2) * base : 0.0;
  return sign_pow(a) * base;
}

Eigen::MatrixXd real_action_block(int l, const Quaternion& q) {
  return real_action_blocks(l, q)[l];
}

std::vector<Eigen::MatrixXd> real_action_blocks(int lmax, const Quaternion& q) {
  const auto D = wigner_d_all(lmax, q);
  std::vector<Eigen::MatrixXd> out(D.size());
  for (int l = 0; l <= lmax; ++l) {
    const Eigen::MatrixXcd B = basis_change(l).complex_from_h;
    out[l] = (B.adjoint() * D[l] * B).real();
  }
  return out;
}

Quaternion haar_quaternion(Rng& rng) {
  for (;;) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    if (q.norm() > 1e-12) return q.normalized();
  }
}

}  // namespace so3
}  // namespace orbit
