#include <gtest/gtest.h>

#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <cmath>
#include <numbers>

#include "orbit/so3.hpp"

namespace so3 = orbit::so3;
using orbit::Quaternion;
using orbit::Rng;
using cd = std::complex<double>;

namespace {

cd ylm(int l, int m, double polar, double azimuth) {
  return boost::math::spherical_harmonic(l, m, polar, azimuth);
}

Eigen::Vector3d to_sphere(const Eigen::Vector3d& r, double& polar, double& azimuth) {
  polar = std::acos(std::clamp(r.z() / r.norm(), -1.0, 1.0));
  azimuth = std::atan2(r.y(), r.x());
  return r;
}

// H_{la}(r) = sum_k B(k, a) Y_{lk}(r)
cd hlm(int l, int a, double polar, double azimuth) {
  const auto B = so3::basis_change(l).complex_from_h;
  cd acc = 0.0;
  for (int k = -l; k <= l; ++k) acc += B(k + l, a + l) * ylm(l, k, polar, azimuth);
  return acc;
}

Quaternion random_rotation(Rng& rng) { return so3::haar_quaternion(rng); }

}  // namespace

TEST(ClebschGordan, SingletCoupling) {
  EXPECT_NEAR(so3::clebsch_gordan(1, 1, 1, -1, 0, 0), 1.0 / std::sqrt(3.0), 1e-14);
  for (int l = 0; l <= 6; ++l) {
    for (int m = -l; m <= l; ++m) {
      const double expected = ((l + m) % 2 == 0 ? 1.0 : -1.0) / std::sqrt(2.0 * l + 1.0);
      EXPECT_NEAR(so3::clebsch_gordan(l, m, l, -m, 0, 0), expected, 1e-13);
    }
  }
}

TEST(ClebschGordan, SelectionRules) {
  EXPECT_EQ(so3::clebsch_gordan(1, 1, 1, 0, 2, 0), 0.0);
  EXPECT_EQ(so3::clebsch_gordan(1, 0, 1, 0, 3, 0), 0.0);
  EXPECT_EQ(so3::clebsch_gordan(2, 1, 1, 0, 0, 1), 0.0);
}

TEST(ClebschGordan, StretchedState) {
  for (int l = 0; l <= 20; ++l) EXPECT_NEAR(so3::clebsch_gordan(l, l, l, l, 2 * l, 2 * l), 1.0, 1e-12);
}

TEST(ClebschGordan, Orthogonality) {
  for (int l1 = 0; l1 <= 5; ++l1) {
    for (int l2 = 0; l2 <= 5; ++l2) {
      for (int L = std::abs(l1 - l2); L <= l1 + l2; ++L) {
        for (int L2 = std::abs(l1 - l2); L2 <= l1 + l2; ++L2) {
          for (int M = -std::min(L, L2); M <= std::min(L, L2); ++M) {
            double acc = 0.0;
            for (int m1 = -l1; m1 <= l1; ++m1) {
              const int m2 = M - m1;
              if (std::abs(m2) > l2) continue;
              acc += so3::clebsch_gordan(l1, m1, l2, m2, L, M) * so3::clebsch_gordan(l1, m1, l2, m2, L2, M);
            }
            EXPECT_NEAR(acc, L == L2 ? 1.0 : 0.0, 1e-10);
          }
        }
      }
    }
  }
}

TEST(ClebschGordan, LargeFrequencyOrthogonality) {
  const int l1 = 40, l2 = 30, M = 3;
  double acc = 0.0;
  for (int m1 = -l1; m1 <= l1; ++m1) {
    const int m2 = M - m1;
    if (std::abs(m2) > l2) continue;
    const double c = so3::clebsch_gordan(l1, m1, l2, m2, 50, M);
    acc += c * c;
  }
  EXPECT_NEAR(acc, 1.0, 1e-9);
}

TEST(Legendre, ValuesAtZero) {
  EXPECT_EQ(so3::legendre_p0(1, 0), 0.0);
  EXPECT_NEAR(so3::legendre_p0(2, 0), -0.5, 1e-15);
  EXPECT_NEAR(so3::legendre_p0(2, 2), 3.0, 1e-14);
  EXPECT_NEAR(so3::legendre_p0(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(so3::legendre_p0(4, 0), 3.0 / 8.0, 1e-15);
  EXPECT_EQ(so3::legendre_p0(3, 2), 0.0);
}

TEST(Legendre, MatchesBoostWithoutPhase) {
  for (int l = 0; l <= 12; ++l) {
    for (int m = 0; m <= l; ++m) {
      const double boost_value = boost::math::legendre_p(l, m, 0.0) * ((m % 2) ? -1.0 : 1.0);
      EXPECT_NEAR(so3::legendre_p0(l, m), boost_value, 1e-9 * std::max(1.0, std::abs(boost_value)));
    }
  }
}

TEST(Wigner, IdentityRotation) {
  for (int l = 0; l <= 6; ++l) {
    const auto D = so3::wigner_d(l, Quaternion{});
    EXPECT_LT((D - Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).norm(), 1e-12);
  }
}

TEST(Wigner, ZRotationIsDiagonal) {
  const double alpha = 0.7;
  const auto q = Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), alpha);
  const auto D1 = so3::wigner_d(1, q);
  EXPECT_NEAR(std::abs(D1(0, 0) - std::exp(cd(0, alpha))), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(D1(1, 1) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(D1(2, 2) - std::exp(cd(0, -alpha))), 0.0, 1e-12);
  for (int l = 1; l <= 8; ++l) {
    const auto D = so3::wigner_d(l, q);
    for (int i = 0; i < 2 * l + 1; ++i) {
      for (int j = 0; j < 2 * l + 1; ++j) {
        const cd expected = i == j ? std::exp(cd(0, -(i - l) * alpha)) : cd(0, 0);
        EXPECT_LT(std::abs(D(i, j) - expected), 1e-10);
      }
    }
  }
}

TEST(Wigner, UnitaryAndHomomorphism) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g1 = random_rotation(rng);
    const auto g2 = random_rotation(rng);
    const auto A = so3::wigner_d_all(12, g1);
    const auto B = so3::wigner_d_all(12, g2);
    const auto C = so3::wigner_d_all(12, g1 * g2);
    for (int l = 0; l <= 12; ++l) {
      const auto I = Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1);
      EXPECT_LT((A[l].adjoint() * A[l] - I).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((A[l] * B[l] - C[l]).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Wigner, HighFrequencyStaysUnitary) {
  Rng rng(6);
  const auto D = so3::wigner_d(so3::kMaxFrequency, random_rotation(rng));
  const auto I = Eigen::MatrixXcd::Identity(D.rows(), D.cols());
  EXPECT_LT((D.adjoint() * D - I).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Wigner, ProductRule) {
  Rng rng(8);
  const auto g = random_rotation(rng);
  const int l1 = 2, l2 = 3;
  const auto D = so3::wigner_d_all(l1 + l2, g);
  for (int m = -l1; m <= l1; ++m) {
    for (int k = -l1; k <= l1; ++k) {
      for (int mp = -l2; mp <= l2; ++mp) {
        for (int kp = -l2; kp <= l2; ++kp) {
          const cd lhs = D[l1](m + l1, k + l1) * D[l2](mp + l2, kp + l2);
          cd rhs = 0.0;
          for (int L = std::abs(l1 - l2); L <= l1 + l2; ++L) {
            if (std::abs(m + mp) > L || std::abs(k + kp) > L) continue;
            rhs += so3::clebsch_gordan(l1, m, l2, mp, L, m + mp) * so3::clebsch_gordan(l1, k, l2, kp, L, k + kp) *
                   D[L](m + mp + L, k + kp + L);
          }
          EXPECT_LT(std::abs(lhs - rhs), 1e-8);
        }
      }
    }
  }
}

TEST(Wigner, SchurOrthogonalityMonteCarlo) {
  Rng rng(10);
  const int l = 1, n = 100000;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(9, 9);
  for (int t = 0; t < n; ++t) {
    const auto D = so3::wigner_d(l, random_rotation(rng));
    for (int a = 0; a < 9; ++a) {
      for (int b = 0; b < 9; ++b) acc(a, b) += std::conj(D(a / 3, a % 3)) * D(b / 3, b % 3);
    }
  }
  acc /= n;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) EXPECT_LT(std::abs(acc(a, b) - (a == b ? 1.0 / 3.0 : 0.0)), 5e-3);
  }
}

TEST(HaarQuaternion, AngleDensityMeanCosine) {
  Rng rng(12);
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto q = so3::haar_quaternion(rng);
    ASSERT_NEAR(q.norm(), 1.0, 1e-12);
    acc += std::cos(q.angle());
  }
  EXPECT_NEAR(acc / n, -0.5, 0.01);
}

TEST(BasisChange, UnitaryAndInvertible) {
  for (int l = 0; l <= 10; ++l) {
    const auto bc = so3::basis_change(l);
    const auto I = Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1);
    EXPECT_LT((bc.complex_from_h.adjoint() * bc.complex_from_h - I).norm(), 1e-12);
    EXPECT_LT((bc.complex_from_s.adjoint() * bc.complex_from_s - I).norm(), 1e-12);
    EXPECT_LT((bc.complex_from_h.adjoint() * (bc.complex_from_h * I) - I).norm(), 1e-12);
  }
}

TEST(BasisChange, RealCoefficientsSatisfyConjugationSymmetry) {
  Rng rng(13);
  for (int l = 1; l <= 6; ++l) {
    Eigen::VectorXd theta(2 * l + 1);
    for (auto& v : theta) v = rng.normal();
    const Eigen::VectorXcd xs = so3::basis_change(l).complex_from_s * theta.cast<cd>();
    const Eigen::VectorXcd xh = so3::basis_change(l).complex_from_h * theta.cast<cd>();
    for (int m = -l; m <= l; ++m) {
      const double sign_s = (m % 2 == 0) ? 1.0 : -1.0;
      const double sign_h = ((l + m) % 2 == 0) ? 1.0 : -1.0;
      EXPECT_LT(std::abs(std::conj(xs[m + l]) - sign_s * xs[-m + l]), 1e-12);
      EXPECT_LT(std::abs(std::conj(xh[m + l]) - sign_h * xh[-m + l]), 1e-12);
    }
  }
}

TEST(BasisChange, HarmonicsAreRealUpToPhase) {
  Rng rng(14);
  for (int l = 1; l <= 5; ++l) {
    const auto A = so3::basis_change(l).complex_from_s;
    const cd phase = std::pow(cd(0, -1), l);
    for (int a = -l; a <= l; ++a) {
      for (int t = 0; t < 5; ++t) {
        const double polar = std::numbers::pi * rng.uniform();
        const double azimuth = 2 * std::numbers::pi * rng.uniform();
        cd s = 0.0;
        for (int k = -l; k <= l; ++k) s += A(k + l, a + l) * ylm(l, k, polar, azimuth);
        EXPECT_LT(std::abs(s.imag()), 1e-12);
        EXPECT_LT(std::abs((phase * hlm(l, a, polar, azimuth)).imag()), 1e-12);
      }
    }
  }
}

TEST(Equator, ComplexCoefficientMatchesHarmonicOnEquator) {
  for (int l = 1; l <= 6; ++l) {
    for (int m = -l; m <= l; ++m) {
      for (double azimuth : {0.0, 0.4, 2.1}) {
        const cd value = ylm(l, m, std::numbers::pi / 2, azimuth);
        const cd expected = so3::equator_coefficient_complex(l, m) * std::exp(cd(0, m * azimuth));
        EXPECT_LT(std::abs(value - expected), 1e-12);
      }
    }
  }
}

TEST(Equator, RealCoefficientMatchesRealHarmonicOnEquator) {
  const int F = 6;
  const auto C = so3::circle_complex_from_h(F);
  for (int l = 1; l <= F; ++l) {
    for (int a = -l; a <= l; ++a) {
      for (double azimuth : {0.0, 0.4, 2.1, 5.0}) {
        cd h = 0.0;
        for (int m = -F; m <= F; ++m) h += C(m + F, a + F) * std::exp(cd(0, m * azimuth));
        const cd value = hlm(l, a, std::numbers::pi / 2, azimuth);
        EXPECT_LT(std::abs(value - so3::equator_coefficient(l, a) * h), 1e-12) << l << ' ' << a;
      }
    }
  }
}

TEST(Equator, OddParityVanishes) {
  EXPECT_EQ(so3::equator_coefficient(1, 0), 0.0);
  EXPECT_EQ(so3::equator_coefficient(2, 1), 0.0);
  EXPECT_NE(so3::equator_coefficient(2, 2), 0.0);
}

TEST(RealAction, IdentityOrthogonalDeterminant) {
  Rng rng(15);
  for (int l = 1; l <= 8; ++l) {
    EXPECT_LT((so3::real_action_block(l, Quaternion{}) - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1)).norm(),
              1e-12);
    const auto R = so3::real_action_block(l, random_rotation(rng));
    EXPECT_LT((R.transpose() * R - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1)).norm(), 1e-10);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-10);
  }
}

TEST(RealAction, RotatesSampledFunction) {
  Rng rng(16);
  for (int l = 1; l <= 4; ++l) {
    Eigen::VectorXd theta(2 * l + 1);
    for (auto& v : theta) v = rng.normal();
    const auto q = random_rotation(rng);
    const Eigen::VectorXd rotated = so3::real_action_block(l, q) * theta;
    const Eigen::Matrix3d Q = q.rotation_matrix();
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 12; ++j) {
        const double polar = std::numbers::pi * (i + 0.5) / 6;
        const double azimuth = 2 * std::numbers::pi * j / 12;
        const Eigen::Vector3d r(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                                std::cos(polar));
        double pp = 0, pa = 0;
        to_sphere(Q.transpose() * r, pp, pa);
        double lhs = 0, rhs = 0;
        for (int a = -l; a <= l; ++a) {
          lhs += rotated[a + l] * hlm(l, a, polar, azimuth).real();
          rhs += theta[a + l] * hlm(l, a, pp, pa).real();
        }
        EXPECT_NEAR(lhs, rhs, 1e-6);
      }
    }
  }
}
