#include "platoonlab/dare.hpp"

#include "platoonlab/linalg.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace platoonlab;

namespace {

// Independent scalar oracle: iterate the Riccati map in plain arithmetic.
double scalar_dare_oracle(double a, double b, double q, double r) {
  double p = q;
  for (int i = 0; i < 200000; ++i) {
    const double next = a * p * a - (a * p * b) * (b * p * a) / (b * p * b + r) + q;
    if (std::abs(next - p) < 1e-15) return next;
    p = next;
  }
  return p;
}

}  // namespace

TEST(Dare, ZeroDynamicsGivesQExactly) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Ones(3, 1);
  const Eigen::MatrixXd q = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(1, 1);
  const DareResult res = dare(a, b, q, r);
  ASSERT_TRUE(res.converged);
  EXPECT_EQ((res.p - q).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dare, ScalarCaseMatchesFixedPointOracle) {
  const double expected = scalar_dare_oracle(0.5, 1.0, 1.0, 1.0);
  // The oracle converges to the positive root of p^2 - 0.25 p - 1 = 0.
  EXPECT_NEAR(expected, (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0, 1e-12);

  Eigen::MatrixXd a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 0.5;
  b << 1.0;
  q << 1.0;
  r << 1.0;
  const DareResult res = dare(a, b, q, r);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.p(0, 0), expected, 1e-8);
}

TEST(Dare, ResidualAndSymmetryOnRandomStableSystem) {
  testutil::Rng rng(5);
  Eigen::MatrixXd a = rng.matrix(6, 6);
  a *= 0.85 / spectral_radius(a);
  const Eigen::MatrixXd b = rng.matrix(6, 2);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(6, 6);
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(2, 2);
  const DareResult res = dare(a, b, q, r);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.residual, 1e-8);
  EXPECT_LE((res.p - res.p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  // P >= Q for this Q (value function dominates the one-step cost).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.p - q);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Dare, ReportsNonConvergenceForUnstabilizablePair) {
  Eigen::MatrixXd a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 2.0;   // unstable
  b << 0.0;   // no authority
  q << 1.0;
  r << 1.0;
  const DareResult res = dare(a, b, q, r, {1e-12, 200});
  EXPECT_FALSE(res.converged);
}
