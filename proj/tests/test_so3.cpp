#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdp/so3.hpp"

namespace {

using sdp::Mat3;
using sdp::Vec3;
namespace so3 = sdp::so3;

constexpr double kPi = so3::kPi;

Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  Vec3 dir(n(rng), n(rng), n(rng));
  dir.normalize();
  return dir * radius * std::cbrt(u(rng));
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

TEST(Hat, ZeroAndKnownMatrix) {
  EXPECT_TRUE(so3::hat(Vec3::Zero()).isZero(0));
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(so3::hat(Vec3(1, 2, 3)), expected);
}

TEST(Hat, MatchesCrossProduct) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 r(n(rng), n(rng), n(rng));
    const Vec3 v(n(rng), n(rng), n(rng));
    const Mat3 m = so3::hat(r);
    EXPECT_TRUE((m + m.transpose()).isZero(0));
    EXPECT_LT((m * v - oracle::cross(r, v)).norm(), 1e-12);
    EXPECT_EQ(so3::vee(m), r);
  }
}

TEST(ExpMap, IdentityAndQuarterTurn) {
  EXPECT_EQ(so3::exp_map(Vec3::Zero()), Mat3::Identity());
  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT((so3::exp_map(Vec3(kPi / 2, 0, 0)) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExpMap, MatchesPowerSeries) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const Vec3 r = random_in_ball(rng, kPi - 0.01);
    EXPECT_LT((so3::exp_map(r) - oracle::exp_series(r)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ExpMap, SmallAngleBranchIsContinuous) {
  const Vec3 axis = Vec3(1, -2, 0.5).normalized();
  for (double a : {1e-12, 1e-9, 0.99e-8, 1.01e-8, 1e-7}) {
    EXPECT_LT((so3::exp_map(a * axis) - oracle::exp_series(a * axis)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ExpMap, ProducesRotations) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 rot = so3::exp_map(Vec3(n(rng), n(rng), n(rng)));
    EXPECT_LT((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(std::abs(rot.determinant() - 1), 1e-9);
  }
}

TEST(LogMap, IdentityAndRoundTrip) {
  EXPECT_TRUE(so3::log_map(Mat3::Identity()).isZero(0));
  const Vec3 r(0.3, -0.2, 0.1);
  EXPECT_LT((so3::log_map(so3::exp_map(r)) - r).norm(), 1e-9);
}

TEST(LogMap, RoundTripInsideBall) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 r = random_in_ball(rng, kPi - 1e-3);
    const Vec3 back = so3::log_map(so3::exp_map(r));
    EXPECT_LT((back - r).norm(), 1e-8) << r.transpose();
    EXPECT_LE(back.norm(), kPi);
  }
}

TEST(LogMap, NearPiFromQuaternion) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 axis = random_unit(rng);
    const double angle = kPi - 1e-4;
    const Mat3 rot = oracle::quat_to_matrix(oracle::quat_from_axis_angle(axis, angle));
    const Vec3 r = so3::log_map(rot);
    EXPECT_LT((r - angle * axis).norm(), 1e-6) << axis.transpose();
    EXPECT_LT((so3::exp_map(r) - rot).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(LogMap, ExactlyPiIsCanonical) {
  const Mat3 rot = so3::exp_map(Vec3(0, kPi, 0));
  const Vec3 r = so3::log_map(rot);
  EXPECT_NEAR(r.norm(), kPi, 1e-9);
  EXPECT_LT((so3::exp_map(r) - rot).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LogMap, RejectsNonRotation) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.01;
  EXPECT_THROW(so3::log_map(bad), sdp::DataError);
  EXPECT_THROW(so3::log_map(-Mat3::Identity()), sdp::DataError);  // det = -1
}

TEST(InterpLog, Endpoints) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r0 = so3::exp_map(random_in_ball(rng, 3.0));
    const Mat3 r1 = so3::exp_map(random_in_ball(rng, 3.0));
    EXPECT_LT((so3::interp_log(r0, r1, 0.0) - r0).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((so3::interp_log(r0, r1, 1.0) - r1).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(InterpLog, CollapsesFromIdentity) {
  const Mat3 got = so3::interp_log(Mat3::Identity(), so3::exp_map(Vec3(kPi / 2, 0, 0)), 0.5);
  EXPECT_LT((got - so3::exp_map(Vec3(kPi / 4, 0, 0))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InterpLog, MatchesDirectFormula) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_in_ball(rng, 3.0);
    const Vec3 b = random_in_ball(rng, 3.0);
    const Mat3 r0 = oracle::quat_to_matrix(oracle::quat_from_rotvec(a));
    const Mat3 r1 = oracle::quat_to_matrix(oracle::quat_from_rotvec(b));
    const double t = 0.37;
    const Mat3 expected = oracle::exp_series(t * b + (1 - t) * a, 40);
    EXPECT_LT((so3::interp_log(r0, r1, t) - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_THROW(so3::interp_log(Mat3::Identity(), Mat3::Identity(), 1.5), sdp::UsageError);
}

TEST(InterpLog, ContinuousAlongPath) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 a = random_in_ball(rng, kPi - 0.05);
    const Vec3 b = random_in_ball(rng, kPi - 0.05);
    const Mat3 r0 = so3::exp_map(a);
    const Mat3 r1 = so3::exp_map(b);
    const double bound = 1.2 * (b - a).norm() / 10.0;
    Mat3 prev = so3::interp_log(r0, r1, 0.0);
    for (int i = 1; i <= 10; ++i) {
      const Mat3 cur = so3::interp_log(r0, r1, i / 10.0);
      EXPECT_LT(so3::geodesic_distance(prev, cur), bound + 1e-12);
      prev = cur;
    }
  }
}

TEST(SampleTangentGaussian, DeterministicAndWrapped) {
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(so3::sample_tangent_gaussian(a, 1.0), so3::sample_tangent_gaussian(b, 1.0));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LE(so3::sample_tangent_gaussian(rng, 3.0).norm(), kPi);
  }
  EXPECT_THROW(so3::sample_tangent_gaussian(rng, 0.0), sdp::UsageError);
}

TEST(SampleTangentGaussian, MeanIsZero) {
  std::mt19937_64 rng(10);
  Vec3 sum = Vec3::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += so3::sample_tangent_gaussian(rng, 0.5);
  const Vec3 mean = sum / n;
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(mean(k)), 0.01);
}

TEST(WrapToBall, Canonicalizes) {
  EXPECT_EQ(so3::wrap_to_ball(Vec3(0.1, 0, 0)), Vec3(0.1, 0, 0));
  EXPECT_LT((so3::wrap_to_ball(Vec3(2 * kPi + 0.1, 0, 0)) - Vec3(0.1, 0, 0)).norm(), 1e-9);
}

TEST(WrapToBall, MatchesQuaternionCanonicalization) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> len(kPi + 1e-3, 6 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 r = random_unit(rng) * len(rng);
    const Vec3 w = so3::wrap_to_ball(r);
    EXPECT_LE(w.norm(), kPi + 1e-12);
    const Vec3 expected = oracle::quat_to_rotvec(oracle::quat_from_rotvec(r));
    // Antipodal representatives at exactly pi are both canonical.
    if (std::abs(expected.norm() - kPi) > 1e-6) {
      EXPECT_LT((w - expected).norm(), 1e-9) << r.transpose();
    }
    EXPECT_LT((so3::exp_map(w) - so3::exp_map(r)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(WrapToBall, Idempotent) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 once = so3::wrap_to_ball(Vec3(n(rng), n(rng), n(rng)));
    EXPECT_EQ(so3::wrap_to_ball(once), once);
  }
}

TEST(GeodesicDistance, KnownValues) {
  const Mat3 r = so3::exp_map(Vec3(0.4, -1.1, 0.7));
  EXPECT_NEAR(so3::geodesic_distance(r, r), 0.0, 1e-12);
  EXPECT_NEAR(so3::geodesic_distance(Mat3::Identity(), so3::exp_map(Vec3(kPi / 2, 0, 0))), kPi / 2, 1e-15);
}

TEST(GeodesicDistance, MatchesRelativeQuaternion) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = random_in_ball(rng, kPi);
    const Vec3 b = random_in_ball(rng, kPi);
    const oracle::Quat qa = oracle::quat_from_rotvec(a);
    const oracle::Quat qb = oracle::quat_from_rotvec(b);
    const double expected = oracle::quat_angle(oracle::mul(oracle::conj(qa), qb));
    EXPECT_NEAR(so3::geodesic_distance(so3::exp_map(a), so3::exp_map(b)), expected, 1e-9);
  }
}

TEST(GeodesicDistance, SymmetricAndTriangle) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 a = so3::exp_map(random_in_ball(rng, kPi));
    const Mat3 b = so3::exp_map(random_in_ball(rng, kPi));
    const Mat3 c = so3::exp_map(random_in_ball(rng, kPi));
    const double ab = so3::geodesic_distance(a, b);
    EXPECT_NEAR(ab, so3::geodesic_distance(b, a), 1e-9);
    EXPECT_LE(so3::geodesic_distance(a, c), ab + so3::geodesic_distance(b, c) + 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, kPi);
  }
}

}  // namespace
