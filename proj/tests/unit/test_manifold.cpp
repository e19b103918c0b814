#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rsds/manifold.hpp"
#include "test_util.hpp"

using namespace rsds;
using std::numbers::pi;

namespace {

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

const ManifoldSpec S2 = ManifoldSpec::sphere(2);
const ManifoldSpec S3 = ManifoldSpec::sphere(3);
const ManifoldSpec Pose = ManifoldSpec::parse("R3xS3");

}  // namespace

TEST(ManifoldSpec, ParseAndDims) {
  EXPECT_EQ(S2.ambient_dim(), 3);
  EXPECT_EQ(S2.intrinsic_dim(), 2);
  EXPECT_EQ(Pose.ambient_dim(), 7);
  EXPECT_EQ(Pose.intrinsic_dim(), 6);
  EXPECT_EQ(Pose.to_string(), "R3xS3");
  ASSERT_EQ(Pose.blocks().size(), 2u);
  EXPECT_FALSE(Pose.blocks()[0].sphere);
  EXPECT_TRUE(Pose.blocks()[1].sphere);
  EXPECT_EQ(Pose.blocks()[1].offset, 3);
  EXPECT_THROW(ManifoldSpec::sphere(0), ValidationError);
  EXPECT_THROW(ManifoldSpec::parse("Q2"), ValidationError);
  EXPECT_THROW(ManifoldSpec::product({}), ValidationError);
}

TEST(ExpMap, Examples) {
  const Vec n = v3(0, 0, 1);
  EXPECT_EQ(S2.exp(n, Vec::Zero(3)), n);
  EXPECT_LT((S2.exp(n, v3(pi / 2, 0, 0)) - v3(1, 0, 0)).norm(), 1e-15);
  const Vec y = S2.exp(n, v3(0.3, 0.4, 0));
  EXPECT_NEAR(S2.distance(n, y), 0.5, 1e-12);
  EXPECT_LT((S2.log(n, y) - v3(0.3, 0.4, 0)).norm(), 1e-10);
}

TEST(ExpMap, InjectivityError) {
  EXPECT_THROW(S2.exp(v3(0, 0, 1), v3(pi, 0, 0)), InjectivityError);
}

TEST(LogMap, Examples) {
  const Vec x = v3(1, 0, 0);
  EXPECT_EQ(S2.log(x, x), Vec::Zero(3));
  EXPECT_LT((S2.log(x, v3(0, 1, 0)) - v3(0, pi / 2, 0)).norm(), 1e-15);
  EXPECT_THROW(S2.log(x, v3(-1, 0, 0)), CutLocusError);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec a = S3.sample_uniform(rng);
    const Vec b = S3.sample_uniform(rng);
    EXPECT_LT((S3.exp(a, S3.log(a, b)) - b).norm(), 1e-9);
  }
}

TEST(Distance, Examples) {
  EXPECT_EQ(S2.distance(v3(1, 0, 0), v3(1, 0, 0)), 0.0);
  EXPECT_NEAR(S2.distance(v3(1, 0, 0), v3(0, 1, 0)), pi / 2, 1e-15);
  EXPECT_NEAR(S2.distance(v3(1, 0, 0), v3(-1, 0, 0)), pi, 1e-15);
}

TEST(Projection, Examples) {
  const Vec n = v3(0, 0, 1);
  EXPECT_EQ(S2.project(n, v3(1, 2, 3)), v3(1, 2, 0));
  EXPECT_EQ(S2.project(n, v3(1, 2, 0)), v3(1, 2, 0));
  EXPECT_EQ(S2.retract(v3(0, 0, 2)), n);
  EXPECT_LT((S2.retract(v3(3, 4, 0)) - v3(0.6, 0.8, 0)).norm(), 1e-16);
  EXPECT_THROW(S2.retract(Vec::Zero(3)), DegenerateError);
}

TEST(Transport, IdentityAndIsometry) {
  std::mt19937_64 rng(11);
  const Vec x = S3.sample_uniform(rng);
  const Vec u = test::random_tangent(S3, x, rng, 1.0);
  EXPECT_EQ(S3.transport(x, x, u), u);
  for (int i = 0; i < 200; ++i) {
    const Vec a = S3.sample_uniform(rng);
    const Vec b = S3.sample_uniform(rng);
    const Vec p = test::random_tangent(S3, a, rng, 1.3);
    const Vec q = test::random_tangent(S3, a, rng, 0.7);
    const Vec tp = S3.transport(a, b, p);
    const Vec tq = S3.transport(a, b, q);
    EXPECT_LT(std::abs(tp.norm() - p.norm()), 1e-10);
    EXPECT_LT(std::abs(tp.dot(tq) - p.dot(q)), 1e-10);
    EXPECT_LT(S3.tangency_residual(b, tp), 1e-10);
  }
}

TEST(Transport, MovesLogDirectionAlongGeodesic) {
  // Transporting Log_x(y) to y gives -Log_y(x).
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec a = S2.sample_uniform(rng);
    const Vec b = S2.sample_uniform(rng);
    EXPECT_LT((S2.transport(a, b, S2.log(a, b)) + S2.log(b, a)).norm(), 1e-9);
  }
}

TEST(Properties, RoundtripProjectorAcrossSpaces) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> len(0.0, pi - 0.1);
  for (const ManifoldSpec& m : {S2, S3, Pose}) {
    for (int i = 0; i < 2000; ++i) {
      const Vec x = m.sample_uniform(rng);
      Vec u = test::random_tangent(m, x, rng, 1.0);
      for (const auto& b : m.blocks()) {
        auto ub = u.segment(b.offset, b.size);
        if (b.sphere && ub.norm() > 0) ub *= len(rng) / ub.norm();
      }
      const Vec y = m.exp(x, u);
      EXPECT_LT(m.manifold_residual(y), 1e-12);
      EXPECT_LT((m.log(x, y) - u).norm(), 1e-8);
      EXPECT_NEAR(m.log(x, y).norm(), m.distance(x, y), 1e-9);
      const Vec v = Vec::Random(m.ambient_dim());
      const Vec p = m.project(x, v);
      EXPECT_LT((m.project(x, p) - p).norm(), 1e-12);
      const Mat P = m.projector(x);
      EXPECT_LT((P - P.transpose()).norm(), 1e-15);
      EXPECT_LT((P * v - p).norm(), 1e-14);
    }
  }
}

TEST(Properties, ProductEqualsBlockwise) {
  std::mt19937_64 rng(8);
  const ManifoldSpec R3 = ManifoldSpec::euclidean(3);
  for (int i = 0; i < 100; ++i) {
    const Vec x = Pose.sample_uniform(rng);
    const Vec y = Pose.sample_uniform(rng);
    const Vec u = test::random_tangent(Pose, x, rng, 0.8);
    const Vec ex = Pose.exp(x, u);
    EXPECT_EQ(ex.head(3), R3.exp(x.head(3), u.head(3)));
    EXPECT_EQ(ex.tail(4), S3.exp(x.tail(4), u.tail(4)));
    const Vec lg = Pose.log(x, y);
    EXPECT_EQ(lg.head(3), R3.log(x.head(3), y.head(3)));
    EXPECT_EQ(lg.tail(4), S3.log(x.tail(4), y.tail(4)));
    const Vec tr = Pose.transport(x, y, u);
    EXPECT_EQ(tr.tail(4), S3.transport(x.tail(4), y.tail(4), u.tail(4)));
    const double d1 = R3.distance(x.head(3), y.head(3));
    const double d2 = S3.distance(x.tail(4), y.tail(4));
    EXPECT_NEAR(Pose.distance(x, y), std::sqrt(d1 * d1 + d2 * d2), 1e-14);
  }
}

TEST(Sampling, DeterministicAndUniform) {
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(S2.sample_uniform(a), S2.sample_uniform(b));
  std::mt19937_64 rng(1);
  Vec mean = Vec::Zero(3);
  for (int i = 0; i < 10000; ++i) {
    const Vec x = S2.sample_uniform(rng);
    EXPECT_LT(S2.manifold_residual(x), 1e-12);
    mean += x;
  }
  EXPECT_LT((mean / 10000.0).norm(), 0.05);
  const Vec p = Pose.sample_uniform(rng, -2.0, 3.0);
  EXPECT_LT(Pose.manifold_residual(p), 1e-12);
  EXPECT_GE(p.head(3).minCoeff(), -2.0);
  EXPECT_LE(p.head(3).maxCoeff(), 3.0);
}

TEST(CheckPoint, RejectsOffManifold) {
  EXPECT_THROW(S2.check_point(v3(1, 1, 0), "x"), ValidationError);
  EXPECT_THROW(S2.check_point(Vec::Zero(4), "x"), ValidationError);
  EXPECT_NO_THROW(S2.check_point(v3(0, 1, 0), "x"));
}
