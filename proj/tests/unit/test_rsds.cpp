#include <cmath>

#include <gtest/gtest.h>

#include "rsds/rsds.hpp"
#include "test_util.hpp"

using namespace rsds;

namespace {

const ManifoldSpec S2 = ManifoldSpec::sphere(2);
const ManifoldSpec Pose = ManifoldSpec::parse("R3xS3");

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

RsdsModel random_model(const ManifoldSpec& m, std::uint64_t seed, double out_scale = 0.5,
                       bool scaled = true) {
  std::mt19937_64 rng(seed);
  RsdsModel model;
  model.spec = m;
  model.net = VectorFieldNet::random(m, 16, rng, out_scale);
  model.goal = m.sample_uniform(rng);
  if (scaled) {
    std::vector<Vec> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(m.sample_uniform(rng));
    model.scaling = ScalingNet::fit(m, pts, 8, rng);
    std::normal_distribution<double> nd(0.0, 0.5);
    Vec w(model.scaling.num_params());
    for (auto& wi : w) wi = nd(rng);
    model.scaling.set_weights(w);
  } else {
    model.scaling = ScalingNet(m, {}, Vec(), Vec());
  }
  return model;
}

RsdsModel zero_model(const ManifoldSpec& m, const Vec& goal) {
  std::mt19937_64 rng(0);
  return RsdsModel::identity(m, 16, goal, rng);
}

}  // namespace

TEST(ForwardDiffeo, IdentityAtZeroInit) {
  std::mt19937_64 rng(1);
  const auto model = zero_model(S2, v3(0, 0, 1));
  for (int i = 0; i < 10; ++i) {
    const Vec x = S2.sample_uniform(rng);
    EXPECT_LT((forward_diffeo(model, x) - x).norm(), 1e-15);
  }
}

TEST(ForwardDiffeo, RoundtripAndInjectivity) {
  for (const ManifoldSpec& m : {S2, Pose}) {
    const auto model = random_model(m, 2);
    std::mt19937_64 rng(3);
    std::vector<Vec> ys;
    for (int i = 0; i < 100; ++i) {
      const Vec x = m.sample_uniform(rng);
      const Vec y = forward_diffeo(model, x);
      EXPECT_LT(m.manifold_residual(y), 1e-12);
      EXPECT_LE(m.distance(flow_inverse(m, model.net, y, model.cfg), x), 0.05);
      ys.push_back(y);
    }
    double dmin = 1e9;
    for (std::size_t i = 0; i < ys.size(); ++i)
      for (std::size_t j = i + 1; j < ys.size(); ++j) dmin = std::min(dmin, m.distance(ys[i], ys[j]));
    EXPECT_GT(dmin, 0.0);
  }
}

TEST(CanonicalDirection, Examples) {
  const Vec y = v3(1, 0, 0);
  EXPECT_EQ(canonical_direction(S2, y, y), Vec::Zero(3));
  EXPECT_LT((canonical_direction(S2, y, v3(0, 1, 0)) - v3(0, 1, 0)).norm(), 1e-15);
  EXPECT_THROW(canonical_direction(S2, y, v3(-1, 0, 0)), CutLocusError);
  std::mt19937_64 rng(4);
  for (const ManifoldSpec& m : {S2, Pose}) {
    for (int i = 0; i < 100; ++i) {
      const Vec a = m.sample_uniform(rng);
      const Vec b = m.sample_uniform(rng);
      const Vec g = canonical_direction(m, a, b);
      EXPECT_NEAR(g.norm(), 1.0, 1e-12);
      EXPECT_LT(m.distance(m.exp(a, m.distance(a, b) * g), b), 1e-9);
    }
  }
}

TEST(PredictVelocity, ZeroInitIsScaledGeodesicField) {
  const Vec goal = v3(0, 0, 1);
  auto model = zero_model(S2, goal);
  EXPECT_EQ(predict_velocity(model, goal), Vec::Zero(3));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec x = S2.sample_uniform(rng);
    if (S2.distance(x, goal) > 3.0) continue;
    const Vec v = predict_velocity(model, x);
    EXPECT_LT((v - canonical_direction(S2, x, goal) * std::exp(1e-8)).norm(), 1e-9);
    EXPECT_NEAR(lyapunov_value(model, x), std::pow(S2.distance(x, goal), 2), 1e-12);
  }
  EXPECT_EQ(lyapunov_value(model, goal), 0.0);
}

TEST(PredictVelocity, MagnitudeLawAndTangency) {
  for (const ManifoldSpec& m : {S2, Pose}) {
    const auto model = random_model(m, 6);
    const RsdsEvaluator ev(model);
    EXPECT_LT(ev.velocity(model.goal).norm(), 1e-12);
    std::mt19937_64 rng(7);
    int evaluated = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x = m.sample_uniform(rng);
      Vec v;
      try {
        v = ev.velocity(x);
      } catch (const CutLocusError&) {
        continue;
      }
      ++evaluated;
      EXPECT_LE(m.tangency_residual(x, v), 1e-9);
      const double k = model.scaling.eval(x);
      EXPECT_NEAR(v.norm(), k, 1e-12 * k);
    }
    EXPECT_GT(evaluated, 950);
  }
}

TEST(Pullback, ConstrainedMatchesForwardPullback) {
  // Identity diffeomorphism: the constrained solve returns y_dot itself.
  const auto id = zero_model(S2, v3(0, 0, 1));
  std::mt19937_64 rng(8);
  const Vec x = S2.sample_uniform(rng);
  const Vec yd = test::random_tangent(S2, x, rng, 1.0);
  EXPECT_LT((pullback_constrained(id, x, yd) - yd).norm(), 1e-12);
  for (std::uint64_t seed : {9, 10, 11}) {
    const auto model = random_model(S2, seed, 1.0);
    for (int i = 0; i < 20; ++i) {
      const Vec p = S2.sample_uniform(rng);
      const auto fw = flow_with_forward_differential(S2, model.net, p, model.cfg);
      const Vec ydot = test::random_tangent(S2, fw.endpoint, rng, 1.0);
      const Vec a = fw.linmap * ydot;
      const Vec b = pullback_constrained(model, p, ydot);
      EXPECT_LT((a - b).norm(), 1e-4 * a.norm());
      EXPECT_LE(S2.tangency_residual(p, b), 1e-9);
    }
  }
  EXPECT_THROW(pullback_constrained(random_model(Pose, 1), Pose.sample_uniform(rng), Vec::Zero(7)),
               ValidationError);
}

TEST(Rollout, StartAtGoal) {
  const auto model = random_model(S2, 12);
  const Rollout r = rollout(model, model.goal, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x.size(), 1u);
}

TEST(Rollout, ZeroInitFollowsGreatCircle) {
  const Vec goal = v3(0, 0, 1);
  const auto model = zero_model(S2, goal);
  const Vec x0 = v3(1, 0.3, -0.2).normalized();
  const Eigen::Vector3d normal = Eigen::Vector3d(x0).cross(Eigen::Vector3d(goal)).normalized();
  RolloutOptions opt;
  opt.dt = 0.01;
  opt.max_steps = 1000;
  const Rollout r = rollout(model, x0, opt);
  EXPECT_TRUE(r.converged);
  for (const Vec& x : r.x) EXPECT_LT(std::abs(x.dot(normal)), 1e-6);
  EXPECT_TRUE(lyapunov_decreasing(r));
}

TEST(Rollout, GeodesicEulerStepsAndLyapunovDecrease) {
  for (const ManifoldSpec& m : {S2, Pose}) {
    const auto model = random_model(m, 13);
    std::mt19937_64 rng(14);
    RolloutOptions opt;
    opt.dt = 0.02;
    opt.max_steps = 2000;
    for (int i = 0; i < 5; ++i) {
      const Rollout r = rollout(model, m.sample_uniform(rng), opt);
      if (!r.failure.empty()) continue;
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.final_distance, opt.conv_tol);
      for (std::size_t k = 0; k + 1 < r.x.size(); ++k)
        EXPECT_LT((m.exp(r.x[k], opt.dt * r.xdot[k]) - r.x[k + 1]).norm(), 1e-9);
      EXPECT_TRUE(lyapunov_decreasing(r));
    }
  }
}

TEST(Rollout, RecoversFromPerturbation) {
  const auto model = random_model(S2, 15);
  std::mt19937_64 rng(16);
  RolloutOptions opt;
  opt.dt = 0.02;
  opt.max_steps = 3000;
  opt.perturb_step = 20;
  opt.perturb_to = S2.exp(model.goal, test::random_tangent(S2, model.goal, rng, 1.0).normalized() * 1.5);
  const Vec x0 = S2.exp(model.goal, test::random_tangent(S2, model.goal, rng, 1.0).normalized() * 1.0);
  const Rollout r = rollout(model, x0, opt);
  EXPECT_EQ(r.perturbed_at, 20);
  EXPECT_EQ(r.x[20], opt.perturb_to);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(lyapunov_decreasing(r));
}

TEST(RsdsModel, Validation) {
  auto model = random_model(S2, 17);
  model.goal = v3(1, 1, 0);
  EXPECT_THROW(model.validate(), ValidationError);
  auto other = random_model(S2, 17);
  other.net = VectorFieldNet(Pose, 4);
  EXPECT_THROW(other.validate(), ValidationError);
}
