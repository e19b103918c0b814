#include <cmath>

#include <gtest/gtest.h>

#include "rsds/training.hpp"
#include "test_util.hpp"

using namespace rsds;

namespace {

const ManifoldSpec S2 = ManifoldSpec::sphere(2);
const ManifoldSpec Pose = ManifoldSpec::parse("R3xS3");

RsdsModel toy_model(const ManifoldSpec& m, std::uint64_t seed, const std::vector<Sample>& data) {
  std::mt19937_64 rng(seed);
  RsdsModel model;
  model.spec = m;
  model.net = VectorFieldNet::random(m, 8, rng, 0.5);
  model.goal = m.sample_uniform(rng);
  std::vector<Vec> pts;
  for (const auto& s : data) pts.push_back(s.x);
  model.scaling = ScalingNet::fit(m, pts, 4, rng);
  std::normal_distribution<double> nd(0.0, 0.3);
  Vec w(model.scaling.num_params());
  for (auto& wi : w) wi = nd(rng);
  model.scaling.set_weights(w);
  return model;
}

// Two short geodesic arcs with noisy tangent velocities.
std::vector<Sample> toy_batch(const ManifoldSpec& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  for (int d = 0; d < 2; ++d) {
    const Vec a = m.sample_uniform(rng);
    const Vec u = test::random_tangent(m, a, rng, 0.3);
    for (int i = 0; i < 5; ++i) {
      const Vec x = m.exp(a, (i / 5.0) * u);
      out.push_back({x, test::random_tangent(m, x, rng, 0.5)});
    }
  }
  return out;
}

}  // namespace

TEST(LossGradient, MatchesFiniteDifferences) {
  for (const ManifoldSpec& m : {S2, Pose}) {
    const auto batch = toy_batch(m, 1);
    RsdsModel model = toy_model(m, 2, batch);
    const LossGrad lg = loss_and_gradients(model, batch);
    EXPECT_NEAR(lg.loss, loss_value(model, batch), 1e-12 * lg.loss);

    const Vec theta = model.net.parameters();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index k = pick(rng);
      Vec p = theta;
      p[k] = theta[k] + h;
      model.net.set_parameters(p);
      const double lp = loss_value(model, batch);
      p[k] = theta[k] - h;
      model.net.set_parameters(p);
      const double lm = loss_value(model, batch);
      model.net.set_parameters(theta);
      const double fd = (lp - lm) / (2 * h);
      EXPECT_NEAR(lg.grad.theta[k], fd, 1e-4 * std::max(std::abs(fd), 1e-3 * lg.loss))
          << "parameter " << k;
    }

    const Vec w = model.scaling.weights();
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      Vec q = w;
      q[k] = w[k] + h;
      model.scaling.set_weights(q);
      const double lp = loss_value(model, batch);
      q[k] = w[k] - h;
      model.scaling.set_weights(q);
      const double lm = loss_value(model, batch);
      model.scaling.set_weights(w);
      const double fd = (lp - lm) / (2 * h);
      EXPECT_NEAR(lg.grad.gamma[k], fd, 1e-4 * std::max(std::abs(fd), 1e-3 * lg.loss));
    }
  }
}

TEST(LossGradient, ZeroOnSelfGeneratedDemos) {
  std::mt19937_64 rng(4);
  const Vec goal = (Vec(3) << 0, 0, 1).finished();
  RsdsModel model = RsdsModel::identity(S2, 8, goal, rng);
  std::vector<Sample> batch;
  for (int i = 0; i < 10; ++i) {
    const Vec x = S2.exp(goal, test::random_tangent(S2, goal, rng, 0.7));
    batch.push_back({x, predict_velocity(model, x)});
  }
  const LossGrad lg = loss_and_gradients(model, batch);
  EXPECT_LT(lg.loss, 1e-28);
  EXPECT_LT(lg.grad.theta.cwiseAbs().maxCoeff(), 1e-14);

  TrainOptions opt;
  opt.epochs = 5;
  const TrainResult r = train(model, batch, opt);
  EXPECT_FALSE(r.aborted);
  for (double l : r.loss_history) EXPECT_LT(l, 1e-20);
}

TEST(Train, ScalingOnlyLearnsLargerSpeed) {
  std::mt19937_64 rng(5);
  const Vec goal = (Vec(3) << 0, 0, 1).finished();
  RsdsModel model = RsdsModel::identity(S2, 8, goal, rng);
  std::vector<Sample> batch;
  std::vector<Vec> pts;
  for (int i = 0; i < 20; ++i) {
    const Vec x = S2.exp(goal, test::random_tangent(S2, goal, rng, 0.7));
    batch.push_back({x, 2.0 * predict_velocity(model, x)});
    pts.push_back(x);
  }
  model.scaling = ScalingNet::fit(S2, pts, 5, rng);
  double kappa0 = 0.0;
  for (const auto& p : pts) kappa0 += model.scaling.kappa(p);
  TrainOptions opt;
  opt.epochs = 50;
  opt.train_theta = false;
  const TrainResult r = train(model, batch, opt);
  ASSERT_EQ(r.loss_history.size(), 50u);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i)
    EXPECT_LT(r.loss_history[i], r.loss_history[i - 1]);
  double kappa1 = 0.0;
  for (const auto& p : pts) kappa1 += model.scaling.kappa(p);
  EXPECT_GT(kappa1, kappa0);
}

TEST(Train, DeterministicAcrossRunsAndThreads) {
  const auto batch = toy_batch(S2, 6);
  RsdsModel a = toy_model(S2, 7, batch);
  RsdsModel b = toy_model(S2, 7, batch);
  TrainOptions opt;
  opt.epochs = 4;
  opt.lr = 1e-2;
  opt.batch_size = 4;
  opt.seed = 11;
  opt.threads = 1;
  const TrainResult ra = train(a, batch, opt);
  opt.threads = 2;
  const TrainResult rb = train(b, batch, opt);
  EXPECT_EQ(ra.loss_history, rb.loss_history);
  EXPECT_EQ(a.net.parameters(), b.net.parameters());
  EXPECT_EQ(a.scaling.weights(), b.scaling.weights());
  EXPECT_LT(ra.loss_history.back(), ra.loss_history.front());
}

TEST(Train, LearningRateDecay) {
  const auto batch = toy_batch(S2, 8);
  RsdsModel a = toy_model(S2, 9, batch);
  RsdsModel b = toy_model(S2, 9, batch);
  TrainOptions opt;
  opt.epochs = 3;
  opt.lr = 1e-2;
  opt.decay_epoch = 0;
  opt.decay_factor = 0.1;
  train(a, batch, opt);
  opt.lr = 1e-3;
  opt.decay_epoch = -1;
  train(b, batch, opt);
  EXPECT_LT((a.net.parameters() - b.net.parameters()).norm(), 1e-12);
}

TEST(Train, AbortRestoresLastGoodParameters) {
  const auto batch = toy_batch(S2, 10);
  RsdsModel model = toy_model(S2, 12, batch);
  model.cfg.num_charts = 1;
  TrainOptions opt;
  opt.epochs = 200;
  opt.lr = 5.0;
  opt.train_gamma = false;
  const TrainResult r = train(model, batch, opt);
  ASSERT_TRUE(r.aborted);
  EXPECT_FALSE(r.message.empty());
  EXPECT_TRUE(model.net.parameters().allFinite());
  EXPECT_TRUE(std::isfinite(loss_value(model, batch)));
}

TEST(Train, RejectsBadInput) {
  const auto batch = toy_batch(S2, 13);
  RsdsModel model = toy_model(S2, 14, batch);
  TrainOptions opt;
  EXPECT_THROW(train(model, {}, opt), ValidationError);
  auto bad = batch;
  bad[0].x *= 2.0;
  EXPECT_THROW(train(model, bad, opt), ValidationError);
  opt.train_theta = false;
  opt.train_gamma = false;
  EXPECT_THROW(train(model, batch, opt), ValidationError);
}
