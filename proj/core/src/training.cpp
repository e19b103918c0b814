#include "rsds/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rsds/ad.hpp"
#include "rsds/detail/velocity.hpp"
#include "rsds/parallel.hpp"

namespace rsds {

using ad::Var;
using detail::MatT;
using detail::MlpT;
using detail::VecT;

namespace {

// Copies the network onto the active tape. As leaves, ids follow the
// parameters() layout starting at the current tape size.
MlpT<Var> lift(const MlpT<double>& p, bool leaves) {
  MlpT<Var> out;
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    const Mat& W = p.W[l];
    MatT<Var> Wv(W.rows(), W.cols());
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i)
        Wv(i, j) = leaves ? Var::leaf(W(i, j)) : Var(W(i, j));
    VecT<Var> bv(p.b[l].size());
    for (Eigen::Index i = 0; i < bv.size(); ++i)
      bv[i] = leaves ? Var::leaf(p.b[l][i]) : Var(p.b[l][i]);
    out.W.push_back(std::move(Wv));
    out.b.push_back(std::move(bv));
  }
  return out;
}

struct Worker {
  ad::Tape tape;
  std::vector<double> adj;
};

Vec latent_goal(const RsdsModel& m) {
  detail::FlowOptions<double> opt;
  return detail::chart_flow<double>(m.spec, detail::NetFieldT<double>{m.spec, m.net.mlp()}, m.goal,
                                    m.cfg, opt);
}

}  // namespace

double loss_value(const RsdsModel& model, std::span<const Sample> batch, int threads) {
  if (batch.empty()) throw ValidationError("loss over an empty batch");
  model.validate();
  const Vec ystar = latent_goal(model);
  const detail::NetFieldT<double> field{model.spec, model.net.mlp()};
  std::vector<double> per(batch.size());
  parallel_for(static_cast<int>(batch.size()), threads, [&](int i, int) {
    const Sample& s = batch[i];
    const Vec v = detail::velocity_t<double>(model.spec, field, model.cfg, s.x, ystar,
                                             model.scaling.eval(s.x), nullptr);
    per[i] = (v - s.xdot).squaredNorm();
  });
  double sum = 0.0;
  for (double p : per) sum += p;
  return sum / static_cast<double>(batch.size());
}

LossGrad loss_and_gradients(const RsdsModel& model, std::span<const Sample> batch, bool theta,
                            bool gamma, int threads) {
  if (batch.empty()) throw ValidationError("loss over an empty batch");
  model.validate();
  const ManifoldSpec& m = model.spec;
  const int n = m.ambient_dim();
  const int N = static_cast<int>(batch.size());
  const Eigen::Index P = theta ? static_cast<Eigen::Index>(model.net.num_params()) : 0;
  const Eigen::Index K = static_cast<Eigen::Index>(model.scaling.num_params());
  const Vec ystar = latent_goal(model);
  const double eps = model.scaling.epsilon();

  const int T = std::min(resolve_threads(threads), N);
  std::vector<Worker> workers(T);
  std::vector<double> loss(N);
  std::vector<Vec> g_theta(N), g_gamma(N), g_ystar(N);

  parallel_for(N, T, [&](int i, int wi) {
    Worker& wk = workers[wi];
    wk.tape.clear();
    ad::TapeScope scope(wk.tape);
    const MlpT<Var> net = lift(model.net.mlp(), theta);
    const auto w0 = static_cast<std::uint32_t>(wk.tape.size());
    VecT<Var> w(K);
    for (Eigen::Index k = 0; k < K; ++k)
      w[k] = gamma ? Var::leaf(model.scaling.weights()[k]) : Var(model.scaling.weights()[k]);
    const auto y0 = static_cast<std::uint32_t>(wk.tape.size());
    VecT<Var> ys(n);
    for (int k = 0; k < n; ++k) ys[k] = Var::leaf(ystar[k]);

    const Sample& s = batch[i];
    Var kappa(0.0);
    if (K > 0) {
      const Vec phi = model.scaling.features(s.x);
      kappa = ad::dot(w.data(), 1, phi.data(), 1, static_cast<int>(K));
    }
    const Var khat = exp(kappa + eps);
    const VecT<Var> x = detail::cast_vec<Var>(s.x);
    const VecT<Var> v = detail::velocity_t<Var>(m, detail::NetFieldT<Var>{m, net}, model.cfg, x,
                                                ys, khat, nullptr);
    Var L(0.0);
    for (int k = 0; k < n; ++k) {
      const Var d = v[k] - s.xdot[k];
      L = L + d * d;
    }
    loss[i] = L.v;
    g_theta[i] = Vec::Zero(P);
    g_gamma[i] = Vec::Zero(gamma ? K : 0);
    g_ystar[i] = Vec::Zero(n);
    if (L.is_const()) return;
    const std::pair<std::uint32_t, double> seed{L.id, 1.0};
    wk.tape.backward({&seed, 1}, wk.adj);
    for (Eigen::Index k = 0; k < P; ++k) g_theta[i][k] = wk.adj[k];
    if (gamma)
      for (Eigen::Index k = 0; k < K; ++k) g_gamma[i][k] = wk.adj[w0 + k];
    for (int k = 0; k < n; ++k) g_ystar[i][k] = wk.adj[y0 + k];
  });

  LossGrad out;
  out.grad.theta = Vec::Zero(P);
  out.grad.gamma = Vec::Zero(gamma ? K : 0);
  Vec gy = Vec::Zero(n);
  for (int i = 0; i < N; ++i) {
    out.loss += loss[i];
    out.grad.theta += g_theta[i];
    out.grad.gamma += g_gamma[i];
    gy += g_ystar[i];
  }
  const double inv = 1.0 / N;
  out.loss *= inv;
  out.grad.theta *= inv;
  out.grad.gamma *= inv;
  gy *= inv;

  if (theta && gy.squaredNorm() > 0.0) {
    Worker& wk = workers[0];
    wk.tape.clear();
    ad::TapeScope scope(wk.tape);
    const MlpT<Var> net = lift(model.net.mlp(), true);
    detail::FlowOptions<Var> opt;
    const VecT<Var> y = detail::chart_flow<Var>(m, detail::NetFieldT<Var>{m, net},
                                                detail::cast_vec<Var>(model.goal), model.cfg, opt);
    std::vector<std::pair<std::uint32_t, double>> seeds;
    for (int k = 0; k < n; ++k)
      if (!y[k].is_const()) seeds.emplace_back(y[k].id, gy[k]);
    if (!seeds.empty()) {
      wk.tape.backward(seeds, wk.adj);
      for (Eigen::Index k = 0; k < P; ++k) out.grad.theta[k] += wk.adj[k];
    }
  }
  return out;
}

TrainResult train(RsdsModel& model, const std::vector<Sample>& samples, const TrainOptions& opt) {
  if (samples.empty()) throw ValidationError("no training samples");
  if (opt.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!(opt.lr > 0.0)) throw ValidationError("learning rate must be positive");
  model.validate();
  for (const auto& s : samples) {
    model.spec.check_point(s.x, "training point");
    if (s.xdot.size() != model.spec.ambient_dim())
      throw ValidationError("training velocity has the wrong dimension");
  }
  const Eigen::Index P = opt.train_theta ? static_cast<Eigen::Index>(model.net.num_params()) : 0;
  const Eigen::Index K = opt.train_gamma ? static_cast<Eigen::Index>(model.scaling.num_params()) : 0;
  if (P + K == 0) throw ValidationError("no trainable parameters selected");

  Vec params(P + K);
  if (P) params.head(P) = model.net.parameters();
  if (K) params.tail(K) = model.scaling.weights();
  auto unpack = [&](const Vec& p) {
    if (P) model.net.set_parameters(p.head(P));
    if (K) model.scaling.set_weights(p.tail(K));
  };

  const int N = static_cast<int>(samples.size());
  const int B = (opt.batch_size > 0 && opt.batch_size < N) ? opt.batch_size : N;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opt.seed);

  TrainResult res;
  AdamState st;
  Vec good = params;
  std::vector<Sample> batch;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr =
        (opt.decay_epoch >= 0 && epoch >= opt.decay_epoch) ? opt.lr * opt.decay_factor : opt.lr;
    if (B < N) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < N; start += B) {
      const int stop = std::min(N, start + B);
      batch.clear();
      for (int i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
      LossGrad lg;
      try {
        lg = loss_and_gradients(model, batch, opt.train_theta, opt.train_gamma, opt.threads);
      } catch (const NumericalError& e) {
        unpack(good);
        res.aborted = true;
        res.message = fmt::format("epoch {}: {}", epoch, e.what());
        return res;
      }
      if (!std::isfinite(lg.loss) || !lg.grad.theta.allFinite() || !lg.grad.gamma.allFinite()) {
        unpack(good);
        res.aborted = true;
        res.message = fmt::format(
            "epoch {}: non-finite loss; try a smaller step_size or more charts", epoch);
        return res;
      }
      good = params;
      epoch_loss += lg.loss * (stop - start);
      Vec g(P + K);
      if (P) g.head(P) = lg.grad.theta;
      if (K) g.tail(K) = lg.grad.gamma;
      adam_step(params, g, st, lr);
      unpack(params);
    }
    res.loss_history.push_back(epoch_loss / N);
    if (opt.on_epoch) opt.on_epoch(epoch, res.loss_history.back());
  }
  return res;
}

}  // namespace rsds
