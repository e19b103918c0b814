#include "rsds/netfield.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace rsds {

VectorFieldNet::VectorFieldNet(ManifoldSpec m, int hidden, int hidden_layers) : m_(std::move(m)) {
  if (hidden < 1) throw ValidationError(fmt::format("hidden width must be >= 1, got {}", hidden));
  if (hidden_layers < 1)
    throw ValidationError(fmt::format("need at least one hidden layer, got {}", hidden_layers));
  const int n = m_.ambient_dim();
  int in = n + 1;
  for (int l = 0; l < hidden_layers; ++l) {
    net_.W.push_back(Mat::Zero(hidden, in));
    net_.b.push_back(Vec::Zero(hidden));
    in = hidden;
  }
  net_.W.push_back(Mat::Zero(n, in));
  net_.b.push_back(Vec::Zero(n));
}

namespace {

void xavier_fill(Mat& W, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = u(rng);
}

}  // namespace

VectorFieldNet VectorFieldNet::xavier(ManifoldSpec m, int hidden, std::mt19937_64& rng,
                                      bool zero_last, int hidden_layers) {
  VectorFieldNet net(std::move(m), hidden, hidden_layers);
  const std::size_t L = net.net_.W.size();
  for (std::size_t l = 0; l < L; ++l)
    if (l + 1 < L || !zero_last) xavier_fill(net.net_.W[l], rng);
  return net;
}

VectorFieldNet VectorFieldNet::random(ManifoldSpec m, int hidden, std::mt19937_64& rng,
                                      double out_scale, int hidden_layers) {
  VectorFieldNet net(std::move(m), hidden, hidden_layers);
  std::uniform_real_distribution<double> ub(-0.2, 0.2);
  for (std::size_t l = 0; l < net.net_.W.size(); ++l) {
    xavier_fill(net.net_.W[l], rng);
    for (Eigen::Index i = 0; i < net.net_.b[l].size(); ++i) net.net_.b[l][i] = ub(rng);
  }
  net.net_.W.back() *= out_scale;
  net.net_.b.back() *= out_scale;
  return net;
}

std::vector<int> VectorFieldNet::widths() const {
  std::vector<int> w{static_cast<int>(net_.W.front().cols())};
  for (const auto& W : net_.W) w.push_back(static_cast<int>(W.rows()));
  return w;
}

std::size_t VectorFieldNet::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < net_.W.size(); ++l) n += net_.W[l].size() + net_.b[l].size();
  return n;
}

Vec VectorFieldNet::parameters() const {
  Vec p(num_params());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < net_.W.size(); ++l) {
    p.segment(k, net_.W[l].size()) = net_.W[l].reshaped();
    k += net_.W[l].size();
    p.segment(k, net_.b[l].size()) = net_.b[l];
    k += net_.b[l].size();
  }
  return p;
}

void VectorFieldNet::set_parameters(const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != num_params())
    throw ValidationError(
        fmt::format("parameter vector has {} entries, network needs {}", p.size(), num_params()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < net_.W.size(); ++l) {
    net_.W[l].reshaped() = p.segment(k, net_.W[l].size());
    k += net_.W[l].size();
    net_.b[l] = p.segment(k, net_.b[l].size());
    k += net_.b[l].size();
  }
}

Vec VectorFieldNet::eta(const Vec& z, double t) const {
  Vec e;
  detail::mlp_eval<double>(net_, z, t, e, nullptr);
  return e;
}

void VectorFieldNet::evaluate(const Vec& z, double t, Vec& f, Mat* jac) const {
  detail::NetFieldT<double>{m_, net_}(z, t, f, jac);
}

ScalingNet::ScalingNet(ManifoldSpec m, std::vector<Vec> centers, Vec sigma, Vec weights,
                       double eps)
    : m_(std::move(m)),
      centers_(std::move(centers)),
      sigma_(std::move(sigma)),
      w_(std::move(weights)),
      eps_(eps) {
  if (static_cast<std::size_t>(sigma_.size()) != centers_.size() ||
      static_cast<std::size_t>(w_.size()) != centers_.size())
    throw ValidationError("scaling net centers, widths and weights differ in length");
  for (Eigen::Index i = 0; i < sigma_.size(); ++i)
    if (!(sigma_[i] > 0.0)) throw ValidationError("scaling net widths must be positive");
}

ScalingNet ScalingNet::fit(const ManifoldSpec& m, const std::vector<Vec>& points, int n_centers,
                           std::mt19937_64& rng, int neighbors) {
  const int k = std::min<int>(n_centers, static_cast<int>(points.size()));
  if (k < 1) return ScalingNet(m, {}, Vec(), Vec());
  auto km = kmeans_manifold(m, points, k, rng);
  Vec sigma(k);
  for (int i = 0; i < k; ++i) {
    std::vector<double> d;
    for (int j = 0; j < k; ++j)
      if (j != i) d.push_back(m.distance(km.centers[i], km.centers[j]));
    if (d.empty()) {
      sigma[i] = 1.0;
      continue;
    }
    const std::size_t q = std::min<std::size_t>(neighbors, d.size());
    std::partial_sort(d.begin(), d.begin() + q, d.end());
    double s = 0.0;
    for (std::size_t j = 0; j < q; ++j) s += d[j];
    sigma[i] = std::max(1e-3, s / static_cast<double>(q));
  }
  return ScalingNet(m, std::move(km.centers), std::move(sigma), Vec::Zero(k));
}

void ScalingNet::set_weights(const Vec& w) {
  if (w.size() != w_.size()) throw ValidationError("scaling weight vector has the wrong length");
  w_ = w;
}

Vec ScalingNet::features(const Vec& x) const {
  Vec phi(centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const double r = m_.distance(x, centers_[i]) / sigma_[i];
    phi[i] = std::exp(-r * r);
  }
  return phi;
}

double ScalingNet::kappa(const Vec& x) const {
  if (centers_.empty()) return 0.0;
  return w_.dot(features(x));
}

double ScalingNet::eval(const Vec& x) const { return std::exp(kappa(x) + eps_); }

void adam_step(Vec& params, const Vec& grad, AdamState& s, double lr) {
  if (grad.size() != params.size()) throw ValidationError("adam: gradient shape mismatch");
  if (s.m.size() != params.size()) {
    s.m = Vec::Zero(params.size());
    s.v = Vec::Zero(params.size());
    s.t = 0;
  }
  ++s.t;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (Eigen::Index i = 0; i < params.size(); ++i)
    params[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
}

}  // namespace rsds
