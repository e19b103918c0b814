#pragma once

#include <random>
#include <vector>

#include "rsds/detail/mlp.hpp"
#include "rsds/manifold.hpp"
#include "rsds/odeint.hpp"

namespace rsds {

// Time-dependent MLP eta(z, t) with widths [n+1, h, ..., h, n], tanh hidden
// layers, linear output, followed by projection onto T_z.
class VectorFieldNet : public TimeField {
 public:
  VectorFieldNet() = default;
  // All parameters zero.
  VectorFieldNet(ManifoldSpec m, int hidden, int hidden_layers = 3);

  // Xavier-uniform weights, zero biases. With zero_last the output layer is
  // zero and the flow is the identity.
  static VectorFieldNet xavier(ManifoldSpec m, int hidden, std::mt19937_64& rng,
                               bool zero_last = true, int hidden_layers = 3);
  // Every layer random, biases included; output scaled by out_scale.
  static VectorFieldNet random(ManifoldSpec m, int hidden, std::mt19937_64& rng,
                               double out_scale = 1.0, int hidden_layers = 3);

  const ManifoldSpec& manifold() const { return m_; }
  std::vector<int> widths() const;
  int hidden() const { return static_cast<int>(net_.W.front().rows()); }

  std::size_t num_params() const;
  Vec parameters() const;
  void set_parameters(const Vec& p);

  const detail::MlpT<double>& mlp() const { return net_; }
  detail::MlpT<double>& mlp() { return net_; }

  Vec eta(const Vec& z, double t) const;
  void evaluate(const Vec& z, double t, Vec& f, Mat* jac) const override;

 private:
  ManifoldSpec m_;
  detail::MlpT<double> net_;
};

// k(x) = exp(sum_i w_i exp(-(d(x, c_i)/sigma_i)^2) + eps).
class ScalingNet {
 public:
  ScalingNet() = default;
  ScalingNet(ManifoldSpec m, std::vector<Vec> centers, Vec sigma, Vec weights,
             double eps = 1e-8);

  // Centers by kmeans_manifold, sigma_i = mean distance to the
  // `neighbors` nearest other centers, zero weights.
  static ScalingNet fit(const ManifoldSpec& m, const std::vector<Vec>& points, int n_centers,
                        std::mt19937_64& rng, int neighbors = 5);

  const ManifoldSpec& manifold() const { return m_; }
  const std::vector<Vec>& centers() const { return centers_; }
  const Vec& sigma() const { return sigma_; }
  const Vec& weights() const { return w_; }
  void set_weights(const Vec& w);
  double epsilon() const { return eps_; }
  std::size_t num_params() const { return static_cast<std::size_t>(w_.size()); }

  Vec features(const Vec& x) const;
  double kappa(const Vec& x) const;
  double eval(const Vec& x) const;

 private:
  ManifoldSpec m_;
  std::vector<Vec> centers_;
  Vec sigma_;
  Vec w_;
  double eps_ = 1e-8;
};

struct ParamGradient {
  Vec theta;  // VectorFieldNet::parameters() layout
  Vec gamma;  // ScalingNet weights
};

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr);

}  // namespace rsds
