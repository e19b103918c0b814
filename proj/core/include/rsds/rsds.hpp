#pragma once

#include <random>
#include <string>
#include <vector>

#include "rsds/manifold.hpp"
#include "rsds/netfield.hpp"
#include "rsds/odeint.hpp"

namespace rsds {

struct RsdsModel {
  ManifoldSpec spec;
  VectorFieldNet net;
  ScalingNet scaling;
  Vec goal;
  IntegrationConfig cfg;

  // Identity diffeomorphism (zero output layer) and unit scaling.
  static RsdsModel identity(const ManifoldSpec& spec, int hidden, const Vec& goal,
                            std::mt19937_64& rng, const IntegrationConfig& cfg = {});
  void validate() const;
};

// Anything that produces a velocity field to roll out.
class VelocityLaw {
 public:
  virtual ~VelocityLaw() = default;
  // Space the state lives in; rollouts step with its exp map.
  virtual const ManifoldSpec& space() const = 0;
  virtual const Vec& goal() const = 0;
  // Writes a Lyapunov value when the law has one.
  virtual Vec velocity(const Vec& x, double* lyapunov) const = 0;
  virtual bool has_lyapunov() const { return false; }
};

// Evaluates a model with its latent attractor y* = psi(goal) cached.
class RsdsEvaluator : public VelocityLaw {
 public:
  explicit RsdsEvaluator(const RsdsModel& model);

  const RsdsModel& model() const { return *model_; }
  const Vec& latent_goal() const { return ystar_; }

  Vec forward(const Vec& x) const;
  Vec velocity(const Vec& x, double* lyapunov = nullptr) const override;
  double lyapunov(const Vec& x) const;

  const ManifoldSpec& space() const override { return model_->spec; }
  const Vec& goal() const override { return model_->goal; }
  bool has_lyapunov() const override { return true; }

 private:
  const RsdsModel* model_;
  Vec ystar_;
};

Vec forward_diffeo(const RsdsModel& model, const Vec& x);
Vec canonical_direction(const ManifoldSpec& m, const Vec& y, const Vec& ystar);
Vec predict_velocity(const RsdsModel& model, const Vec& x);
double lyapunov_value(const RsdsModel& model, const Vec& x);

// [D^T D + x x^T]^{-1} D^T ydot with D = D_x(psi). Single sphere only.
Vec pullback_constrained(const RsdsModel& model, const Vec& x, const Vec& ydot);

struct RolloutOptions {
  double dt = 0.01;
  int max_steps = 1000;
  double conv_tol = 0.05;
  int perturb_step = -1;  // overwrite the state with perturb_to at this step
  Vec perturb_to;
};

struct Rollout {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> xdot;
  std::vector<double> lyapunov;  // empty unless the law has one
  bool converged = false;
  double final_distance = 0.0;
  int perturbed_at = -1;
  std::string failure;  // set when a numerical error ended the rollout
};

Rollout rollout(const VelocityLaw& law, const Vec& x0, const RolloutOptions& opt);
Rollout rollout(const RsdsModel& model, const Vec& x0, const RolloutOptions& opt);

// True if the Lyapunov trace decreases at every step up to `slack`,
// ignoring the step across a perturbation.
bool lyapunov_decreasing(const Rollout& r, double slack = 1e-8);

}  // namespace rsds
