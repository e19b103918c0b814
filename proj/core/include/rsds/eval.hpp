#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsds/data.hpp"
#include "rsds/rsds.hpp"

namespace rsds {

struct VelocityMse {
  double mse = 0.0;
  int n_points = 0;
  int n_flagged = 0;  // points whose prediction raised a numerical error
};

// Mean over all demo points of ||v_pred - v_demo||^2. Points that raise a
// numerical error are charged the largest finite error observed.
VelocityMse velocity_mse(const VelocityLaw& law, const std::vector<Demonstration>& demos);

// Dynamic time warping with geodesic local cost and unit steps
// (match / insert / delete); unnormalized accumulated cost.
double dtwd(const std::vector<Vec>& a, const std::vector<Vec>& b, const ManifoldSpec& spec);

// EuclideanFlow: an RsdsModel on the ambient Euclidean space evaluated on
// data that lives on `data_spec`. With `projected` the velocity is projected
// onto T_x and rollouts step with the data manifold's exp map; otherwise the
// state moves freely in R^n.
class BaselineLaw : public VelocityLaw {
 public:
  BaselineLaw(const RsdsModel& euclidean_model, ManifoldSpec data_spec, bool projected);
  const ManifoldSpec& space() const override { return projected_ ? data_spec_ : ambient_; }
  const Vec& goal() const override { return eval_.goal(); }
  Vec velocity(const Vec& x, double* lyapunov) const override;
  bool projected() const { return projected_; }
  const ManifoldSpec& data_spec() const { return data_spec_; }

 private:
  RsdsEvaluator eval_;
  ManifoldSpec data_spec_;
  ManifoldSpec ambient_;
  bool projected_;
};

struct ModelOptions {
  int hidden = 32;
  int rbf_centers = 50;
  IntegrationConfig cfg;
  std::uint64_t seed = 0;
};

// Identity-initialized RSDS model with an RBF scaling net fitted on the
// demo points; goal = common demo goal.
RsdsModel init_model(const std::vector<Demonstration>& demos, const ModelOptions& opt);

// Same shapes on the ambient Euclidean space (Euclidean RBF distances).
RsdsModel init_baseline(const std::vector<Demonstration>& demos, const ModelOptions& opt);

struct SweepOptions {
  int n = 1000;
  std::uint64_t seed = 0;
  double dt = 0.02;
  int max_steps = 3000;
  double conv_tol = 0.05;
  double exclusion_radius = 0.1;
  double box_lo = -1.0;  // sampling box for Euclidean blocks
  double box_hi = 1.0;
  double lyapunov_slack = 1e-8;
  int threads = 0;
};

struct SweepOutcome {
  Vec start;
  bool converged = false;
  bool lyapunov_ok = true;
  int steps = 0;
  double final_distance = 0.0;
  std::string failure;
};

struct SweepResult {
  int n_rollouts = 0;
  int n_converged = 0;
  int n_rejected = 0;  // samples discarded by the exclusion test
  int n_lyapunov_violations = 0;
  double max_manifold_residual = 0.0;  // on the data manifold, over all states
  std::vector<SweepOutcome> outcomes;
  double success_rate() const { return n_rollouts ? double(n_converged) / n_rollouts : 0.0; }
};

using ExclusionTest = std::function<bool(const Vec&)>;

// Excludes starts near the pre-image of the latent cut locus: on a single
// sphere, d(x, psi^{-1}(-y*)) < r; on products, any sphere block of psi(x)
// within r of the antipode of the matching block of y*.
ExclusionTest rsds_exclusion(const RsdsEvaluator& ev, double radius);
// Excludes starts within r of the goal's antipode on every sphere block.
ExclusionTest antipode_exclusion(const ManifoldSpec& spec, const Vec& goal, double radius);

// Seeded uniform starts on `sample_space` (rejection against `exclude`),
// one rollout each. Outcomes are stored in sampling order.
SweepResult stability_sweep(const VelocityLaw& law, const ManifoldSpec& sample_space,
                            const ExclusionTest& exclude, const SweepOptions& opt);

struct DtwdResult {
  std::vector<double> per_demo;
  double mean = 0.0;
};

// Rolls out from each demo's first point (dt = demo dt, horizon max_steps)
// and compares against the demo with dtwd on `metric_space`.
DtwdResult reproduction_dtwd(const VelocityLaw& law, const std::vector<Demonstration>& demos,
                             int max_steps, double conv_tol);

struct MetricsReport {
  std::string model;  // "rsds", "euclidean_flow", "projected_euclidean_flow"
  VelocityMse mse;
  DtwdResult dtwd;
  SweepResult sweep;
  SweepOptions sweep_options;
  bool has_sweep = false;
  std::string config_json = "{}";  // echoed run configuration

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace rsds
