#include "rsds/rsds.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rsds/detail/velocity.hpp"

namespace rsds {

RsdsModel RsdsModel::identity(const ManifoldSpec& spec, int hidden, const Vec& goal,
                              std::mt19937_64& rng, const IntegrationConfig& cfg) {
  RsdsModel m;
  m.spec = spec;
  m.net = VectorFieldNet::xavier(spec, hidden, rng, true);
  m.scaling = ScalingNet(spec, {}, Vec(), Vec());
  m.goal = goal;
  m.cfg = cfg;
  m.validate();
  return m;
}

void RsdsModel::validate() const {
  cfg.validate();
  spec.check_point(goal, "goal");
  if (!(net.manifold() == spec))
    throw ValidationError("diffeomorphism network was built for a different manifold");
  if (!scaling.centers().empty() && scaling.manifold().ambient_dim() != spec.ambient_dim())
    throw ValidationError("scaling network dimension does not match the manifold");
}

namespace {

detail::NetFieldT<double> field_of(const RsdsModel& m) { return {m.spec, m.net.mlp()}; }

Vec run_forward(const RsdsModel& m, const Vec& x) {
  detail::FlowOptions<double> opt;
  return detail::chart_flow<double>(m.spec, field_of(m), x, m.cfg, opt);
}

}  // namespace

RsdsEvaluator::RsdsEvaluator(const RsdsModel& model) : model_(&model) {
  model.validate();
  ystar_ = run_forward(model, model.goal);
}

Vec RsdsEvaluator::forward(const Vec& x) const {
  model_->spec.check_point(x, "input point");
  return run_forward(*model_, x);
}

Vec RsdsEvaluator::velocity(const Vec& x, double* lyapunov) const {
  const RsdsModel& m = *model_;
  m.spec.check_point(x, "query point");
  const double k = m.scaling.eval(x);
  return detail::velocity_t<double>(m.spec, field_of(m), m.cfg, x, ystar_, k, lyapunov);
}

double RsdsEvaluator::lyapunov(const Vec& x) const {
  double d2 = 0.0;
  detail::geodesic_direction<double>(model_->spec, forward(x), ystar_, &d2);
  return d2;
}

Vec forward_diffeo(const RsdsModel& model, const Vec& x) {
  model.spec.check_point(x, "input point");
  return run_forward(model, x);
}

Vec canonical_direction(const ManifoldSpec& m, const Vec& y, const Vec& ystar) {
  return detail::geodesic_direction<double>(m, y, ystar, nullptr);
}

Vec predict_velocity(const RsdsModel& model, const Vec& x) {
  return RsdsEvaluator(model).velocity(x);
}

double lyapunov_value(const RsdsModel& model, const Vec& x) {
  return RsdsEvaluator(model).lyapunov(x);
}

Vec pullback_constrained(const RsdsModel& model, const Vec& x, const Vec& ydot) {
  if (!model.spec.is_single_sphere())
    throw ValidationError("constrained pullback is defined for a single sphere only");
  model.spec.check_point(x, "query point");
  const PullbackResult d = flow_differential(model.spec, model.net, x, model.cfg);
  const Mat& D = d.linmap;
  const Mat M = D.transpose() * D + x * x.transpose();
  Eigen::JacobiSVD<Mat> svd(M);
  const auto& sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 0.0) || sv[0] / sv[sv.size() - 1] > 1e12)
    throw DegenerateError("augmented pullback matrix is singular (condition number > 1e12)");
  const Vec v = M.ldlt().solve(D.transpose() * ydot);
  return model.spec.project(x, v);
}

Rollout rollout(const VelocityLaw& law, const Vec& x0, const RolloutOptions& opt) {
  const ManifoldSpec& sp = law.space();
  sp.check_point(x0, "rollout start");
  if (!(opt.dt > 0.0)) throw ValidationError("rollout dt must be positive");
  if (opt.max_steps < 0) throw ValidationError("rollout max_steps must be >= 0");
  if (opt.perturb_step >= 0) sp.check_point(opt.perturb_to, "perturbation target");

  Rollout r;
  Vec x = x0;
  for (int k = 0;; ++k) {
    if (k == opt.perturb_step && k > 0) {
      x = opt.perturb_to;
      r.perturbed_at = k;
    }
    double V = 0.0;
    Vec v;
    try {
      v = law.velocity(x, law.has_lyapunov() ? &V : nullptr);
    } catch (const NumericalError& e) {
      r.t.push_back(k * opt.dt);
      r.x.push_back(x);
      r.xdot.push_back(Vec::Zero(x.size()));
      r.failure = e.what();
      r.final_distance = sp.distance(x, law.goal());
      return r;
    }
    r.t.push_back(k * opt.dt);
    r.x.push_back(x);
    r.xdot.push_back(v);
    if (law.has_lyapunov()) r.lyapunov.push_back(V);
    r.final_distance = sp.distance(x, law.goal());
    if (r.final_distance < opt.conv_tol) {
      r.converged = true;
      return r;
    }
    if (k >= opt.max_steps) return r;
    try {
      x = sp.exp(x, opt.dt * v);
    } catch (const NumericalError& e) {
      r.failure = e.what();
      return r;
    }
  }
}

Rollout rollout(const RsdsModel& model, const Vec& x0, const RolloutOptions& opt) {
  RsdsEvaluator ev(model);
  return rollout(ev, x0, opt);
}

bool lyapunov_decreasing(const Rollout& r, double slack) {
  for (std::size_t k = 1; k < r.lyapunov.size(); ++k) {
    if (static_cast<int>(k) == r.perturbed_at) continue;
    if (!(r.lyapunov[k] < r.lyapunov[k - 1] + slack)) return false;
  }
  return true;
}

}  // namespace rsds
