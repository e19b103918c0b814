#include "rsds/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rsds/io.hpp"
#include "rsds/parallel.hpp"

namespace rsds {

using json = nlohmann::ordered_json;

VelocityMse velocity_mse(const VelocityLaw& law, const std::vector<Demonstration>& demos) {
  VelocityMse r;
  double sum = 0.0, worst = 0.0;
  for (const auto& d : demos)
    for (std::size_t i = 0; i < d.size(); ++i) {
      ++r.n_points;
      try {
        const double e = (law.velocity(d.points[i], nullptr) - d.velocities[i]).squaredNorm();
        if (!std::isfinite(e)) {
          ++r.n_flagged;
          continue;
        }
        sum += e;
        worst = std::max(worst, e);
      } catch (const NumericalError&) {
        ++r.n_flagged;
      }
    }
  if (r.n_points == 0) throw ValidationError("no demonstration points to evaluate");
  r.mse = (sum + r.n_flagged * worst) / r.n_points;
  return r;
}

double dtwd(const std::vector<Vec>& a, const std::vector<Vec>& b, const ManifoldSpec& spec) {
  if (a.empty() || b.empty()) throw ValidationError("dtwd of an empty trajectory");
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = spec.distance(a[i - 1], b[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    std::swap(prev, cur);
  }
  return prev[m];
}

BaselineLaw::BaselineLaw(const RsdsModel& euclidean_model, ManifoldSpec data_spec, bool projected)
    : eval_(euclidean_model),
      data_spec_(std::move(data_spec)),
      ambient_(ManifoldSpec::euclidean(data_spec_.ambient_dim())),
      projected_(projected) {
  if (!(euclidean_model.spec == ambient_))
    throw ValidationError("baseline model must live on the ambient Euclidean space");
}

Vec BaselineLaw::velocity(const Vec& x, double*) const {
  const Vec v = eval_.velocity(x);
  return projected_ ? data_spec_.project(x, v) : v;
}

namespace {

ScalingNet fit_scaling(const ManifoldSpec& m, const std::vector<Demonstration>& demos,
                       int centers, std::mt19937_64& rng) {
  std::vector<Vec> pts;
  for (const auto& d : demos) pts.insert(pts.end(), d.points.begin(), d.points.end());
  return ScalingNet::fit(m, pts, centers, rng);
}

}  // namespace

RsdsModel init_model(const std::vector<Demonstration>& demos, const ModelOptions& opt) {
  if (demos.empty()) throw ValidationError("no demonstrations");
  std::mt19937_64 rng(opt.seed);
  const ManifoldSpec& m = demos.front().spec;
  RsdsModel model = RsdsModel::identity(m, opt.hidden, common_goal(demos), rng, opt.cfg);
  model.scaling = fit_scaling(m, demos, opt.rbf_centers, rng);
  return model;
}

RsdsModel init_baseline(const std::vector<Demonstration>& demos, const ModelOptions& opt) {
  if (demos.empty()) throw ValidationError("no demonstrations");
  std::mt19937_64 rng(opt.seed);
  const ManifoldSpec m = ManifoldSpec::euclidean(demos.front().spec.ambient_dim());
  RsdsModel model = RsdsModel::identity(m, opt.hidden, common_goal(demos), rng, opt.cfg);
  model.scaling = fit_scaling(m, demos, opt.rbf_centers, rng);
  return model;
}

ExclusionTest rsds_exclusion(const RsdsEvaluator& ev, double radius) {
  const RsdsModel& model = ev.model();
  const ManifoldSpec& m = model.spec;
  const Vec ystar = ev.latent_goal();
  if (m.is_single_sphere()) {
    const Vec anti = flow_inverse_discrete(m, model.net, -ystar, model.cfg);
    return [m, anti, radius](const Vec& x) { return m.distance(x, anti) < radius; };
  }
  return [&ev, m, ystar, radius](const Vec& x) {
    Vec y;
    try {
      y = ev.forward(x);
    } catch (const NumericalError&) {
      return true;
    }
    for (const auto& b : m.blocks()) {
      if (!b.sphere) continue;
      const auto yb = y.segment(b.offset, b.size);
      const auto sb = ystar.segment(b.offset, b.size);
      const double d = 2.0 * std::atan2((yb + sb).norm(), (yb - sb).norm());
      if (d < radius) return true;
    }
    return false;
  };
}

ExclusionTest antipode_exclusion(const ManifoldSpec& spec, const Vec& goal, double radius) {
  return [spec, goal, radius](const Vec& x) {
    for (const auto& b : spec.blocks()) {
      if (!b.sphere) continue;
      const auto xb = x.segment(b.offset, b.size);
      const auto gb = goal.segment(b.offset, b.size);
      if (2.0 * std::atan2((xb + gb).norm(), (xb - gb).norm()) < radius) return true;
    }
    return false;
  };
}

SweepResult stability_sweep(const VelocityLaw& law, const ManifoldSpec& sample_space,
                            const ExclusionTest& exclude, const SweepOptions& opt) {
  if (opt.n < 1) throw ValidationError("sweep needs at least one start");
  SweepResult res;
  std::mt19937_64 rng(opt.seed);
  std::vector<Vec> starts;
  while (static_cast<int>(starts.size()) < opt.n) {
    Vec x = sample_space.sample_uniform(rng, opt.box_lo, opt.box_hi);
    if (exclude && exclude(x)) {
      ++res.n_rejected;
      if (res.n_rejected > 100 * opt.n)
        throw ValidationError("exclusion test rejects nearly every start");
      continue;
    }
    starts.push_back(std::move(x));
  }
  RolloutOptions ro;
  ro.dt = opt.dt;
  ro.max_steps = opt.max_steps;
  ro.conv_tol = opt.conv_tol;
  res.outcomes.resize(opt.n);
  std::vector<double> resid(opt.n, 0.0);
  parallel_for(opt.n, opt.threads, [&](int i, int) {
    const Rollout r = rollout(law, starts[i], ro);
    SweepOutcome& o = res.outcomes[i];
    o.start = starts[i];
    o.converged = r.converged && r.failure.empty();
    o.lyapunov_ok = lyapunov_decreasing(r, opt.lyapunov_slack);
    o.steps = static_cast<int>(r.x.size()) - 1;
    o.final_distance = r.final_distance;
    o.failure = r.failure;
    for (const auto& x : r.x) resid[i] = std::max(resid[i], sample_space.manifold_residual(x));
  });
  res.n_rollouts = opt.n;
  for (int i = 0; i < opt.n; ++i) {
    res.n_converged += res.outcomes[i].converged;
    res.n_lyapunov_violations += !res.outcomes[i].lyapunov_ok;
    res.max_manifold_residual = std::max(res.max_manifold_residual, resid[i]);
  }
  return res;
}

DtwdResult reproduction_dtwd(const VelocityLaw& law, const std::vector<Demonstration>& demos,
                             int max_steps, double conv_tol) {
  DtwdResult out;
  for (const auto& d : demos) {
    RolloutOptions ro;
    ro.dt = d.dt > 0.0 ? d.dt : 0.01;
    ro.max_steps = max_steps;
    ro.conv_tol = conv_tol;
    const Rollout r = rollout(law, d.points.front(), ro);
    out.per_demo.push_back(dtwd(r.x, d.points, law.space()));
  }
  double s = 0.0;
  for (double v : out.per_demo) s += v;
  out.mean = out.per_demo.empty() ? 0.0 : s / static_cast<double>(out.per_demo.size());
  return out;
}

std::string MetricsReport::to_json() const {
  json j;
  j["model"] = model;
  j["velocity_mse"] = mse.mse;
  j["mse_points"] = mse.n_points;
  j["mse_flagged"] = mse.n_flagged;
  j["dtwd"] = {{"per_demo", dtwd.per_demo}, {"mean", dtwd.mean}};
  if (has_sweep) {
    j["success_rate"] = sweep.success_rate();
    j["n_rollouts"] = sweep.n_rollouts;
    j["n_converged"] = sweep.n_converged;
    j["n_rejected"] = sweep.n_rejected;
    j["n_lyapunov_violations"] = sweep.n_lyapunov_violations;
    j["max_manifold_residual"] = sweep.max_manifold_residual;
    j["sweep"] = {{"n", sweep_options.n},
                  {"seed", sweep_options.seed},
                  {"dt", sweep_options.dt},
                  {"max_steps", sweep_options.max_steps},
                  {"conv_tol", sweep_options.conv_tol},
                  {"exclusion_radius", sweep_options.exclusion_radius}};
  }
  try {
    j["config"] = json::parse(config_json);
  } catch (const json::exception&) {
    throw ValidationError("report config is not valid JSON");
  }
  return j.dump(1) + "\n";
}

std::string MetricsReport::csv_header() {
  return "model,velocity_mse,mse_flagged,dtwd_mean,success_rate,n_rollouts,n_converged,"
         "n_lyapunov_violations,max_manifold_residual,sweep_seed,conv_tol,max_steps\n";
}

std::string MetricsReport::csv_row() const {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", model, format_number(mse.mse),
                     mse.n_flagged, format_number(dtwd.mean),
                     has_sweep ? format_number(sweep.success_rate()) : "",
                     has_sweep ? sweep.n_rollouts : 0, has_sweep ? sweep.n_converged : 0,
                     has_sweep ? sweep.n_lyapunov_violations : 0,
                     has_sweep ? format_number(sweep.max_manifold_residual) : "",
                     sweep_options.seed, format_number(sweep_options.conv_tol),
                     sweep_options.max_steps);
}

}  // namespace rsds
