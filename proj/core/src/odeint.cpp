#include "rsds/odeint.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rsds/detail/chart_flow.hpp"

namespace rsds {

using detail::ChartTrace;
using detail::FlowOptions;

void IntegrationConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw ValidationError(fmt::format("step_size must be positive, got {}", step_size));
  if (num_charts < 1)
    throw ValidationError(fmt::format("num_charts must be >= 1, got {}", num_charts));
  if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end))
    throw ValidationError(fmt::format("need t_start < t_end, got [{}, {}]", t_start, t_end));
}

int IntegrationConfig::steps_per_chart() const {
  const long s = std::lround(chart_length() / step_size);
  return static_cast<int>(std::max(1L, s));
}

namespace {

struct FieldRef {
  const TimeField& f;
  void operator()(const Vec& z, double t, Vec& out, Mat* jac) const { f.evaluate(z, t, out, jac); }
};

Vec run(const ManifoldSpec& m, const TimeField& field, const Vec& x0, const IntegrationConfig& cfg,
        FlowOptions<double>& opt) {
  cfg.validate();
  m.check_point(x0, "flow start point");
  return detail::chart_flow<double>(m, FieldRef{field}, x0, cfg, opt);
}

// Inverts the Euler steps of one chart exactly.
Vec invert_chart(const ManifoldSpec& m, const FieldRef& field, const Vec& b, const Vec& z_out,
                 double t0, double h, int steps) {
  Vec w = detail::chart_log<double>(m, b, z_out, nullptr);
  for (int j = steps - 1; j >= 0; --j) {
    const double t = t0 + j * h;
    const Vec target = w;
    Vec wj = target - h * detail::chart_velocity<double>(m, field, b, target, t, nullptr);
    for (int it = 0; it < 200; ++it) {
      detail::check_overflow<double>(m, wj);
      Vec next = target - h * detail::chart_velocity<double>(m, field, b, wj, t, nullptr);
      const double delta = (next - wj).norm();
      wj = std::move(next);
      if (delta <= 1e-15 * (1.0 + wj.norm())) break;
    }
    w = std::move(wj);
  }
  return m.retract(detail::chart_exp<double>(m, b, w, nullptr));
}

}  // namespace

Vec flow_chartwise(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                   const IntegrationConfig& cfg, const ChartSchedule* frozen,
                   ChartSchedule* record) {
  FlowOptions<double> opt;
  opt.frozen = frozen;
  opt.record = record;
  return run(m, field, x0, cfg, opt);
}

Vec flow_projection(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                    const IntegrationConfig& cfg) {
  cfg.validate();
  m.check_point(x0, "flow start point");
  const int steps = cfg.steps_per_chart() * cfg.num_charts;
  const double h = (cfg.t_end - cfg.t_start) / steps;
  Vec z = x0;
  for (int j = 0; j < steps; ++j) z = m.retract(z + h * field.value(z, cfg.t_start + j * h));
  return z;
}

Vec flow_inverse(const ManifoldSpec& m, const TimeField& field, const Vec& y,
                 const IntegrationConfig& cfg) {
  FlowOptions<double> opt;
  opt.reverse = true;
  return run(m, field, y, cfg, opt);
}

Vec flow_inverse_discrete(const ManifoldSpec& m, const TimeField& field, const Vec& y,
                          const IntegrationConfig& cfg, const ChartSchedule* frozen) {
  cfg.validate();
  m.check_point(y, "flow end point");
  const int k = cfg.num_charts;
  if (frozen && static_cast<int>(frozen->size()) != k)
    throw ValidationError("chart schedule size does not match num_charts");
  const int steps = cfg.steps_per_chart();
  const double L = cfg.chart_length();
  const double h = L / steps;
  const FieldRef ref{field};
  Vec z = y;
  for (int i = k - 1; i >= 0; --i) {
    const double t0 = cfg.t_start + i * L;
    if (frozen) {
      z = invert_chart(m, ref, (*frozen)[i], z, t0, h, steps);
      continue;
    }
    Vec b = z;
    Vec x = b;
    for (int it = 0; it < 100; ++it) {
      x = invert_chart(m, ref, b, z, t0, h, steps);
      const double delta = m.distance(x, b);
      b = x;
      if (delta <= 1e-14) break;
    }
    z = x;
  }
  return z;
}

PullbackResult flow_with_forward_differential(const ManifoldSpec& m, const TimeField& field,
                                              const Vec& x0, const IntegrationConfig& cfg,
                                              const ChartSchedule* frozen,
                                              ChartSchedule* record) {
  FlowOptions<double> opt;
  Mat A;
  opt.frozen = frozen;
  opt.record = record;
  opt.pullback = &A;
  PullbackResult r;
  r.endpoint = run(m, field, x0, cfg, opt);
  r.linmap = std::move(A);
  return r;
}

PullbackResult flow_differential(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                                 const IntegrationConfig& cfg, const ChartSchedule* frozen,
                                 ChartSchedule* record) {
  FlowOptions<double> opt;
  std::vector<ChartTrace<double>> trace;
  opt.frozen = frozen;
  opt.record = record;
  opt.trace = &trace;
  PullbackResult r;
  r.endpoint = run(m, field, x0, cfg, opt);
  r.linmap = detail::backward_sweep<double>(m, trace);
  return r;
}

PullbackResult flow_with_backward_differential(const ManifoldSpec& m, const TimeField& field,
                                               const Vec& y_end, const IntegrationConfig& cfg) {
  const Vec x = flow_inverse_discrete(m, field, y_end, cfg);
  PullbackResult r = flow_differential(m, field, x, cfg);
  r.endpoint = x;
  return r;
}

Mat dexp(const ManifoldSpec& m, const Vec& base, const Vec& w) {
  detail::check_overflow<double>(m, w);
  Mat E;
  detail::chart_exp<double>(m, base, w, &E);
  return E;
}

Mat dlog(const ManifoldSpec& m, const Vec& base, const Vec& z) {
  Mat G;
  detail::chart_log<double>(m, base, z, &G);
  return G;
}

}  // namespace rsds
