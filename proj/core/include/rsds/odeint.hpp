#pragma once

#include <vector>

#include "rsds/manifold.hpp"

namespace rsds {

enum class Solver { Euler };

struct IntegrationConfig {
  double step_size = 1.0 / 32.0;
  int num_charts = 4;
  double t_start = 0.0;
  double t_end = 1.0;
  Solver solver = Solver::Euler;

  void validate() const;
  double chart_length() const { return (t_end - t_start) / num_charts; }
  // Steps per chart; the realized step is chart_length() / steps_per_chart().
  int steps_per_chart() const;
};

// Time-dependent tangent field f(z, t) on a manifold.
class TimeField {
 public:
  virtual ~TimeField() = default;
  // f(z, t) and optionally its ambient Jacobian df/dz.
  virtual void evaluate(const Vec& z, double t, Vec& f, Mat* jac) const = 0;

  Vec value(const Vec& z, double t) const {
    Vec f;
    evaluate(z, t, f, nullptr);
    return f;
  }
  Mat jacobian(const Vec& z, double t) const {
    Vec f;
    Mat j;
    evaluate(z, t, f, &j);
    return j;
  }
};

struct PullbackResult {
  Vec endpoint;
  Mat linmap;
};

// Chart base points, one per chart. Recording the schedule of one flow and
// replaying it freezes the charts, which makes the discrete flow a smooth map
// whose differentials are exactly the ones returned below.
using ChartSchedule = std::vector<Vec>;

// Dynamic-chart Euler flow over [t_start, t_end]. Chart i is centred at the
// state entering it unless `frozen` supplies the bases.
Vec flow_chartwise(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                   const IntegrationConfig& cfg, const ChartSchedule* frozen = nullptr,
                   ChartSchedule* record = nullptr);

// Ambient Euler step followed by retraction.
Vec flow_projection(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                    const IntegrationConfig& cfg);

// Chart-wise Euler integration of the reversed-time problem. Inverts
// flow_chartwise up to O(step_size).
Vec flow_inverse(const ManifoldSpec& m, const TimeField& field, const Vec& y,
                 const IntegrationConfig& cfg);

// Exact inverse of the discrete map realized by flow_chartwise (each Euler
// step and each moving chart base solved by fixed-point iteration).
Vec flow_inverse_discrete(const ManifoldSpec& m, const TimeField& field, const Vec& y,
                          const IntegrationConfig& cfg, const ChartSchedule* frozen = nullptr);

// Endpoint y = psi(x0) and the pullback D_y(psi^{-1}) accumulated forward.
PullbackResult flow_with_forward_differential(const ManifoldSpec& m, const TimeField& field,
                                              const Vec& x0, const IntegrationConfig& cfg,
                                              const ChartSchedule* frozen = nullptr,
                                              ChartSchedule* record = nullptr);

// Differential D_x(psi) at x0 via the backward sweep; endpoint = psi(x0).
PullbackResult flow_differential(const ManifoldSpec& m, const TimeField& field, const Vec& x0,
                                 const IntegrationConfig& cfg,
                                 const ChartSchedule* frozen = nullptr,
                                 ChartSchedule* record = nullptr);

// Starting from the end value y, recovers x = psi^{-1}(y) and returns
// D_x(psi) at it; endpoint = x.
PullbackResult flow_with_backward_differential(const ManifoldSpec& m, const TimeField& field,
                                               const Vec& y_end, const IntegrationConfig& cfg);

// Differentials of the chart maps in ambient coordinates, tangent
// projectors included: D_w Exp_base(w) and D_z Log_base(z).
Mat dexp(const ManifoldSpec& m, const Vec& base, const Vec& w);
Mat dlog(const ManifoldSpec& m, const Vec& base, const Vec& z);

inline constexpr double kChartOverflowMargin = 0.1;

}  // namespace rsds
