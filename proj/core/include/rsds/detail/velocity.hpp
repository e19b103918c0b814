#pragma once

#include <cmath>
#include <numbers>

#include "rsds/detail/chart_flow.hpp"

namespace rsds::detail {

inline constexpr double kEquilibriumTol = 1e-10;
inline constexpr double kDegeneratePullback = 1e-12;

// Log_y(y*) normalized; zero at the equilibrium. Writes d(y, y*)^2.
template <class S>
VecT<S> geodesic_direction(const ManifoldSpec& m, const VecT<S>& y, const VecT<S>& ystar,
                           S* sqdist) {
  using std::sqrt;
  const Eigen::Index n = y.size();
  VecT<S> g(n);
  for (const auto& blk : m.blocks()) {
    const int o = blk.offset, s = blk.size;
    auto yb = y.segment(o, s);
    auto sb = ystar.segment(o, s);
    if (!blk.sphere) {
      g.segment(o, s) = sb - yb;
      continue;
    }
    const S c = yb.dot(sb);
    if (value(c) < std::cos(std::numbers::pi - kCutLocusMargin))
      throw CutLocusError("latent point is antipodal to the latent attractor");
    g.segment(o, s) = sphere_log_ext<S>(yb, sb, log_coeffs<S>(c));
  }
  const S d2 = g.squaredNorm();
  if (sqdist) *sqdist = d2;
  if (value(d2) < kEquilibriumTol * kEquilibriumTol) return VecT<S>::Zero(n);
  return g / sqrt(d2);
}

// khat * normalize(proj_x(D(psi^{-1}) g_n(psi(x)))).
template <class S, class Field>
VecT<S> velocity_t(const ManifoldSpec& m, const Field& field, const IntegrationConfig& cfg,
                   const VecT<S>& x, const VecT<S>& ystar, const S& khat, S* lyapunov) {
  using std::sqrt;
  FlowOptions<S> opt;
  MatT<S> A;
  opt.pullback = &A;
  const VecT<S> y = chart_flow<S>(m, field, x, cfg, opt);
  S d2;
  const VecT<S> g = geodesic_direction<S>(m, y, ystar, &d2);
  if (lyapunov) *lyapunov = d2;
  const Eigen::Index n = x.size();
  if (value(d2) < kEquilibriumTol * kEquilibriumTol) return VecT<S>::Zero(n);
  VecT<S> v = A * g;
  for (const auto& blk : m.blocks()) {
    if (!blk.sphere) continue;
    auto xb = x.segment(blk.offset, blk.size);
    const S d = xb.dot(v.segment(blk.offset, blk.size));
    v.segment(blk.offset, blk.size) -= d * xb;
  }
  const S nv = sqrt(v.squaredNorm());
  if (!(value(nv) >= kDegeneratePullback))
    throw DegenerateError("pullback of the canonical direction vanished; the learned map is "
                          "singular at solver accuracy");
  return v * (khat / nv);
}

}  // namespace rsds::detail
