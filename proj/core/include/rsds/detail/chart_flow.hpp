#pragma once

// Scalar-generic dynamic-chart Euler integrator.
//
// Field is callable as field(z, t, f, J*) with VecT<S>/MatT<S> arguments.

#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "rsds/detail/chart_geometry.hpp"
#include "rsds/errors.hpp"
#include "rsds/manifold.hpp"
#include "rsds/odeint.hpp"

namespace rsds::detail {

template <class S>
struct ChartTrace {
  VecT<S> base;
  VecT<S> z_in;
  VecT<S> w_end;
  std::vector<MatT<S>> K;  // I + h DF per step
};

template <class S>
struct FlowOptions {
  const ChartSchedule* frozen = nullptr;
  ChartSchedule* record = nullptr;
  MatT<S>* pullback = nullptr;                 // D(psi^{-1}) accumulated forward
  std::vector<ChartTrace<S>>* trace = nullptr;  // per-step factors for D(psi)
  bool reverse = false;                         // reversed-time integration
};

// Chart coordinates -> manifold point, plus D Exp if requested.
template <class S>
VecT<S> chart_exp(const ManifoldSpec& m, const VecT<S>& b, const VecT<S>& w, MatT<S>* E) {
  const Eigen::Index n = b.size();
  VecT<S> z(n);
  if (E) E->setZero(n, n);
  for (const auto& blk : m.blocks()) {
    auto bb = b.segment(blk.offset, blk.size);
    auto wb = w.segment(blk.offset, blk.size);
    if (blk.sphere) {
      const auto k = exp_coeffs<S>(wb.squaredNorm());
      z.segment(blk.offset, blk.size) = sphere_exp<S>(bb, wb, k);
      if (E) E->block(blk.offset, blk.offset, blk.size, blk.size) = sphere_dexp<S>(bb, wb, k);
    } else {
      z.segment(blk.offset, blk.size) = bb + wb;
      if (E)
        E->block(blk.offset, blk.offset, blk.size, blk.size).setIdentity();
    }
  }
  return z;
}

template <class S>
VecT<S> chart_log(const ManifoldSpec& m, const VecT<S>& b, const VecT<S>& z, MatT<S>* G) {
  const Eigen::Index n = b.size();
  VecT<S> w(n);
  if (G) G->setZero(n, n);
  for (const auto& blk : m.blocks()) {
    auto bb = b.segment(blk.offset, blk.size);
    auto zb = z.segment(blk.offset, blk.size);
    if (blk.sphere) {
      const S c = bb.dot(zb);
      if (value(c) < std::cos(std::numbers::pi - kChartOverflowMargin))
        throw ChartOverflowError(
            "state left the chart injectivity region; increase num_charts");
      const auto lc = log_coeffs<S>(c);
      w.segment(blk.offset, blk.size) = sphere_log_ext<S>(bb, zb, lc);
      if (G) {
        MatT<S> P = MatT<S>::Identity(blk.size, blk.size) - zb * zb.transpose();
        G->block(blk.offset, blk.offset, blk.size, blk.size) = sphere_dlog<S>(bb, zb, lc) * P;
      }
    } else {
      w.segment(blk.offset, blk.size) = zb - bb;
      if (G) G->block(blk.offset, blk.offset, blk.size, blk.size).setIdentity();
    }
  }
  return w;
}

template <class S>
VecT<S> retract_t(const ManifoldSpec& m, VecT<S> z) {
  using std::sqrt;
  for (const auto& blk : m.blocks()) {
    if (!blk.sphere) continue;
    const S nrm = sqrt(z.segment(blk.offset, blk.size).squaredNorm());
    if (!(value(nrm) > 0.0)) throw DegenerateError("zero sphere block during retraction");
    for (int i = 0; i < blk.size; ++i) z[blk.offset + i] = z[blk.offset + i] / nrm;
  }
  return z;
}

template <class S>
MatT<S> projector_t(const ManifoldSpec& m, const VecT<S>& z) {
  const Eigen::Index n = z.size();
  MatT<S> P = MatT<S>::Identity(n, n);
  for (const auto& blk : m.blocks()) {
    if (!blk.sphere) continue;
    auto zb = z.segment(blk.offset, blk.size);
    P.block(blk.offset, blk.offset, blk.size, blk.size) -= zb * zb.transpose();
  }
  return P;
}

template <class S>
void check_overflow(const ManifoldSpec& m, const VecT<S>& w) {
  for (const auto& blk : m.blocks()) {
    if (!blk.sphere) continue;
    const double nw = std::sqrt(value(w.segment(blk.offset, blk.size).squaredNorm()));
    if (!(nw < std::numbers::pi - kChartOverflowMargin))
      throw ChartOverflowError(fmt::format(
          "chart coordinate norm {:.4g} reached the injectivity limit; increase num_charts", nw));
  }
}

// Chart velocity F(w) = D Log_b(z) f(z, t) at z = Exp_b(w), and dF/dw.
template <class S, class Field>
VecT<S> chart_velocity(const ManifoldSpec& m, const Field& field, const VecT<S>& b,
                       const VecT<S>& w, double t, MatT<S>* DF) {
  const Eigen::Index n = b.size();
  MatT<S> E;
  VecT<S> z = chart_exp<S>(m, b, w, DF ? &E : nullptr);
  VecT<S> f;
  MatT<S> J;
  field(z, t, f, DF ? &J : nullptr);
  VecT<S> F(n);
  MatT<S> GJH;
  if (DF) GJH.resize(n, n);
  for (const auto& blk : m.blocks()) {
    const int o = blk.offset, s = blk.size;
    if (!blk.sphere) {
      F.segment(o, s) = f.segment(o, s);
      if (DF) GJH.middleRows(o, s) = J.middleRows(o, s);
      continue;
    }
    auto bb = b.segment(o, s);
    auto zb = z.segment(o, s);
    auto fb = f.segment(o, s);
    const auto lc = log_coeffs<S>(bb.dot(zb));
    MatT<S> G = sphere_dlog<S>(bb, zb, lc);
    F.segment(o, s) = G * fb;
    if (DF) {
      GJH.middleRows(o, s) = G * J.middleRows(o, s);
      GJH.block(o, o, s, s) += sphere_d2log<S>(bb, zb, fb, lc);
    }
  }
  if (DF) {
    DF->resize(n, n);
    for (const auto& blk : m.blocks())
      DF->middleCols(blk.offset, blk.size) =
          GJH.middleCols(blk.offset, blk.size) *
          E.block(blk.offset, blk.offset, blk.size, blk.size);
  }
  return F;
}

template <class S, class Field>
VecT<S> chart_flow(const ManifoldSpec& m, const Field& field, VecT<S> z,
                   const IntegrationConfig& cfg, FlowOptions<S>& opt) {
  const Eigen::Index n = z.size();
  const int k = cfg.num_charts;
  const int steps = cfg.steps_per_chart();
  const double L = cfg.chart_length();
  const double h = L / steps;
  const bool need_jac = opt.pullback || opt.trace;
  if (opt.frozen && static_cast<int>(opt.frozen->size()) != k)
    throw ValidationError("chart schedule size does not match num_charts");
  if (opt.record) opt.record->clear();
  if (opt.pullback) opt.pullback->setIdentity(n, n);
  if (opt.trace) opt.trace->clear();

  for (int ci = 0; ci < k; ++ci) {
    const int i = opt.reverse ? k - 1 - ci : ci;
    VecT<S> b;
    VecT<S> w;
    if (opt.frozen) {
      b = cast_vec<S>((*opt.frozen)[i]);
      w = chart_log<S>(m, b, z, nullptr);
      check_overflow<S>(m, w);
    } else {
      b = z;
      w = VecT<S>::Zero(n);
    }
    if (opt.record) opt.record->push_back(values<S>(b));
    ChartTrace<S>* tr = nullptr;
    if (opt.trace) {
      opt.trace->push_back({b, z, {}, {}});
      tr = &opt.trace->back();
      tr->K.reserve(steps);
    }
    if (opt.pullback) {
      MatT<S> E;
      chart_exp<S>(m, b, w, &E);
      *opt.pullback = (*opt.pullback * E).eval();
    }
    const double t0 = cfg.t_start + i * L;
    for (int j = 0; j < steps; ++j) {
      MatT<S> DF;
      if (opt.reverse) {
        const double t = t0 + L - j * h;
        w = w - h * chart_velocity<S>(m, field, b, w, t, nullptr);
      } else {
        const double t = t0 + j * h;
        VecT<S> F = chart_velocity<S>(m, field, b, w, t, need_jac ? &DF : nullptr);
        if (need_jac) {
          MatT<S> K = MatT<S>::Identity(n, n) + h * DF;
          if (opt.pullback) *opt.pullback = right_solve<S>(*opt.pullback, K);
          if (tr) tr->K.push_back(std::move(K));
        }
        w = w + h * F;
      }
      check_overflow<S>(m, w);
    }
    if (tr) tr->w_end = w;
    z = retract_t<S>(m, chart_exp<S>(m, b, w, nullptr));
    if (opt.pullback) {
      MatT<S> G;
      chart_log<S>(m, b, z, &G);
      *opt.pullback = (*opt.pullback * G).eval();
    }
  }
  return z;
}

// D(psi) from a forward trace: product over charts of
// DExp(w_end) * K_{m-1} ... K_0 * DLog(z_in).
template <class S>
MatT<S> backward_sweep(const ManifoldSpec& m, const std::vector<ChartTrace<S>>& trace) {
  const Eigen::Index n = m.ambient_dim();
  MatT<S> A = MatT<S>::Identity(n, n);
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
    MatT<S> E;
    chart_exp<S>(m, it->base, it->w_end, &E);
    A = (A * E).eval();
    for (auto kt = it->K.rbegin(); kt != it->K.rend(); ++kt) A = (A * *kt).eval();
    MatT<S> G;
    chart_log<S>(m, it->base, it->z_in, &G);
    A = (A * G).eval();
  }
  return A;
}

}  // namespace rsds::detail
