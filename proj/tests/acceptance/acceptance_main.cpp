// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rsds/data.hpp"
#include "rsds/eval.hpp"
#include "rsds/io.hpp"
#include "test_util.hpp"

using namespace rsds;
using std::numbers::pi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // 0: no runtime limit
};

void print(const Verdict& v) {
  const bool in_time = v.budget <= 0.0 || v.seconds < v.budget;
  const std::string time = v.budget > 0.0 ? fmt::format("{:.1f} s of {:.0f} s", v.seconds, v.budget)
                                          : fmt::format("{:.1f} s", v.seconds);
  fmt::print("[{}] {}. {}: {} ({})\n", v.pass && in_time ? "PASS" : "FAIL", v.id, v.name, v.detail,
             time);
  std::fflush(stdout);
}

bool passed(const Verdict& v) { return v.pass && (v.budget <= 0.0 || v.seconds < v.budget); }

const ManifoldSpec S2 = ManifoldSpec::sphere(2);

// ------------------------------------------------------------------ geometry

Vec tangent_with_sphere_norm(const ManifoldSpec& m, const Vec& x, std::mt19937_64& rng,
                             double max_norm) {
  std::uniform_real_distribution<double> ud(0.0, max_norm);
  Vec u = test::random_tangent(m, x, rng, 1.0);
  for (const auto& b : m.blocks()) {
    if (!b.sphere) continue;
    auto ub = u.segment(b.offset, b.size);
    const double n = ub.norm();
    if (n > 0.0) ub *= ud(rng) / n;
  }
  return u;
}

Verdict geometry_kernel() {
  const auto t0 = Clock::now();
  double roundtrip = 0.0, isometry = 0.0, idempotency = 0.0;
  std::mt19937_64 rng(101);
  for (const auto& spec : {"S2", "S3", "R3xS3"}) {
    const ManifoldSpec m = ManifoldSpec::parse(spec);
    for (int i = 0; i < 10000; ++i) {
      const Vec x = m.sample_uniform(rng);
      const Vec u = tangent_with_sphere_norm(m, x, rng, pi - 0.1);
      const Vec y = m.exp(x, u);
      roundtrip = std::max(roundtrip, (m.log(x, y) - u).norm());
      const Vec a = test::random_tangent(m, x, rng, 1.0);
      const Vec b = test::random_tangent(m, x, rng, 1.0);
      const Vec ta = m.transport(x, y, a), tb = m.transport(x, y, b);
      isometry = std::max({isometry, std::abs(ta.norm() - a.norm()), std::abs(ta.dot(tb) - a.dot(b))});
      Vec w(m.ambient_dim());
      std::normal_distribution<double> nd;
      for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = nd(rng);
      const Vec pw = m.project(x, w);
      idempotency = std::max(idempotency, (m.project(x, pw) - pw).norm());
    }
  }
  Verdict v{1, "geometry kernel"};
  v.pass = roundtrip <= 1e-8 && isometry <= 1e-10 && idempotency <= 1e-12;
  v.detail = fmt::format(
      "exp/log roundtrip {:.2e} (<= 1e-8), transport isometry {:.2e} (<= 1e-10), projector "
      "idempotency {:.2e} (<= 1e-12) over 3 x 10^4 cases",
      roundtrip, isometry, idempotency);
  v.seconds = seconds_since(t0);
  v.budget = 10.0;
  return v;
}

// ------------------------------------------------------------- differentials

Mat fd_on_manifold(const ManifoldSpec& m, const std::function<Vec(const Vec&)>& g, const Vec& p,
                   const Mat& basis, double h) {
  Mat J(m.ambient_dim(), basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j)
    J.col(j) = (g(m.exp(p, h * basis.col(j))) - g(m.exp(p, -h * basis.col(j)))) / (2 * h);
  return J;
}

Verdict differential_correctness() {
  const auto t0 = Clock::now();
  double err_fwd = 0.0, err_bwd = 0.0, err_id = 0.0;
  std::mt19937_64 rng(202);
  const IntegrationConfig cfg;
  for (int k = 0; k < 20; ++k) {
    const ManifoldSpec m = ManifoldSpec::parse(k % 2 == 0 ? "S2" : "R3xS3");
    const VectorFieldNet net = VectorFieldNet::random(m, m == S2 ? 32 : 16, rng, 0.5);
    const Vec x = m.sample_uniform(rng);
    ChartSchedule sched;
    // D_x(psi) by the backward sweep against central differences of the flow.
    const PullbackResult d = flow_differential(m, net, x, cfg, nullptr, &sched);
    const Mat Tx = test::tangent_basis(m, x);
    const Mat fd = fd_on_manifold(
        m, [&](const Vec& p) { return flow_chartwise(m, net, p, cfg, &sched); }, x, Tx, 1e-5);
    err_bwd = std::max(err_bwd, test::rel_err(d.linmap * Tx, fd));
    // D_y(psi^-1) accumulated forward against differences of the discrete inverse.
    const PullbackResult f = flow_with_forward_differential(m, net, x, cfg, &sched);
    const Mat Ty = test::tangent_basis(m, f.endpoint);
    const Mat fdi = fd_on_manifold(
        m, [&](const Vec& y) { return flow_inverse_discrete(m, net, y, cfg, &sched); }, f.endpoint,
        Ty, 1e-5);
    err_fwd = std::max(err_fwd, test::rel_err(f.linmap * Ty, fdi));
    err_id = std::max(err_id, test::rel_err(f.linmap * d.linmap * Tx, Tx));
  }
  Verdict v{2, "differential correctness"};
  v.pass = err_fwd <= 1e-3 && err_bwd <= 1e-3 && err_id <= 1e-3;
  v.detail = fmt::format(
      "20 random nets on S2 and R3xS3: D psi vs FD {:.2e}, D psi^-1 vs FD {:.2e}, composition vs "
      "identity {:.2e} (all <= 1e-3)",
      err_bwd, err_fwd, err_id);
  v.seconds = seconds_since(t0);
  v.budget = 120.0;
  return v;
}

Verdict pullback_redundancy() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    RsdsModel model = RsdsModel::identity(S2, 32, S2.sample_uniform(rng), rng);
    model.net = VectorFieldNet::random(S2, 32, rng, 0.5);
    for (int i = 0; i < 10; ++i) {
      const Vec x = S2.sample_uniform(rng);
      const PullbackResult f = flow_with_forward_differential(S2, model.net, x, model.cfg);
      const Vec ydot = test::random_tangent(S2, f.endpoint, rng, 1.0);
      const Vec a = f.linmap * ydot;
      const Vec b = pullback_constrained(model, x, ydot);
      worst = std::max(worst, (a - b).norm() / a.norm());
    }
  }
  Verdict v{3, "pullback redundancy"};
  v.pass = worst <= 1e-4;
  v.detail = fmt::format("constrained vs forward pullback, max relative error {:.2e} over 100 "
                         "triples on S2 (<= 1e-4)",
                         worst);
  v.seconds = seconds_since(t0);
  v.budget = 60.0;
  return v;
}

// ----------------------------------------------------------- training runs

struct LetterRun {
  std::string letter;
  std::vector<Demonstration> demos, train_demos, held_out;
  RsdsModel model, zero;
  TrainResult train;
  double mse_before = 0.0, mse_after = 0.0;
  double dtwd_zero = 0.0, dtwd_trained = 0.0;
  double seconds = 0.0;
};

constexpr int kEpochs = 500;

TrainOptions recipe(std::uint64_t seed) {
  TrainOptions to;
  to.epochs = kEpochs;
  to.lr = 1e-3;
  to.decay_epoch = kEpochs / 2;
  to.decay_factor = 0.1;
  to.batch_size = 32;
  to.seed = seed;
  return to;
}

std::vector<Demonstration> letter_demos(LetterShape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<RawTrajectory> raw;
  for (const auto& t : generate_synthetic_letters(shape, 3, 0.05, rng)) raw.push_back(lowpass_filter(t, 2.0));
  return shift_to_common_goal(project_letters_to_sphere(raw, (Vec(3) << 0, 0, 1).finished(), 0.35));
}

constexpr int kReproSteps = 3000;
constexpr double kConvTol = 0.05;

LetterRun train_letter(LetterShape shape, std::uint64_t seed, bool baseline) {
  const auto t0 = Clock::now();
  LetterRun r;
  r.letter = to_string(shape);
  r.demos = letter_demos(shape, seed);
  r.train_demos.assign(r.demos.begin(), r.demos.end() - 1);
  r.held_out.assign(r.demos.end() - 1, r.demos.end());
  ModelOptions mo;
  mo.seed = seed;
  r.zero = baseline ? init_baseline(r.train_demos, mo) : init_model(r.train_demos, mo);
  r.model = r.zero;
  const auto samples = to_samples(r.train_demos);
  r.mse_before = loss_value(r.model, samples);
  r.train = train(r.model, samples, recipe(seed));
  r.mse_after = loss_value(r.model, samples);
  if (!baseline) {
    r.dtwd_zero = reproduction_dtwd(RsdsEvaluator(r.zero), r.held_out, kReproSteps, kConvTol).mean;
    r.dtwd_trained =
        reproduction_dtwd(RsdsEvaluator(r.model), r.held_out, kReproSteps, kConvTol).mean;
  }
  r.seconds = seconds_since(t0);
  return r;
}

SweepOptions sweep_options(std::uint64_t seed) {
  SweepOptions so;
  so.n = 1000;
  so.seed = seed;
  so.exclusion_radius = 0.1;
  so.conv_tol = kConvTol;
  return so;
}

RsdsModel random_model(std::mt19937_64& rng) {
  RsdsModel model = RsdsModel::identity(S2, 32, S2.sample_uniform(rng), rng);
  model.net = VectorFieldNet::random(S2, 32, rng, 0.5);
  std::vector<Vec> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(S2.sample_uniform(rng));
  model.scaling = ScalingNet::fit(S2, pts, 20, rng);
  std::normal_distribution<double> nd(0.0, 0.3);
  Vec w(model.scaling.num_params());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = nd(rng);
  model.scaling.set_weights(w);
  return model;
}

std::string describe(const SweepResult& s) {
  std::string out = fmt::format("{}/{} converged, {} rejected, {} lyapunov violations, residual {}\n",
                                s.n_converged, s.n_rollouts, s.n_rejected, s.n_lyapunov_violations,
                                format_number(s.max_manifold_residual));
  for (const auto& o : s.outcomes)
    out += fmt::format("{} {} {} {}\n", o.converged, o.lyapunov_ok, o.steps,
                       format_number(o.final_distance));
  return out;
}

std::string describe(const LetterRun& r) {
  std::string out = fmt::format("{}: mse {} -> {}, dtwd zero {} trained {}\n", r.letter,
                                format_number(r.mse_before), format_number(r.mse_after),
                                format_number(r.dtwd_zero), format_number(r.dtwd_trained));
  for (double l : r.train.loss_history) out += format_number(l) + "\n";
  return out;
}

struct Pipeline {
  LetterRun s, w, base;
  Verdict c4, c5, c6;
  std::string report;  // every number behind criteria 4 to 6
};

Pipeline run_pipeline() {
  Pipeline p;
  p.s = train_letter(LetterShape::S, 11, false);
  p.w = train_letter(LetterShape::W, 12, false);

  // Criterion 5: training reproduction.
  {
    Verdict& v = p.c5;
    v = {5, "training reproduction"};
    bool ok = true;
    std::string d;
    for (const LetterRun* r : {&p.s, &p.w}) {
      const double mse_ratio = r->mse_after / r->mse_before;
      const double dtwd_ratio = r->dtwd_trained / r->dtwd_zero;
      ok = ok && !r->train.aborted && mse_ratio <= 0.1 && dtwd_ratio <= 0.5;
      d += fmt::format("{}{}: mse ratio {:.3f} (<= 0.1), held-out dtwd {:.3f} vs zero-init {:.3f}, "
                       "ratio {:.3f} (<= 0.5){}",
                       d.empty() ? "" : "; ", r->letter, mse_ratio, r->dtwd_trained, r->dtwd_zero,
                       dtwd_ratio, r->train.aborted ? " [training aborted]" : "");
    }
    v.pass = ok;
    v.detail = fmt::format("{} epochs; {}", kEpochs, d);
    v.seconds = p.s.seconds + p.w.seconds;
    v.budget = 1800.0;
    p.report += describe(p.s) + describe(p.w);
  }

  // Criterion 4: stability sweeps on random and trained models.
  SweepResult w_sweep;
  {
    const auto t0 = Clock::now();
    Verdict& v = p.c4;
    v = {4, "stability by construction"};
    std::mt19937_64 rng(404);
    std::vector<RsdsModel> models;
    for (int k = 0; k < 5; ++k) models.push_back(random_model(rng));
    models.push_back(p.s.model);
    models.push_back(p.w.model);
    bool ok = true;
    std::string d;
    for (std::size_t k = 0; k < models.size(); ++k) {
      const RsdsEvaluator ev(models[k]);
      const SweepOptions so = sweep_options(500 + k);
      const SweepResult r = stability_sweep(ev, S2, rsds_exclusion(ev, so.exclusion_radius), so);
      ok = ok && r.success_rate() == 1.0 && r.n_lyapunov_violations == 0;
      d += fmt::format("{}{}", d.empty() ? "" : " ",
                       fmt::format("{}/{}{}", r.n_converged, r.n_rollouts,
                                   r.n_lyapunov_violations ? fmt::format(" ({} V-violations)",
                                                                         r.n_lyapunov_violations)
                                                           : ""));
      p.report += describe(r);
      if (k + 1 == models.size()) w_sweep = r;
    }
    v.pass = ok;
    v.detail = fmt::format("success per model (5 random, trained S, trained W): {}", d);
    v.seconds = seconds_since(t0);
    v.budget = 300.0;
  }

  // Criterion 6: baseline contrast on the W letter.
  {
    const auto t0 = Clock::now();
    Verdict& v = p.c6;
    v = {6, "baseline contrast"};
    p.base = train_letter(LetterShape::W, 12, true);
    const BaselineLaw free(p.base.model, S2, false);
    const BaselineLaw proj(p.base.model, S2, true);
    double leave = 0.0;
    RolloutOptions ro;
    ro.max_steps = kReproSteps;
    ro.conv_tol = kConvTol;
    for (const auto& d : p.w.demos) {
      ro.dt = d.dt;
      const Rollout r = rollout(free, d.points.front(), ro);
      for (const auto& x : r.x) leave = std::max(leave, S2.manifold_residual(x));
    }
    const SweepOptions so = sweep_options(600);
    const SweepResult pr =
        stability_sweep(proj, S2, antipode_exclusion(S2, p.base.model.goal, so.exclusion_radius), so);
    v.pass = leave > 0.01 && w_sweep.success_rate() >= pr.success_rate();
    v.detail = fmt::format(
        "unprojected baseline max | |x| - 1 | {:.3f} (> 0.01); W success RSDS {:.3f} vs projected "
        "baseline {:.3f}; baseline mse ratio {:.3f}",
        leave, w_sweep.success_rate(), pr.success_rate(), p.base.mse_after / p.base.mse_before);
    v.seconds = seconds_since(t0);
    v.budget = 1800.0;
    p.report += describe(p.base) + format_number(leave) + "\n" + describe(pr);
  }
  return p;
}

// ---------------------------------------------------------------- criteria 7, 8

Verdict magnitude_law(const RsdsModel& model) {
  const auto t0 = Clock::now();
  const int n = 1000;
  const double golden = pi * (3.0 - std::sqrt(5.0));
  double worst = 0.0;
  int checked = 0;
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    const Vec x = (Vec(3) << r * std::cos(golden * i), r * std::sin(golden * i), z).finished();
    if (S2.distance(x, model.goal) < 1e-9) continue;
    const double s = model.scaling.eval(x);
    worst = std::max(worst, std::abs(predict_velocity(model, x).norm() - s) / s);
    ++checked;
  }
  Verdict v{7, "magnitude law"};
  v.pass = worst <= 1e-10;
  v.detail = fmt::format("trained S model, {} grid points, max relative error {:.2e} (<= 1e-10)",
                         checked, worst);
  v.seconds = seconds_since(t0);
  return v;
}

Vec quat_about(const Eigen::Vector3d& axis, double angle) {
  return (Vec(4) << std::cos(angle / 2), std::sin(angle / 2) * axis.normalized()).finished();
}

Vec quat_mul(const Vec& a, const Vec& b) {
  Vec q(4);
  q[0] = a[0] * b[0] - a.tail(3).dot(b.tail(3));
  q.tail(3) = a[0] * b.tail(3) + b[0] * a.tail(3) +
              Eigen::Vector3d(a.tail(3)).cross(Eigen::Vector3d(b.tail(3)));
  return q;
}

Verdict pose_end_to_end() {
  const auto t0 = Clock::now();
  const ManifoldSpec pose = ManifoldSpec::parse("R3xS3");
  std::mt19937_64 rng(808);
  std::vector<Demonstration> demos;
  for (const auto& t : generate_synthetic_pose(3, 0.05, rng)) demos.push_back(make_demonstration(pose, t));
  demos = shift_to_common_goal(demos);
  const std::vector<Demonstration> train_demos(demos.begin(), demos.end() - 1);
  ModelOptions mo;
  mo.hidden = 16;
  mo.seed = 808;
  RsdsModel model = init_model(train_demos, mo);
  const auto samples = to_samples(train_demos);
  TrainOptions to = recipe(808);
  to.epochs = 300;
  to.decay_epoch = 150;
  const TrainResult tr = train(model, samples, to);

  RolloutOptions ro;
  ro.dt = 0.01;
  ro.max_steps = 20000;
  ro.conv_tol = kConvTol;
  const Vec start = demos.back().points.front();
  const Rollout plain = rollout(model, start, ro);
  ro.perturb_step = static_cast<int>(plain.x.size()) / 2;
  const Vec at = plain.x[ro.perturb_step];
  ro.perturb_to = at;
  ro.perturb_to.head(3) += Eigen::Vector3d(0.1, -0.1, 0.05);
  ro.perturb_to.tail(4) = quat_mul(quat_about({1, 0, 0}, 0.3), at.tail(4)).normalized();
  const Rollout r = rollout(model, start, ro);

  Verdict v{8, "product-manifold end to end"};
  const double jump = pose.distance(r.x[ro.perturb_step - 1], r.x[ro.perturb_step]);
  v.pass = !tr.aborted && tr.loss_history.back() < tr.loss_history.front() && r.converged &&
           r.failure.empty() && r.final_distance < kConvTol && r.perturbed_at == ro.perturb_step &&
           lyapunov_decreasing(r);
  v.detail = fmt::format(
      "R3xS3, {} epochs, loss {:.4f} -> {:.4f}; perturbed at step {} (jump {:.3f}), converged {}, "
      "final distance {:.4f} (< {}) after {} steps",
      to.epochs, tr.loss_history.front(), tr.loss_history.back(), ro.perturb_step, jump,
      r.converged, r.final_distance, kConvTol, r.x.size() - 1);
  v.seconds = seconds_since(t0);
  v.budget = 1200.0;
  return v;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const Verdict& v) {
    print(v);
    failures += !passed(v);
  };
  report(geometry_kernel());
  report(differential_correctness());
  report(pullback_redundancy());

  const Pipeline first = run_pipeline();
  report(first.c4);
  report(first.c5);
  report(first.c6);
  report(magnitude_law(first.s.model));
  report(pose_end_to_end());

  const auto t0 = Clock::now();
  const Pipeline second = run_pipeline();
  Verdict v{9, "determinism"};
  v.pass = first.report == second.report;
  v.detail = fmt::format("criteria 4-6 rerun with the same seeds: reports {} ({} bytes, {:016x} vs {:016x})",
                         v.pass ? "byte-identical" : "differ", first.report.size(),
                         fnv1a(first.report), fnv1a(second.report));
  v.seconds = seconds_since(t0);
  report(v);

  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures;
}
