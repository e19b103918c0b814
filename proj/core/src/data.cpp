#include "rsds/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rsds/io.hpp"

namespace rsds {

using json = nlohmann::ordered_json;
using std::numbers::pi;

void RawTrajectory::validate() const {
  if (t.empty()) throw ValidationError("trajectory has no samples");
  if (t.size() != states.size())
    throw ValidationError(fmt::format("trajectory has {} timestamps but {} states", t.size(),
                                      states.size()));
  const Eigen::Index d = states.front().size();
  if (d == 0) throw ValidationError("trajectory states are empty");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (states[i].size() != d)
      throw ValidationError(fmt::format("sample {}: state has {} entries, expected {}", i,
                                        states[i].size(), d));
    if (!std::isfinite(t[i]) || !states[i].allFinite())
      throw ValidationError(fmt::format("sample {}: non-finite value", i));
    if (i > 0 && !(t[i] > t[i - 1]))
      throw ValidationError(fmt::format("sample {}: timestamps not strictly increasing", i));
  }
}

void Demonstration::validate(double tol) const {
  if (points.empty()) throw ValidationError("demonstration has no points");
  if (t.size() != points.size() || velocities.size() != points.size())
    throw ValidationError("demonstration arrays differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    spec.check_point(points[i], fmt::format("demo point {}", i), tol);
    if (velocities[i].size() != points[i].size())
      throw ValidationError(fmt::format("demo velocity {} has the wrong dimension", i));
    if (spec.tangency_residual(points[i], velocities[i]) > tol * (1.0 + velocities[i].norm()))
      throw ValidationError(fmt::format("demo velocity {} is not tangent", i));
    if (i > 0 && !(t[i] > t[i - 1]))
      throw ValidationError(fmt::format("demo sample {}: timestamps not strictly increasing", i));
  }
}

// ---------------------------------------------------------------- CSV / JSON

namespace {

double parse_number(std::string_view s, int row) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ValidationError(fmt::format("row {}: cannot parse '{}' as a number", row, s));
  return v;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::vector<RawTrajectory> parse_trajectories_csv(const std::string& text) {
  std::vector<RawTrajectory> out;
  RawTrajectory cur;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  int width = -1;
  auto flush = [&] {
    if (!cur.t.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++row;
    std::string_view s(line);
    if (blank(s)) {
      flush();
      continue;
    }
    const auto first = s.find_first_not_of(" \t");
    if (s[first] == '#') continue;
    if (s[first] == 't' || s[first] == 'T') continue;  // header
    std::vector<double> vals;
    std::size_t pos = 0;
    while (true) {
      const auto comma = s.find(',', pos);
      vals.push_back(parse_number(s.substr(pos, comma - pos), row));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (vals.size() < 2)
      throw ValidationError(fmt::format("row {}: need a time and at least one state column", row));
    if (width < 0) width = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != width)
      throw ValidationError(
          fmt::format("row {}: {} columns, expected {}", row, vals.size(), width));
    for (double v : vals)
      if (!std::isfinite(v)) throw ValidationError(fmt::format("row {}: non-finite value", row));
    if (!cur.t.empty() && !(vals[0] > cur.t.back()))
      throw ValidationError(fmt::format("row {}: timestamps not strictly increasing", row));
    cur.t.push_back(vals[0]);
    cur.states.push_back(Eigen::Map<const Vec>(vals.data() + 1, width - 1));
  }
  flush();
  if (out.empty()) throw ValidationError("no trajectories");
  return out;
}

std::vector<RawTrajectory> parse_trajectories_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!j.contains("trajectories") || !j["trajectories"].is_array())
    throw ValidationError("JSON container needs a 'trajectories' array");
  std::vector<RawTrajectory> out;
  try {
    for (const auto& jt : j["trajectories"]) {
      RawTrajectory r;
      r.t = jt.at("t").get<std::vector<double>>();
      for (const auto& s : jt.at("states")) {
        const auto v = s.get<std::vector<double>>();
        r.states.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      try {
        r.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("trajectory {}: {}", out.size(), e.what()));
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed trajectory JSON: {}", e.what()));
  }
  if (out.empty()) throw ValidationError("no trajectories");
  return out;
}

std::string format_trajectories_csv(const std::vector<RawTrajectory>& trajs) {
  std::string out;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& r = trajs[k];
    r.validate();
    if (k == 0) {
      out += "t";
      for (Eigen::Index i = 0; i < r.states.front().size(); ++i) out += fmt::format(",x{}", i);
      out += "\n";
    } else {
      out += "\n";
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += fmt::format("{:.17g}", r.t[i]);
      for (double v : r.states[i]) out += fmt::format(",{:.17g}", v);
      out += "\n";
    }
  }
  return out;
}

std::vector<RawTrajectory> load_trajectories(const std::filesystem::path& path,
                                             TrajectoryFormat format) {
  const std::string text = read_file(path);
  if (format == TrajectoryFormat::Auto)
    format = path.extension() == ".json" ? TrajectoryFormat::Json : TrajectoryFormat::Csv;
  try {
    return format == TrajectoryFormat::Json ? parse_trajectories_json(text)
                                            : parse_trajectories_csv(text);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_trajectories(const std::filesystem::path& path, const std::vector<RawTrajectory>& trajs) {
  write_file_atomic(path, format_trajectories_csv(trajs));
}

// ---------------------------------------------------------------- filtering

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

std::vector<double> lfilter(const Biquad& f, const std::vector<double>& x) {
  // Direct form II transposed, initial state at steady state for x[0].
  double z1 = (1.0 - f.b0) * x[0];
  double z2 = (f.b2 - f.a2) * x[0];
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = f.b0 * x[i] + z1;
    z1 = f.b1 * x[i] - f.a1 * y[i] + z2;
    z2 = f.b2 * x[i] - f.a2 * y[i];
  }
  return y;
}

std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  const int pad = std::min(6, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = n - 2; i >= n - 1 - pad; --i) ext.push_back(2.0 * x[n - 1] - x[i]);
  std::vector<double> y = lfilter(f, ext);
  std::reverse(y.begin(), y.end());
  y = lfilter(f, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + pad, y.begin() + pad + n};
}

}  // namespace

RawTrajectory lowpass_filter(const RawTrajectory& traj, double cutoff_hz) {
  traj.validate();
  const std::size_t n = traj.size();
  if (n < 7) throw ValidationError(fmt::format("low-pass filter needs >= 7 samples, got {}", n));
  const double fs = static_cast<double>(n - 1) / (traj.t.back() - traj.t.front());
  if (!(cutoff_hz > 0.0)) throw ValidationError("filter cutoff must be positive");
  if (cutoff_hz >= 0.5 * fs)
    throw ValidationError(
        fmt::format("filter cutoff {} Hz is not below the Nyquist frequency {} Hz", cutoff_hz,
                    0.5 * fs));
  const double K = std::tan(pi * cutoff_hz / fs);
  const double s2 = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + s2 * K + K * K);
  Biquad f;
  f.b0 = K * K * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (K * K - 1.0) * norm;
  f.a2 = (1.0 - s2 * K + K * K) * norm;

  RawTrajectory out = traj;
  const Eigen::Index d = traj.states.front().size();
  std::vector<double> col(n);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = traj.states[i][c];
    const auto y = filtfilt(f, col);
    for (std::size_t i = 0; i < n; ++i) out.states[i][c] = y[i];
  }
  return out;
}

// ---------------------------------------------------------------- demos

void attach_velocities(Demonstration& demo) {
  const std::size_t n = demo.points.size();
  demo.velocities.assign(n, Vec::Zero(demo.spec.ambient_dim()));
  for (std::size_t i = 0; i + 1 < n; ++i)
    demo.velocities[i] =
        demo.spec.log(demo.points[i], demo.points[i + 1]) / (demo.t[i + 1] - demo.t[i]);
  demo.dt = n > 1 ? (demo.t.back() - demo.t.front()) / static_cast<double>(n - 1) : 0.0;
}

Demonstration make_demonstration(const ManifoldSpec& spec, const RawTrajectory& traj) {
  traj.validate();
  if (traj.states.front().size() != spec.ambient_dim())
    throw ValidationError(fmt::format("trajectory has {} coordinates, {} needs {}",
                                      traj.states.front().size(), spec.to_string(),
                                      spec.ambient_dim()));
  Demonstration d;
  d.spec = spec;
  d.t = traj.t;
  for (const auto& s : traj.states) d.points.push_back(spec.retract(s));
  attach_velocities(d);
  return d;
}

std::vector<Demonstration> project_letters_to_sphere(const std::vector<RawTrajectory>& trajs,
                                                     const Vec& base, double scale) {
  const ManifoldSpec S2 = ManifoldSpec::sphere(2);
  S2.check_point(base, "projection base");
  if (trajs.empty()) throw ValidationError("no trajectories");
  const double radius = scale * pi / 2.0;
  if (!(scale > 0.0)) throw ValidationError("projection scale must be positive");
  if (radius >= pi - kCutLocusMargin)
    throw ValidationError(fmt::format(
        "scaled letter radius {} exceeds the injectivity disk of radius pi", radius));
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(INFINITY), hi = -lo;
  for (const auto& r : trajs) {
    r.validate();
    if (r.states.front().size() != 2)
      throw ValidationError("letter projection expects planar (2-D) trajectories");
    for (const auto& s : r.states) {
      lo = lo.cwiseMin(Eigen::Vector2d(s));
      hi = hi.cwiseMax(Eigen::Vector2d(s));
    }
  }
  const Eigen::Vector2d center = 0.5 * (lo + hi);
  double R = 0.0;
  for (const auto& r : trajs)
    for (const auto& s : r.states) R = std::max(R, (Eigen::Vector2d(s) - center).norm());
  const double factor = R > 0.0 ? radius / R : 0.0;

  // Tangent frame at the base: the least aligned axis, projected.
  Eigen::Index axis = 0;
  base.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d e1 = Eigen::Vector3d::Unit(axis);
  const Eigen::Vector3d b(base);
  e1 = (e1 - e1.dot(b) * b).normalized();
  const Eigen::Vector3d e2 = b.cross(e1);

  std::vector<Demonstration> out;
  for (const auto& r : trajs) {
    Demonstration d;
    d.spec = S2;
    d.t = r.t;
    for (const auto& s : r.states) {
      const Eigen::Vector2d p = factor * (Eigen::Vector2d(s) - center);
      const Vec u = p[0] * e1 + p[1] * e2;
      d.points.push_back(S2.exp(base, u));
    }
    attach_velocities(d);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Demonstration> shift_to_common_goal(const std::vector<Demonstration>& demos) {
  if (demos.empty()) throw ValidationError("no demonstrations to align");
  const ManifoldSpec& m = demos.front().spec;
  std::vector<Vec> ends;
  for (const auto& d : demos) {
    if (!(d.spec == m)) throw ValidationError("demonstrations live on different manifolds");
    if (d.points.empty()) throw ValidationError("demonstration has no points");
    ends.push_back(d.points.back());
  }
  const auto& blocks = m.blocks();
  for (std::size_t a = 0; a < ends.size(); ++a)
    for (std::size_t b = a + 1; b < ends.size(); ++b) {
      const auto bd = m.block_distances(ends[a], ends[b]);
      for (std::size_t k = 0; k < blocks.size(); ++k)
        if (blocks[k].sphere && bd[k] > pi / 2)
          throw ValidationError(fmt::format(
              "demo goals {} and {} are {:.3g} rad apart on a sphere block (limit pi/2)", a, b,
              bd[k]));
    }
  bool aligned = true;
  for (const auto& e : ends) aligned = aligned && m.distance(e, ends.front()) <= 1e-12;
  const Vec goal = aligned ? ends.front() : karcher_mean(m, ends);
  std::vector<Demonstration> out = demos;
  for (auto& d : out) {
    const Vec e = d.points.back();
    if (m.distance(e, goal) <= 1e-12) continue;
    for (auto& x : d.points) x = m.exp(goal, m.transport(e, goal, m.log(e, x)));
    d.points.back() = goal;
    attach_velocities(d);
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

LetterShape parse_letter_shape(const std::string& id) {
  if (id == "S" || id == "s") return LetterShape::S;
  if (id == "W" || id == "w") return LetterShape::W;
  if (id == "P" || id == "p") return LetterShape::P;
  throw ValidationError(fmt::format("unknown letter shape '{}' (expected S, W or P)", id));
}

std::string to_string(LetterShape s) {
  switch (s) {
    case LetterShape::S:
      return "S";
    case LetterShape::W:
      return "W";
    case LetterShape::P:
      return "P";
  }
  return "?";
}

namespace {

// Chaikin corner cutting, endpoints kept.
std::vector<Vec> chaikin(std::vector<Vec> pts, int rounds) {
  for (int r = 0; r < rounds; ++r) {
    std::vector<Vec> next{pts.front()};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      next.push_back(0.75 * pts[i] + 0.25 * pts[i + 1]);
      next.push_back(0.25 * pts[i] + 0.75 * pts[i + 1]);
    }
    next.push_back(pts.back());
    pts = std::move(next);
  }
  return pts;
}

// Arc-length parametrized polyline.
class Polyline {
 public:
  explicit Polyline(std::vector<Vec> pts) : pts_(std::move(pts)) {
    s_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i)
      s_.push_back(s_.back() + (pts_[i] - pts_[i - 1]).norm());
  }
  Vec at(double u) const {
    const double target = std::clamp(u, 0.0, 1.0) * s_.back();
    auto it = std::upper_bound(s_.begin(), s_.end(), target);
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - s_.begin(), 1),
                                                pts_.size() - 1);
    const double seg = s_[i] - s_[i - 1];
    const double a = seg > 0.0 ? (target - s_[i - 1]) / seg : 0.0;
    return (1.0 - a) * pts_[i - 1] + a * pts_[i];
  }

 private:
  std::vector<Vec> pts_;
  std::vector<double> s_;
};

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

Polyline letter_curve(LetterShape shape) {
  std::vector<Vec> pts;
  switch (shape) {
    case LetterShape::S:
      for (int i = 0; i <= 400; ++i) {
        const double s = i / 400.0;
        pts.push_back(v2(-0.8 * std::sin(2.0 * pi * s), 1.0 - 2.0 * s));
      }
      return Polyline(pts);
    case LetterShape::W:
      pts = {v2(-1.0, 1.0), v2(-0.65, -1.0), v2(-0.3, 0.5),
             v2(0.05, -1.0), v2(0.4, 0.5),   v2(0.7, -0.2)};
      return Polyline(chaikin(pts, 3));
    case LetterShape::P:
      pts.push_back(v2(-0.4, -1.0));
      for (int i = 0; i <= 200; ++i) {
        const double phi = pi / 2 - pi * i / 200.0;
        pts.push_back(v2(-0.4 + 0.5 * std::cos(phi), 0.5 + 0.5 * std::sin(phi)));
      }
      return Polyline(chaikin(pts, 2));
  }
  throw ValidationError("unknown letter shape");
}

double min_jerk(double tau) { return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau); }

// c + sum_k a_k sin(k pi s), all coefficients drawn once per demo.
struct SmoothNoise {
  Vec c;
  std::vector<Vec> a;
  SmoothNoise(int dim, double noise, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    c = Vec(dim);
    for (auto& v : c) v = 0.3 * noise * nd(rng);
    for (int k = 1; k <= 3; ++k) {
      Vec ak(dim);
      for (auto& v : ak) v = 0.5 * noise / k * nd(rng);
      a.push_back(ak);
    }
  }
  Vec at(double s) const {
    Vec out = c;
    for (std::size_t k = 0; k < a.size(); ++k)
      out += std::sin(static_cast<double>(k + 1) * pi * s) * a[k];
    return out;
  }
};

void check_synthetic(int n_demos, double noise, const SyntheticOptions& opt) {
  if (n_demos < 1) throw ValidationError("need at least one demo");
  if (!(noise >= 0.0)) throw ValidationError("noise must be non-negative");
  if (opt.n_samples < 2) throw ValidationError("need at least two samples per demo");
  if (!(opt.dt > 0.0)) throw ValidationError("sampling period must be positive");
}

}  // namespace

std::vector<RawTrajectory> generate_synthetic_letters(LetterShape shape, int n_demos, double noise,
                                                      std::mt19937_64& rng,
                                                      const SyntheticOptions& opt) {
  check_synthetic(n_demos, noise, opt);
  const Polyline curve = letter_curve(shape);
  std::vector<RawTrajectory> out;
  for (int d = 0; d < n_demos; ++d) {
    const SmoothNoise nz(2, noise, rng);
    RawTrajectory r;
    for (int i = 0; i < opt.n_samples; ++i) {
      const double s = min_jerk(i / static_cast<double>(opt.n_samples - 1));
      r.t.push_back(i * opt.dt);
      r.states.push_back(curve.at(s) + nz.at(s));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawTrajectory> generate_synthetic_pose(int n_demos, double noise, std::mt19937_64& rng,
                                                   const SyntheticOptions& opt) {
  check_synthetic(n_demos, noise, opt);
  const Polyline vpath(chaikin({v3(-0.3, 0.2, 0.5), v3(0.0, 0.0, 0.1), v3(0.3, 0.2, 0.5)}, 3));
  const Eigen::Quaterniond q0 = Eigen::Quaterniond::Identity();
  const Eigen::Quaterniond q1(Eigen::AngleAxisd(pi / 2, Eigen::Vector3d::UnitZ()));
  std::vector<RawTrajectory> out;
  for (int d = 0; d < n_demos; ++d) {
    const SmoothNoise np(3, noise, rng);
    const SmoothNoise nr(3, noise, rng);
    RawTrajectory r;
    for (int i = 0; i < opt.n_samples; ++i) {
      const double s = min_jerk(i / static_cast<double>(opt.n_samples - 1));
      const Vec p = vpath.at(s) + 0.5 * np.at(s);
      const Eigen::Vector3d rv = 0.5 * nr.at(s);
      Eigen::Quaterniond q = q0.slerp(s, q1);
      if (rv.norm() > 0.0) q = q * Eigen::Quaterniond(Eigen::AngleAxisd(rv.norm(), rv.normalized()));
      if (q.w() < 0.0) q.coeffs() *= -1.0;
      Vec st(7);
      st << p, q.w(), q.x(), q.y(), q.z();
      r.t.push_back(i * opt.dt);
      r.states.push_back(st);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Sample> to_samples(const std::vector<Demonstration>& demos) {
  std::vector<Sample> out;
  for (const auto& d : demos)
    for (std::size_t i = 0; i < d.size(); ++i) out.push_back({d.points[i], d.velocities[i]});
  return out;
}

Vec common_goal(const std::vector<Demonstration>& demos) {
  if (demos.empty() || demos.front().points.empty())
    throw ValidationError("no demonstrations to take a goal from");
  const Vec g = demos.front().points.back();
  for (const auto& d : demos)
    if (d.spec.distance(d.points.back(), g) > 1e-9)
      throw ValidationError("demonstrations do not share a common goal; shift them first");
  return g;
}

// ---------------------------------------------------------------- demo JSON

std::string format_demos_json(const std::vector<Demonstration>& demos) {
  if (demos.empty()) throw ValidationError("no demonstrations to write");
  json j;
  j["spec"] = demos.front().spec.to_string();
  double dt = 0.0;
  for (const auto& d : demos) dt += d.dt;
  j["dt"] = dt / static_cast<double>(demos.size());
  json arr = json::array();
  for (const auto& d : demos) {
    json jd = json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
      json s;
      s["t"] = d.t[i];
      s["point"] = std::vector<double>(d.points[i].begin(), d.points[i].end());
      s["velocity"] = std::vector<double>(d.velocities[i].begin(), d.velocities[i].end());
      jd.push_back(std::move(s));
    }
    arr.push_back(std::move(jd));
  }
  j["demos"] = std::move(arr);
  return j.dump(1) + "\n";
}

std::vector<Demonstration> parse_demos_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("invalid JSON: {}", e.what()));
  }
  std::vector<Demonstration> out;
  try {
    const ManifoldSpec spec = ManifoldSpec::parse(j.at("spec").get<std::string>());
    for (const auto& jd : j.at("demos")) {
      Demonstration d;
      d.spec = spec;
      for (const auto& s : jd) {
        d.t.push_back(s.at("t").get<double>());
        const auto p = s.at("point").get<std::vector<double>>();
        const auto v = s.at("velocity").get<std::vector<double>>();
        d.points.push_back(Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())));
        d.velocities.push_back(
            Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      const std::size_t n = d.size();
      d.dt = n > 1 ? (d.t.back() - d.t.front()) / static_cast<double>(n - 1) : 0.0;
      try {
        d.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("demo {}: {}", out.size(), e.what()));
      }
      out.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed demo JSON: {}", e.what()));
  }
  if (out.empty()) throw ValidationError("demo file contains no demonstrations");
  return out;
}

}  // namespace rsds
