#include "rsds/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace rsds {

using std::numbers::pi;

ManifoldSpec ManifoldSpec::euclidean(int n) {
  if (n < 1) throw ValidationError(fmt::format("Euclidean dimension must be >= 1, got {}", n));
  ManifoldSpec m;
  m.kind_ = Kind::Euclidean;
  m.dim_ = n;
  m.ambient_ = n;
  m.build_blocks();
  return m;
}

ManifoldSpec ManifoldSpec::sphere(int d) {
  if (d < 1) throw ValidationError(fmt::format("sphere dimension must be >= 1, got {}", d));
  ManifoldSpec m;
  m.kind_ = Kind::Sphere;
  m.dim_ = d;
  m.ambient_ = d + 1;
  m.build_blocks();
  return m;
}

ManifoldSpec ManifoldSpec::product(std::vector<ManifoldSpec> parts) {
  if (parts.empty()) throw ValidationError("product manifold needs at least one component");
  if (parts.size() == 1) return parts.front();
  ManifoldSpec m;
  m.kind_ = Kind::Product;
  m.ambient_ = 0;
  for (const auto& p : parts) {
    if (p.ambient_ == 0) throw ValidationError("product component is empty");
    m.ambient_ += p.ambient_;
  }
  m.parts_ = std::move(parts);
  m.build_blocks();
  return m;
}

ManifoldSpec ManifoldSpec::parse(std::string_view text) {
  std::vector<ManifoldSpec> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('x', pos);
    if (next == std::string_view::npos) next = text.size();
    std::string_view tok = text.substr(pos, next - pos);
    if (tok.size() < 2 || (tok[0] != 'S' && tok[0] != 'R'))
      throw ValidationError(fmt::format("cannot parse manifold '{}'", text));
    int n = 0;
    for (char c : tok.substr(1)) {
      if (c < '0' || c > '9') throw ValidationError(fmt::format("cannot parse manifold '{}'", text));
      n = n * 10 + (c - '0');
    }
    parts.push_back(tok[0] == 'S' ? sphere(n) : euclidean(n));
    pos = next + 1;
  }
  return product(std::move(parts));
}

void ManifoldSpec::build_blocks() {
  blocks_.clear();
  if (kind_ != Kind::Product) {
    blocks_.push_back({kind_ == Kind::Sphere, 0, ambient_});
    return;
  }
  int off = 0;
  for (const auto& p : parts_) {
    for (Block b : p.blocks_) {
      b.offset += off;
      blocks_.push_back(b);
    }
    off += p.ambient_;
  }
}

int ManifoldSpec::intrinsic_dim() const {
  int d = 0;
  for (const auto& b : blocks_) d += b.sphere ? b.size - 1 : b.size;
  return d;
}

bool ManifoldSpec::has_sphere() const {
  return std::any_of(blocks_.begin(), blocks_.end(), [](const Block& b) { return b.sphere; });
}

std::string ManifoldSpec::to_string() const {
  switch (kind_) {
    case Kind::Euclidean:
      return fmt::format("R{}", dim_);
    case Kind::Sphere:
      return fmt::format("S{}", dim_);
    case Kind::Product: {
      std::string s;
      for (const auto& p : parts_) {
        if (!s.empty()) s += 'x';
        s += p.to_string();
      }
      return s;
    }
  }
  return {};
}

double sphere_distance(const Vec& x, const Vec& y) {
  return 2.0 * std::atan2((x - y).norm(), (x + y).norm());
}

namespace {

Vec sphere_exp(const Vec& x, const Vec& u) {
  const double nu = u.norm();
  if (nu >= pi)
    throw InjectivityError(
        fmt::format("tangent norm {:.6g} exceeds the sphere injectivity radius", nu));
  if (nu == 0.0) return x;
  return std::cos(nu) * x + (std::sin(nu) / nu) * u;
}

Vec sphere_log(const Vec& x, const Vec& y) {
  const double d = sphere_distance(x, y);
  if (d > pi - kCutLocusMargin)
    throw CutLocusError(fmt::format("points are antipodal (distance {:.12g})", d));
  if (d < kLogZeroTol) return Vec::Zero(x.size());
  Vec p = y - x.dot(y) * x;
  return (d / p.norm()) * p;
}

Vec sphere_transport(const Vec& x, const Vec& y, const Vec& u) {
  const Vec v = sphere_log(x, y);
  const double nv = v.norm();
  if (nv < kLogZeroTol) return u;
  const Vec vb = v / nv;
  const double a = vb.dot(u);
  return u - a * vb + a * (std::cos(nv) * vb - std::sin(nv) * x);
}

}  // namespace

Vec ManifoldSpec::exp(const Vec& x, const Vec& u) const {
  Vec out(ambient_);
  for (const auto& b : blocks_) {
    auto xb = x.segment(b.offset, b.size);
    auto ub = u.segment(b.offset, b.size);
    out.segment(b.offset, b.size) = b.sphere ? sphere_exp(xb, ub) : Vec(xb + ub);
  }
  return out;
}

Vec ManifoldSpec::log(const Vec& x, const Vec& y) const {
  Vec out(ambient_);
  for (const auto& b : blocks_) {
    auto xb = x.segment(b.offset, b.size);
    auto yb = y.segment(b.offset, b.size);
    out.segment(b.offset, b.size) = b.sphere ? sphere_log(xb, yb) : Vec(yb - xb);
  }
  return out;
}

std::vector<double> ManifoldSpec::block_distances(const Vec& x, const Vec& y) const {
  std::vector<double> d;
  d.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    auto xb = x.segment(b.offset, b.size);
    auto yb = y.segment(b.offset, b.size);
    d.push_back(b.sphere ? sphere_distance(xb, yb) : (xb - yb).norm());
  }
  return d;
}

double ManifoldSpec::distance(const Vec& x, const Vec& y) const {
  if (blocks_.size() == 1) {
    return blocks_[0].sphere ? sphere_distance(x, y) : (x - y).norm();
  }
  double s = 0.0;
  for (double d : block_distances(x, y)) s += d * d;
  return std::sqrt(s);
}

Vec ManifoldSpec::transport(const Vec& x, const Vec& y, const Vec& u) const {
  Vec out(ambient_);
  for (const auto& b : blocks_) {
    auto ub = u.segment(b.offset, b.size);
    out.segment(b.offset, b.size) =
        b.sphere ? sphere_transport(x.segment(b.offset, b.size), y.segment(b.offset, b.size), ub)
                 : Vec(ub);
  }
  return out;
}

Vec ManifoldSpec::project(const Vec& x, const Vec& v) const {
  Vec out = v;
  for (const auto& b : blocks_) {
    if (!b.sphere) continue;
    auto xb = x.segment(b.offset, b.size);
    out.segment(b.offset, b.size) -= xb.dot(v.segment(b.offset, b.size)) * xb;
  }
  return out;
}

Mat ManifoldSpec::projector(const Vec& x) const {
  Mat P = Mat::Identity(ambient_, ambient_);
  for (const auto& b : blocks_) {
    if (!b.sphere) continue;
    auto xb = x.segment(b.offset, b.size);
    P.block(b.offset, b.offset, b.size, b.size) -= xb * xb.transpose();
  }
  return P;
}

Vec ManifoldSpec::retract(const Vec& v) const {
  Vec out = v;
  for (const auto& b : blocks_) {
    if (!b.sphere) continue;
    const double n = v.segment(b.offset, b.size).norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw DegenerateError("cannot retract a zero or non-finite sphere block");
    out.segment(b.offset, b.size) /= n;
  }
  return out;
}

Vec ManifoldSpec::sample_uniform(std::mt19937_64& rng, double lo, double hi) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(lo, hi);
  Vec x(ambient_);
  for (const auto& b : blocks_) {
    if (b.sphere) {
      double n = 0.0;
      while (n < 1e-12) {
        for (int i = 0; i < b.size; ++i) x[b.offset + i] = normal(rng);
        n = x.segment(b.offset, b.size).norm();
      }
      x.segment(b.offset, b.size) /= n;
    } else {
      for (int i = 0; i < b.size; ++i) x[b.offset + i] = unif(rng);
    }
  }
  return x;
}

double ManifoldSpec::manifold_residual(const Vec& x) const {
  if (x.size() != ambient_ || !x.allFinite()) return std::numeric_limits<double>::infinity();
  double r = 0.0;
  for (const auto& b : blocks_)
    if (b.sphere) r = std::max(r, std::abs(x.segment(b.offset, b.size).norm() - 1.0));
  return r;
}

double ManifoldSpec::tangency_residual(const Vec& x, const Vec& v) const {
  if (v.size() != ambient_ || !v.allFinite()) return std::numeric_limits<double>::infinity();
  double r = 0.0;
  for (const auto& b : blocks_)
    if (b.sphere)
      r = std::max(r, std::abs(x.segment(b.offset, b.size).dot(v.segment(b.offset, b.size))));
  return r;
}

void ManifoldSpec::check_point(const Vec& x, std::string_view what, double tol) const {
  if (x.size() != ambient_)
    throw ValidationError(fmt::format("{} has {} coordinates, {} expects {}", what, x.size(),
                                      to_string(), ambient_));
  const double r = manifold_residual(x);
  if (!(r <= tol))
    throw ValidationError(
        fmt::format("{} is not on {} (unit-norm residual {:.3g})", what, to_string(), r));
}

}  // namespace rsds
