#pragma once

// Minimal reverse-mode automatic differentiation.
//
// A Var is a value plus an index into the thread's active Tape. Constants
// carry kConst and never touch the tape. Every operation records its local
// partial derivatives; Tape::backward() sweeps them in reverse.

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace rsds::ad {

inline constexpr std::uint32_t kConst = 0xffffffffu;

class Tape {
 public:
  std::uint32_t leaf() {
    end_.push_back(static_cast<std::uint32_t>(src_.size()));
    return static_cast<std::uint32_t>(end_.size() - 1);
  }

  std::uint32_t push1(std::uint32_t a, double da) {
    src_.push_back(a);
    w_.push_back(da);
    return close();
  }

  std::uint32_t push2(std::uint32_t a, double da, std::uint32_t b, double db) {
    src_.push_back(a);
    w_.push_back(da);
    src_.push_back(b);
    w_.push_back(db);
    return close();
  }

  // Open-ended node: call edge() any number of times, then close().
  void edge(std::uint32_t a, double da) {
    src_.push_back(a);
    w_.push_back(da);
  }
  std::uint32_t close() {
    end_.push_back(static_cast<std::uint32_t>(src_.size()));
    return static_cast<std::uint32_t>(end_.size() - 1);
  }

  std::size_t size() const { return end_.size(); }
  std::size_t edges() const { return src_.size(); }

  void clear() {
    src_.clear();
    w_.clear();
    end_.clear();
  }

  // Adjoints of every node given seeds (node, d out / d node).
  void backward(std::span<const std::pair<std::uint32_t, double>> seeds,
                std::vector<double>& adj) const {
    adj.assign(end_.size(), 0.0);
    for (const auto& [id, s] : seeds) adj[id] += s;
    for (std::size_t i = end_.size(); i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const std::uint32_t lo = i ? end_[i - 1] : 0u;
      const std::uint32_t hi = end_[i];
      for (std::uint32_t e = lo; e < hi; ++e) adj[src_[e]] += w_[e] * a;
    }
  }

 private:
  std::vector<std::uint32_t> src_;
  std::vector<double> w_;
  std::vector<std::uint32_t> end_;
};

namespace detail {
inline thread_local Tape* g_active = nullptr;
}

inline Tape& active_tape() { return *detail::g_active; }

// Installs a tape as the thread's active tape for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& t) : prev_(detail::g_active) { detail::g_active = &t; }
  ~TapeScope() { detail::g_active = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

struct Var {
  double v = 0.0;
  std::uint32_t id = kConst;

  Var() = default;
  Var(double x) : v(x) {}  // NOLINT(google-explicit-constructor)
  Var(double x, std::uint32_t i) : v(x), id(i) {}

  bool is_const() const { return id == kConst; }

  static Var leaf(double x) { return Var(x, active_tape().leaf()); }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);
};

inline Var make1(double val, const Var& a, double da) {
  if (a.is_const()) return Var(val);
  return Var(val, active_tape().push1(a.id, da));
}

inline Var make2(double val, const Var& a, double da, const Var& b, double db) {
  if (a.is_const()) return make1(val, b, db);
  if (b.is_const()) return make1(val, a, da);
  return Var(val, active_tape().push2(a.id, da, b.id, db));
}

inline double value(const Var& x) { return x.v; }
inline double value(double x) { return x; }

inline Var operator+(const Var& a, const Var& b) { return make2(a.v + b.v, a, 1.0, b, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return make2(a.v - b.v, a, 1.0, b, -1.0); }
inline Var operator*(const Var& a, const Var& b) { return make2(a.v * b.v, a, b.v, b, a.v); }
inline Var operator/(const Var& a, const Var& b) {
  const double r = a.v / b.v;
  return make2(r, a, 1.0 / b.v, b, -r / b.v);
}
inline Var operator-(const Var& a) { return make1(-a.v, a, -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var operator+(const Var& a, double b) { return make1(a.v + b, a, 1.0); }
inline Var operator+(double a, const Var& b) { return make1(a + b.v, b, 1.0); }
inline Var operator-(const Var& a, double b) { return make1(a.v - b, a, 1.0); }
inline Var operator-(double a, const Var& b) { return make1(a - b.v, b, -1.0); }
inline Var operator*(const Var& a, double b) { return make1(a.v * b, a, b); }
inline Var operator*(double a, const Var& b) { return make1(a * b.v, b, a); }
inline Var operator/(const Var& a, double b) { return make1(a.v / b, a, 1.0 / b); }
inline Var operator/(double a, const Var& b) {
  const double r = a / b.v;
  return make1(r, b, -r / b.v);
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }
inline bool operator==(const Var& a, const Var& b) { return a.v == b.v; }
inline bool operator!=(const Var& a, const Var& b) { return a.v != b.v; }

inline Var sin(const Var& a) { return make1(std::sin(a.v), a, std::cos(a.v)); }
inline Var cos(const Var& a) { return make1(std::cos(a.v), a, -std::sin(a.v)); }
inline Var exp(const Var& a) {
  const double e = std::exp(a.v);
  return make1(e, a, e);
}
inline Var log(const Var& a) { return make1(std::log(a.v), a, 1.0 / a.v); }
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.v);
  return make1(t, a, 1.0 - t * t);
}
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.v);
  return make1(s, a, 0.5 / s);
}
inline Var asin(const Var& a) { return make1(std::asin(a.v), a, 1.0 / std::sqrt(1.0 - a.v * a.v)); }
inline Var acos(const Var& a) { return make1(std::acos(a.v), a, -1.0 / std::sqrt(1.0 - a.v * a.v)); }
inline Var atan2(const Var& y, const Var& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  return make2(std::atan2(y.v, x.v), y, x.v / r2, x, -y.v / r2);
}
inline Var abs(const Var& a) { return make1(std::abs(a.v), a, a.v < 0 ? -1.0 : 1.0); }
inline Var abs2(const Var& a) { return a * a; }
inline Var conj(const Var& a) { return a; }
inline Var real(const Var& a) { return a; }
inline Var imag(const Var&) { return Var(0.0); }
inline bool isfinite(const Var& a) { return std::isfinite(a.v); }
inline bool isnan(const Var& a) { return std::isnan(a.v); }
inline bool isinf(const Var& a) { return std::isinf(a.v); }

// sum_i a[i*sa] * b[i*sb] + c as a single tape node.
inline Var dot(const Var* a, std::ptrdiff_t sa, const Var* b, std::ptrdiff_t sb, int n,
               const Var& c = Var()) {
  double val = c.v;
  bool any = !c.is_const();
  for (int i = 0; i < n; ++i) {
    val += a[i * sa].v * b[i * sb].v;
    any = any || !a[i * sa].is_const() || !b[i * sb].is_const();
  }
  if (!any) return Var(val);
  Tape& t = active_tape();
  for (int i = 0; i < n; ++i) {
    const Var& x = a[i * sa];
    const Var& y = b[i * sb];
    if (!x.is_const()) t.edge(x.id, y.v);
    if (!y.is_const()) t.edge(y.id, x.v);
  }
  if (!c.is_const()) t.edge(c.id, 1.0);
  return Var(val, t.close());
}

// sum_i a[i*sa] * b[i*sb] with b constant.
inline Var dot(const Var* a, std::ptrdiff_t sa, const double* b, std::ptrdiff_t sb, int n) {
  double val = 0.0;
  bool any = false;
  for (int i = 0; i < n; ++i) {
    val += a[i * sa].v * b[i * sb];
    any = any || !a[i * sa].is_const();
  }
  if (!any) return Var(val);
  Tape& t = active_tape();
  for (int i = 0; i < n; ++i)
    if (!a[i * sa].is_const()) t.edge(a[i * sa].id, b[i * sb]);
  return Var(val, t.close());
}

}  // namespace rsds::ad

namespace Eigen {

template <>
struct NumTraits<rsds::ad::Var> : NumTraits<double> {
  using Real = rsds::ad::Var;
  using NonInteger = rsds::ad::Var;
  using Nested = rsds::ad::Var;
  using Literal = rsds::ad::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};

template <typename Op>
struct ScalarBinaryOpTraits<rsds::ad::Var, double, Op> {
  using ReturnType = rsds::ad::Var;
};
template <typename Op>
struct ScalarBinaryOpTraits<double, rsds::ad::Var, Op> {
  using ReturnType = rsds::ad::Var;
};

}  // namespace Eigen
