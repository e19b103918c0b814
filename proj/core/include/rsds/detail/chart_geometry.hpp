#pragma once

// Scalar-generic sphere chart kernels: Exp_b, its differential, an
// extension of Log_b off the sphere and its first two derivatives.
// Scalar is double or ad::Var.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "rsds/ad.hpp"

namespace rsds::detail {

using ad::value;

template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S, class Derived>
VecT<S> cast_vec(const Eigen::MatrixBase<Derived>& v) {
  VecT<S> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = S(v[i]);
  return out;
}

template <class S>
Eigen::VectorXd values(const VecT<S>& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = value(v[i]);
  return out;
}

template <class S>
Eigen::MatrixXd values(const MatT<S>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = value(m(i, j));
  return out;
}

template <class S>
S horner(const double* c, int n, const S& t) {
  S p = S(c[n - 1]);
  for (int k = n - 2; k >= 0; --k) p = p * t + c[k];
  return p;
}

// cos(th), sin(th)/th, (th cos th - sin th)/th^3 as functions of th^2.
template <class S>
struct ExpCoeffs {
  S cos, sinc, c2;
};

template <class S>
ExpCoeffs<S> exp_coeffs(const S& th2) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value(th2) < 1e-2) {
    static constexpr double kc[] = {1.0,          -1.0 / 2,       1.0 / 24,         -1.0 / 720,
                                    1.0 / 40320,  -1.0 / 3628800, 1.0 / 479001600};
    static constexpr double ks[] = {1.0,         -1.0 / 6,        1.0 / 120,         -1.0 / 5040,
                                    1.0 / 362880, -1.0 / 39916800, 1.0 / 6227020800.0};
    static constexpr double k2[] = {-2.0 / 6,         4.0 / 120,         -6.0 / 5040,
                                    8.0 / 362880,     -10.0 / 39916800,  12.0 / 6227020800.0,
                                    -14.0 / 1307674368000.0};
    return {horner(kc, 7, th2), horner(ks, 7, th2), horner(k2, 7, th2)};
  }
  const S th = sqrt(th2);
  const S s = sin(th);
  const S c = cos(th);
  return {c, s / th, (th * c - s) / (th2 * th)};
}

// Log_b(z) extended to a neighbourhood of the sphere as a(c) (z - c b),
// c = <b, z>, a = acos(c)/sqrt(1-c^2). a1, a2 are d/dc and d2/dc2 of a.
template <class S>
struct LogCoeffs {
  S c, a, a1, a2;
};

template <class S>
LogCoeffs<S> log_coeffs(const S& c) {
  using std::asin;
  using std::sin;
  using std::sqrt;
  const S e = S(1.0) - c;
  if (value(e) < 1e-2) {
    // a(e) = sum_k 2^k (k!)^2 / (2k+1)! e^k
    constexpr int K = 14;
    double ak[K];
    ak[0] = 1.0;
    for (int k = 1; k < K; ++k) ak[k] = ak[k - 1] * k / (2.0 * k + 1.0);
    double d1[K - 1], d2[K - 2];
    for (int k = 1; k < K; ++k) d1[k - 1] = -k * ak[k];
    for (int k = 2; k < K; ++k) d2[k - 2] = k * (k - 1) * ak[k];
    return {c, horner(ak, K, e), horner(d1, K - 1, e), horner(d2, K - 2, e)};
  }
  const S th = 2.0 * asin(sqrt(0.5 * e));
  const S s = sin(th);
  const S s2 = s * s;
  const S n = s - th * c;
  return {c, th / s, -n / (s2 * s), (th * s2 - 3.0 * n * c) / (s2 * s2 * s)};
}

template <class S, class B, class W>
VecT<S> sphere_exp(const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<W>& w,
                   const ExpCoeffs<S>& k) {
  return k.cos * b + k.sinc * w;
}

// D_w Exp_b(w) composed with the projector onto T_b.
template <class S, class B, class W>
MatT<S> sphere_dexp(const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<W>& w,
                    const ExpCoeffs<S>& k) {
  const Eigen::Index s = b.size();
  MatT<S> D = k.sinc * MatT<S>::Identity(s, s) - k.sinc * (b * w.transpose()) +
              k.c2 * (w * w.transpose());
  MatT<S> P = MatT<S>::Identity(s, s) - b * b.transpose();
  return D * P;
}

template <class S, class B, class Z>
VecT<S> sphere_log_ext(const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<Z>& z,
                       const LogCoeffs<S>& lc) {
  return lc.a * (z - lc.c * b);
}

// d/dz of the Log extension.
template <class S, class B, class Z>
MatT<S> sphere_dlog(const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<Z>& z,
                    const LogCoeffs<S>& lc) {
  const Eigen::Index s = b.size();
  VecT<S> r = z - lc.c * b;
  return lc.a * (MatT<S>::Identity(s, s) - b * b.transpose()) + lc.a1 * (r * b.transpose());
}

// d/dz [ dlog(z) f ] for fixed f.
template <class S, class B, class Z, class F>
MatT<S> sphere_d2log(const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<Z>& z,
                     const Eigen::MatrixBase<F>& f, const LogCoeffs<S>& lc) {
  const Eigen::Index s = b.size();
  VecT<S> r = z - lc.c * b;
  const S bf = b.dot(f);
  VecT<S> ft = f - bf * b;
  MatT<S> Pb = MatT<S>::Identity(s, s) - b * b.transpose();
  return bf * (lc.a2 * (r * b.transpose()) + lc.a1 * Pb) + lc.a1 * (ft * b.transpose());
}

inline bool is_exact_zero(double x) { return x == 0.0; }
inline bool is_exact_zero(const ad::Var& x) { return x.is_const() && x.v == 0.0; }

// A * K^{-1} by Gauss-Jordan with partial pivoting on values.
template <class S>
MatT<S> right_solve(const MatT<S>& A, const MatT<S>& K) {
  const Eigen::Index n = K.rows();
  MatT<S> M = K;
  MatT<S> Inv = MatT<S>::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index p = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(value(M(r, c))) > std::abs(value(M(p, c)))) p = r;
    if (p != c) {
      M.row(p).swap(M.row(c));
      Inv.row(p).swap(Inv.row(c));
    }
    const S piv = M(c, c);
    for (Eigen::Index j = 0; j < n; ++j) {
      M(c, j) = M(c, j) / piv;
      Inv(c, j) = Inv(c, j) / piv;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const S f = M(r, c);
      if (is_exact_zero(f)) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        M(r, j) = M(r, j) - f * M(c, j);
        Inv(r, j) = Inv(r, j) - f * Inv(c, j);
      }
    }
  }
  return A * Inv;
}

}  // namespace rsds::detail
