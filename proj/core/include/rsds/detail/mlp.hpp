#pragma once

#include <type_traits>
#include <vector>

#include "rsds/detail/chart_geometry.hpp"
#include "rsds/manifold.hpp"

namespace rsds::detail {

template <class S>
struct MlpT {
  std::vector<MatT<S>> W;
  std::vector<VecT<S>> b;
};

template <class S>
inline constexpr bool is_var_v = std::is_same_v<S, ad::Var>;

template <class S>
VecT<S> affine(const MatT<S>& W, const VecT<S>& x, const VecT<S>& b) {
  if constexpr (is_var_v<S>) {
    VecT<S> out(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      out[i] = ad::dot(&W(i, 0), W.rows(), x.data(), 1, static_cast<int>(W.cols()), b[i]);
    return out;
  } else {
    return W * x + b;
  }
}

template <class S, class A, class B>
MatT<S> matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& bm) {
  if constexpr (is_var_v<S>) {
    const MatT<S> x = a;
    const MatT<S> y = bm;
    MatT<S> out(x.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        out(i, j) = ad::dot(&x(i, 0), x.rows(), &y(0, j), 1, static_cast<int>(x.cols()));
    return out;
  } else {
    return a * bm;
  }
}

// eta(z, t) for input [z; t] and, if requested, d eta / dz.
template <class S>
void mlp_eval(const MlpT<S>& net, const VecT<S>& z, double t, VecT<S>& eta, MatT<S>* Jz) {
  using std::tanh;
  const Eigen::Index n = z.size();
  const std::size_t L = net.W.size();
  VecT<S> a(n + 1);
  a.head(n) = z;
  a[n] = S(t);
  MatT<S> M;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    VecT<S> pre = affine<S>(net.W[l], a, net.b[l]);
    a.resize(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) a[i] = tanh(pre[i]);
    if (!Jz) continue;
    M = l == 0 ? MatT<S>(net.W[0].leftCols(n)) : matmul<S>(net.W[l], M);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const S s = S(1.0) - a[i] * a[i];
      for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = s * M(i, j);
    }
  }
  eta = affine<S>(net.W[L - 1], a, net.b[L - 1]);
  if (Jz) *Jz = L == 1 ? MatT<S>(net.W[0].leftCols(n)) : matmul<S>(net.W[L - 1], M);
}

// f = proj_z(eta) per sphere block and its Jacobian in z.
template <class S>
void tangent_head(const ManifoldSpec& m, const VecT<S>& z, const VecT<S>& eta,
                  const MatT<S>* Jeta, VecT<S>& f, MatT<S>* J) {
  f = eta;
  if (J) *J = *Jeta;
  for (const auto& blk : m.blocks()) {
    if (!blk.sphere) continue;
    const int o = blk.offset, s = blk.size;
    auto zb = z.segment(o, s);
    auto eb = eta.segment(o, s);
    const S d = zb.dot(eb);
    f.segment(o, s) = eb - d * zb;
    if (!J) continue;
    MatT<S> P = MatT<S>::Identity(s, s) - zb * zb.transpose();
    J->middleRows(o, s) = matmul<S>(P, Jeta->middleRows(o, s));
    J->block(o, o, s, s) -= d * MatT<S>::Identity(s, s) + zb * eb.transpose();
  }
}

template <class S>
struct NetFieldT {
  const ManifoldSpec& m;
  const MlpT<S>& net;
  void operator()(const VecT<S>& z, double t, VecT<S>& f, MatT<S>* J) const {
    VecT<S> eta;
    MatT<S> Je;
    mlp_eval<S>(net, z, t, eta, J ? &Je : nullptr);
    tangent_head<S>(m, z, eta, J ? &Je : nullptr, f, J);
  }
};

}  // namespace rsds::detail
