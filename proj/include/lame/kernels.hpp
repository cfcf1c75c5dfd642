#pragma once

// Forward-only numeric kernels shared by the differentiable ops and by
// reference computations in tests. Templated on the Eigen expression type so
// any dense scalar type works; the library instantiates them with double.

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace lame::kernels {

template <typename Scalar>
Scalar gelu(Scalar x) {
  using std::erf;
  return Scalar(0.5) * x * (Scalar(1) + erf(x / Scalar(std::numbers::sqrt2)));
}

// d/dx gelu(x) = Phi(x) + x * phi(x)
template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  using std::erf;
  using std::exp;
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + erf(x / Scalar(std::numbers::sqrt2)));
  const Scalar pdf = exp(Scalar(-0.5) * x * x) * Scalar(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + exp(-x));
  }
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

// log(1 + exp(x)) without overflow for large |x|.
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  if (x > Scalar(0)) {
    return x + log1p(exp(-x));
  }
  return log1p(exp(x));
}

// Left-to-right sum. Eigen's vectorized reductions peel elements according to
// the row's memory alignment, so the same values can round differently in
// different rows; row-wise kernels use this to stay exactly equivariant under
// row permutations.
template <typename Row>
typename Row::Scalar sequential_sum(const Row& row) {
  typename Row::Scalar total(0);
  for (Eigen::Index i = 0; i < row.size(); ++i) total += row(i);
  return total;
}

template <typename Derived>
typename Derived::PlainObject softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using std::exp;
  typename Derived::PlainObject out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto m = x.row(r).maxCoeff();
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = exp(x(r, c) - m);
    out.row(r) /= sequential_sum(out.row(r));
  }
  return out;
}

template <typename Derived>
typename Derived::PlainObject log_softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using std::exp;
  using std::log;
  typename Derived::PlainObject out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto m = x.row(r).maxCoeff();
    typename Derived::Scalar total(0);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out(r, c) = x(r, c) - m;
      total += exp(out(r, c));
    }
    out.row(r).array() -= log(total);
  }
  return out;
}

// Per-row normalization with biased (denominator n) variance.
template <typename Derived, typename GainDerived, typename BiasDerived>
typename Derived::PlainObject layer_norm_rows(const Eigen::MatrixBase<Derived>& x,
                                              const Eigen::MatrixBase<GainDerived>& gain,
                                              const Eigen::MatrixBase<BiasDerived>& bias,
                                              typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out(x.rows(), x.cols());
  const Scalar n = Scalar(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = sequential_sum(x.row(r)) / n;
    const auto centered = (x.row(r).array() - mean).eval();
    const Scalar var = sequential_sum(centered.square().matrix()) / n;
    const Scalar inv_std = Scalar(1) / std::sqrt(var + eps);
    out.row(r) = (centered * inv_std * gain.array()).matrix() + bias;
  }
  return out;
}

}  // namespace lame::kernels
