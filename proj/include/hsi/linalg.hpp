#pragma once

#include "hsi/types.hpp"

#include <cmath>
#include <limits>

namespace hsi {

/// Checked dense product. Eigen evaluates each entry with a fixed reduction
/// order for a given build; agreement with the naive left-to-right order is
/// within 1e-12 elementwise (the library runs single-threaded here, so
/// reruns are bit-identical).
template <class DA, class DB>
Mat matmul(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_str(a.rows(), a.cols()) + " * " +
                         shape_str(b.rows(), b.cols()));
  }
  return a.derived() * b.derived();
}

/// Logistic function with the argument clamped to |x| <= 500. The result is
/// kept strictly inside (0, 1): the top end saturates at 1 - eps/2.
template <class Scalar>
Scalar sigmoid(Scalar x) {
  if (x > Scalar(500)) x = Scalar(500);
  if (x < Scalar(-500)) x = Scalar(-500);
  const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar top = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
  return s < top ? s : top;
}

inline Mat sigmoid(const Mat& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

inline Vec sigmoid(const Vec& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

/// Numerically stable softmax (max subtraction); entries sum to 1.
inline Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

/// Row-wise softmax for a batch of logit rows.
inline Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    p.row(i) = softmax(Vec(logits.row(i))).transpose();
  }
  return p;
}

/// KL divergence between Bernoulli(rho) and Bernoulli(rho_hat).
/// Nonnegative, zero iff rho_hat == rho. rho_hat must lie in (0, 1).
/// The sum of the two log terms can round a hair below zero near equality;
/// the clamp restores the mathematical lower bound.
inline double kl_bernoulli(double rho, double rho_hat) {
  const double kl = rho * std::log(rho / rho_hat) +
                    (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
  return kl > 0.0 ? kl : 0.0;
}

}  // namespace hsi
