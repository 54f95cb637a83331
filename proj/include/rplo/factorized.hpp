#pragma once

#include "rplo/mat.hpp"

namespace rplo {

/// A low-rank pair (L, R) representing the m x n product L * R^T,
/// together with the Gram regularizer delta used by the preconditioner.
///
/// The single L * R^T orientation serves both the LoRA convention
/// W + B A (L = B, R^T = A) and the multi-term convention A_i B_i^T.
struct FactorPair {
  Mat L;               // m x r
  Mat R;               // n x r
  double delta = 1e-6; // Gram regularizer, (L^T L + delta I) etc.

  Index rank() const { return L.cols(); }
  Index rows() const { return L.rows(); }
  Index cols() const { return R.rows(); }
  Mat product() const { return L * R.transpose(); }
};

/// Euclidean loss gradients paired with a FactorPair. dR stores the
/// gradient of the right factor, i.e. the transpose of the LoRA dA.
struct FactorGrad {
  Mat dL;  // m x r
  Mat dR;  // n x r
};

/// A tangent direction at a FactorPair.
struct TangentPair {
  Mat etaL;  // m x r
  Mat etaR;  // n x r
};

namespace factorized {

/// The r x r preconditioner: returns
///   (dL * (R^T R + delta I)^{-1}, dR * (L^T L + delta I)^{-1}).
/// With delta = 0 a singular Gram matrix is an error telling the caller
/// to set delta > 0.
FactorGrad precondition(const FactorPair& pair, const FactorGrad& grad);

/// Quotient-metric inner product at `pair`:
///   <u.etaL, v.etaL * R^T R> + <u.etaR, v.etaR * L^T L>,
/// with <X, Y> = trace(X^T Y). Under this metric the preconditioned
/// Euclidean gradient is the Riemannian gradient.
double metric_inner(const FactorPair& pair, const TangentPair& u,
                    const TangentPair& v);

/// Frobenius distance between the product after one scaled-GD step of
/// size eta on `full_grad` and the first-order projected update
///   X - eta * G * P_R - eta * P_L * G,
/// where P_R / P_L project onto the row space of R^T and the column
/// space of L. The residual is the second-order term, O(eta^2).
/// Uses the delta = 0 path; singular Gram matrices are an error.
double projection_residual(const FactorPair& pair, const Mat& full_grad,
                           double eta);

/// The GL(r) action (L, R) -> (L Q, R Q^{-T}); the product is invariant.
FactorPair gl_transform(const FactorPair& pair, const Mat& q);

}  // namespace factorized
}  // namespace rplo
