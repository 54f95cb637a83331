#include "rplo/factorized.hpp"

#include <string>

#include "rplo/linalg.hpp"

namespace rplo::factorized {
namespace {

// Applies (gram + delta I)^{-1} from the right: grad * inv(gram + delta I).
Mat apply_inverse_gram(const Mat& gram, double delta, const Mat& grad,
                       const std::string& label) {
  Mat reg = gram;
  reg.diagonal().array() += delta;
  try {
    return linalg::spd_solve(reg, grad.transpose(), label).transpose();
  } catch (const NumericalError&) {
    if (delta == 0.0)
      throw NumericalError("precondition: " + label +
                           " is singular with delta = 0; set pair.delta > 0");
    throw;
  }
}

}  // namespace

FactorGrad precondition(const FactorPair& pair, const FactorGrad& grad) {
  require_shape(grad.dL.rows() == pair.L.rows() && grad.dL.cols() == pair.rank() &&
                    grad.dR.rows() == pair.R.rows() && grad.dR.cols() == pair.rank(),
                "precondition gradient vs pair");
  const Mat gram_r = pair.R.transpose() * pair.R;
  const Mat gram_l = pair.L.transpose() * pair.L;
  return FactorGrad{apply_inverse_gram(gram_r, pair.delta, grad.dL, "R^T R"),
                    apply_inverse_gram(gram_l, pair.delta, grad.dR, "L^T L")};
}

double metric_inner(const FactorPair& pair, const TangentPair& u,
                    const TangentPair& v) {
  require_shape(u.etaL.rows() == pair.rows() && v.etaL.rows() == pair.rows() &&
                    u.etaR.rows() == pair.cols() && v.etaR.rows() == pair.cols() &&
                    u.etaL.cols() == pair.rank() && v.etaR.cols() == pair.rank(),
                "metric_inner tangents vs pair");
  const Mat gram_r = pair.R.transpose() * pair.R;
  const Mat gram_l = pair.L.transpose() * pair.L;
  return (u.etaL.transpose() * (v.etaL * gram_r)).trace() +
         (u.etaR.transpose() * (v.etaR * gram_l)).trace();
}

double projection_residual(const FactorPair& pair, const Mat& full_grad,
                           double eta) {
  require_shape(full_grad.rows() == pair.rows() && full_grad.cols() == pair.cols(),
                "projection_residual gradient");
  const FactorGrad grad{full_grad * pair.R, full_grad.transpose() * pair.L};
  FactorPair zero_delta = pair;
  zero_delta.delta = 0.0;
  const FactorGrad scaled = precondition(zero_delta, grad);
  const Mat stepped =
      (pair.L - eta * scaled.dL) * (pair.R - eta * scaled.dR).transpose();

  const Mat gram_l = pair.L.transpose() * pair.L;
  const Mat gram_r = pair.R.transpose() * pair.R;
  const Mat proj_col =
      pair.L * linalg::spd_solve(gram_l, pair.L.transpose(), "L^T L");
  const Mat proj_row =
      pair.R * linalg::spd_solve(gram_r, pair.R.transpose(), "R^T R");
  const Mat first_order =
      pair.product() - eta * (full_grad * proj_row) - eta * (proj_col * full_grad);
  return (stepped - first_order).norm();
}

FactorPair gl_transform(const FactorPair& pair, const Mat& q) {
  require_shape(q.rows() == pair.rank() && q.cols() == pair.rank(),
                "gl_transform Q");
  Eigen::FullPivLU<Mat> lu(q);
  if (!lu.isInvertible())
    throw NumericalError("gl_transform: Q is not invertible");
  const Mat q_inv_t = lu.inverse().transpose();
  return FactorPair{pair.L * q, pair.R * q_inv_t, pair.delta};
}

}  // namespace rplo::factorized
