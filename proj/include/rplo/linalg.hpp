#pragma once

#include <string_view>
#include <utility>

#include "rplo/mat.hpp"

namespace rplo::linalg {

/// Thin SVD, M = U * diag(S) * V^T with S nonincreasing.
struct SvdResult {
  Mat U;
  Vec S;
  Mat V;
};

SvdResult svd(const Mat& m);

/// Best rank-r approximation split into balanced factors
/// L = U_r * S_r^{1/2}, R = V_r * S_r^{1/2}, so L * R^T is the top-r
/// SVD truncation. Singular-value ties follow the SVD column order, so
/// only L * R^T is well defined across backends, never L or R alone.
std::pair<Mat, Mat> best_rank_r(const Mat& m, Index r);

/// l2 norm of the top-r singular values, sqrt(sum_{i<=r} sigma_i^2).
double partial_frobenius(const Mat& m, Index r);

/// Solve G * X = rhs for symmetric positive definite G via Cholesky.
/// `label` names the matrix in error messages.
Mat spd_solve(const Mat& g, const Mat& rhs, std::string_view label = "matrix");

double spectral_norm(const Mat& m);

}  // namespace rplo::linalg
