#include "rplo/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace rplo::linalg {

SvdResult svd(const Mat& m) {
  if (!m.allFinite()) throw NumericalError("svd: input has non-finite entries");
  Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success)
    throw NumericalError("svd: Jacobi iteration did not converge");
  return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

std::pair<Mat, Mat> best_rank_r(const Mat& m, Index r) {
  const Index max_rank = std::min(m.rows(), m.cols());
  if (r > max_rank)
    throw ConfigError("best_rank_r: r = " + std::to_string(r) +
                      " exceeds min dimension " + std::to_string(max_rank));
  if (r == 0) return {Mat(m.rows(), 0), Mat(m.cols(), 0)};
  const SvdResult usv = svd(m);
  const Vec root = usv.S.head(r).cwiseSqrt();
  Mat left = usv.U.leftCols(r) * root.asDiagonal();
  Mat right = usv.V.leftCols(r) * root.asDiagonal();
  return {std::move(left), std::move(right)};
}

double partial_frobenius(const Mat& m, Index r) {
  const Index max_rank = std::min(m.rows(), m.cols());
  if (r > max_rank)
    throw ConfigError("partial_frobenius: r exceeds min dimension");
  if (r == 0) return 0.0;
  return svd(m).S.head(r).norm();
}

Mat spd_solve(const Mat& g, const Mat& rhs, std::string_view label) {
  require_shape(g.rows() == g.cols() && g.rows() == rhs.rows(),
                "spd_solve operands");
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1.0);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericalError("spd_solve: " + std::string(label) + " is not symmetric");
  Eigen::LLT<Mat> chol(g);
  if (chol.info() != Eigen::Success)
    throw NumericalError("spd_solve: " + std::string(label) +
                         " is not positive definite");
  return chol.solve(rhs);
}

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

}  // namespace rplo::linalg
