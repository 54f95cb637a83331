#pragma once

#include <cstdint>
#include <vector>

#include "rplo/factorized.hpp"
#include "rplo/mat.hpp"
#include "rplo/problems.hpp"

namespace rplo::analysis {

/// Result of minimizing the GL(r)-aligned distance
///   dist^2 = inf_Q ||(L Q - L*) S^{1/2}||_F^2 + ||(R Q^{-T} - R*) S^{1/2}||_F^2.
struct AlignmentReport {
  double dist = 0.0;
  Mat Q;                  // minimizer found
  bool converged = false;
  double residual = 0.0;  // final objective decrease of the inner solver
};

/// Local minimization over Q in GL(r) by backtracking gradient descent
/// from the least-squares fit of the first term (optionally from `warm`
/// if that start scores better). `sigma_star` are the singular values of
/// the ground truth; `fstar` must be the balanced split U S^{1/2},
/// V S^{1/2}. Outside the contraction basin the local method may stop
/// early, reported as converged = false with the best value found.
AlignmentReport aligned_distance(const FactorPair& f, const FactorPair& fstar,
                                 const Vec& sigma_star, const Mat* warm = nullptr);

/// Alignment objective and its Q-gradient (exposed for testing).
double alignment_objective(const FactorPair& f, const FactorPair& fstar,
                           const Vec& sigma_star, const Mat& q);
Mat alignment_gradient(const FactorPair& f, const FactorPair& fstar,
                       const Vec& sigma_star, const Mat& q);

/// One traced iterate of scaled GD on a multi-term problem. product_ratio
/// is max_i ||L_i R_i^T - X*_i||_F / dist_i over terms whose distance is
/// above the numerical floor (NaN when all are below it).
struct ContractionStep {
  double loss = 0.0;
  double max_dist = 0.0;
  double product_ratio = 0.0;
};

/// Runs scaled GD (delta = 0) from the extended spectral initialization
/// and records aligned distances at every iterate. Returns iters + 1
/// entries: the state before each of the `iters` steps plus the final
/// state. Requires 0 < eta <= 2/3.
std::vector<ContractionStep> contraction_trace(const problems::MultiTermProblem& p,
                                               double eta, int iters);

/// Sampled lower bound on the rank-2r restricted isometry constant of C:
/// max over `trials` random unit-Frobenius rank-<=2r matrices M of
/// |  ||C M||_F^2 - 1 |. Each trial uses its own counter-derived stream,
/// so the estimate is monotone nondecreasing in `trials` for fixed seed.
/// `cols` is the second dimension of the sampled M (defaults to C.cols()).
double empirical_rip(const Mat& c, Index r, int trials, std::uint64_t seed,
                     Index cols = -1);

/// Least-squares fit of log2|value| against log2(width).
struct GammaFit {
  double slope = 0.0;
  double r2 = 0.0;
};

/// Requires at least 4 strictly increasing widths. Values with magnitude
/// below 1e-300 are floored to that sentinel before taking logs.
GammaFit gamma_slope(const std::vector<double>& widths,
                     const std::vector<double>& values);

struct GramScalingResult {
  GammaFit inverse_entry;  // slope of the representative (A^T A)^{-1} size
  GammaFit column_norm;    // slope of the representative ||column||^2
};

/// Monte-Carlo check that gamma[(A^T A)^{-1}] = -gamma[||a||^2] for
/// A in R^{n x r} with entries of magnitude n^c. The representative size
/// of the inverse is the median absolute diagonal entry (off-diagonal
/// entries of the inverse are an order smaller for independent columns
/// and would corrupt the fit).
GramScalingResult gram_inverse_scaling_check(const std::vector<double>& widths,
                                             double c, Index r,
                                             std::uint64_t seed);

}  // namespace rplo::analysis
