#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rplo/factorized.hpp"
#include "rplo/mat.hpp"
#include "rplo/optimizers.hpp"

namespace rplo::problems {

// ---------------------------------------------------------------------------
// Least-squares decomposition, loss = ||L R^T - Y||_F^2 / 2.
// ---------------------------------------------------------------------------

struct DecompositionProblem {
  Mat Y;
  Index r = 1;
};

/// Rank-r target with singular values geometrically spaced between
/// sigma_max = 1 and 1/kappa, so kappa is the exact condition number.
DecompositionProblem make_decomposition(Index m, Index n, Index r, double kappa,
                                        std::uint64_t seed);

std::pair<double, FactorGrad> decomp_loss_grad(const DecompositionProblem& p,
                                               const FactorPair& pair);

// ---------------------------------------------------------------------------
// Multi-term arrangement-masked sensing.
// ---------------------------------------------------------------------------

/// Ground-truth factors in the balanced split L = U * S^{1/2},
/// R = V * S^{1/2}, with the singular values kept alongside.
struct TruthFactors {
  Mat L;
  Mat R;
  Vec sigma;
};

struct MultiTermProblem {
  std::vector<Vec> masks;  // diagonals of the 0/1 matrices D_i
  Mat X;                   // n x d shared data matrix
  std::vector<Mat> W;      // d x c frozen base weights
  Mat Y;                   // n x c response
  std::vector<TruthFactors> truth;
  Index r = 1;
  int P = 1;

  Mat measurement(int i) const;       // C_i = D_i X
  Mat reduced_response() const;       // Y' = Y - sum_j D_j X W_j
};

/// Distinct ReLU activation patterns diag(1{X u >= 0}) over `samples`
/// standard Gaussian draws of u. Every mask is idempotent and the count
/// is bounded by arrangement_bound(rows, rank(X)).
std::vector<Vec> arrangements(const Mat& X, int samples, std::uint64_t seed);

/// The arrangement-count bound 2 r (e (n - 1) / r)^r.
double arrangement_bound(Index n, Index rank);

/// Exhaustive pattern enumeration for d = 2 by sweeping the unit circle;
/// test oracle for the sampled count.
std::vector<Vec> arrangements_sweep_2d(const Mat& X);

struct Dims {
  Index n = 0;  // samples / mask size
  Index d = 0;  // data dimension
  Index c = 0;  // output dimension
};

/// Generic instance: Gaussian X with entry variance 1/(d * mean mask
/// support), masks sampled from arrangements (resampled until P distinct
/// masks exist), ground truths with condition number kappa, Gaussian W,
/// and Y assembled exactly from the response model.
MultiTermProblem build_multiterm(const Dims& dims, Index r, int P, double kappa,
                                 std::uint64_t seed);

/// Near-isometric instance for convergence studies: P block masks that
/// overlap in single low-amplitude rows (amplitude^2 = rho2), with each
/// block of X column-orthonormalized so that C_i^T C_i = I exactly and
/// the cross terms X^T D_i D_j X have spectral norm exactly rho2. These
/// masks are explicit 0/1 diagonals rather than sampled arrangements.
MultiTermProblem build_multiterm_compliant(const Dims& dims, Index r, int P,
                                           double kappa, double rho2,
                                           std::uint64_t seed);

std::pair<double, std::vector<FactorGrad>> multiterm_loss_grad(
    const MultiTermProblem& p, const std::vector<FactorPair>& pairs);

/// Extended spectral initialization: pair_i is the balanced best rank-r
/// approximation of (D_i X)^T (Y - sum_j D_j X W_j).
std::vector<FactorPair> spectral_init(const MultiTermProblem& p);

// ---------------------------------------------------------------------------
// Infinite-width feature-learning models.
// ---------------------------------------------------------------------------

/// One LoRA layer L R^T x with output dimension m = n. The right factor
/// starts Gaussian with variance 1/n and the left factor at zero, so the
/// adapter output is exactly zero at initialization.
struct WidthModel {
  Index n = 0;
  Index m = 0;
  Vec x;
  Vec y;
  FactorPair pair;
  double sigma_a2 = 0.0;
  double sigma_b2 = 0.0;

  static WidthModel make(Index n, Index r, std::uint64_t seed);
};

/// loss = ||L R^T x - y||^2 / 2 and its factor gradients.
std::pair<double, FactorGrad> width_loss_grad(const WidthModel& model,
                                              const FactorPair& pair);

/// Runs `cfg` on a copy of the model pair for `steps` steps and records
/// ||f_t - f_{t-1}||_inf with f_t = L_t R_t^T x. Divergence to
/// non-finite values is recorded as an infinity sentinel, not a crash.
std::vector<double> width_forward_increment(const WidthModel& model, int steps,
                                            const opt::StepConfig& cfg);

/// Rank-1 scalar-output toy model f(x) = (W + b a^T) x with quadratic
/// loss (f(x) - y)^2 / 2. a starts at zero; b is |N(0,1)| + 0.1 to stay
/// clear of the b = 0 singularity of the scaled update.
struct ToyModel {
  Vec W;
  Vec a;
  Vec x;
  double b = 1.0;
  double y = 0.0;

  static ToyModel make(Index n, std::uint64_t seed);
};

/// Per-step trajectory record: the post-step output, the three update
/// terms of the step, and the pre-step state they were computed from.
struct ToyRecord {
  double f = 0.0;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double b = 0.0;        // pre-step b
  double ax = 0.0;       // pre-step a^T x
  double a_norm2 = 0.0;  // pre-step ||a||^2
  double err = 0.0;      // pre-step f - y
};

/// GD on the toy loss with step size eta = eta_scale * n^c, either plain
/// or with the scalar preconditioners 1/b^2 (on a) and 1/||a||^2 (on b).
/// At ||a|| = 0 the b-side update is exactly zero (its raw gradient
/// carries an a^T x factor); b = 0 in scaled mode is an error asking for
/// a nonzero b initialization.
std::vector<ToyRecord> toy_trajectory(const ToyModel& model, int steps,
                                      double c_exponent, bool scaled,
                                      double eta_scale = 1e-3);

}  // namespace rplo::problems
