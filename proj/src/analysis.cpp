#include "rplo/analysis.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rplo/linalg.hpp"
#include "rplo/optimizers.hpp"
#include "rplo/rng.hpp"

namespace rplo::analysis {
namespace {

constexpr double kDistFloor = 1e-13;

std::optional<Mat> inverse_if_invertible(const Mat& q) {
  Eigen::FullPivLU<Mat> lu(q);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.inverse();
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
  return 0.5 * (hi + v[mid - 1]);
}

}  // namespace

double alignment_objective(const FactorPair& f, const FactorPair& fstar,
                           const Vec& sigma_star, const Mat& q) {
  const auto inv = inverse_if_invertible(q);
  if (!inv) return std::numeric_limits<double>::infinity();
  const Vec root = sigma_star.cwiseSqrt();
  const Mat z = inv->transpose();
  return ((f.L * q - fstar.L) * root.asDiagonal()).squaredNorm() +
         ((f.R * z - fstar.R) * root.asDiagonal()).squaredNorm();
}

Mat alignment_gradient(const FactorPair& f, const FactorPair& fstar,
                       const Vec& sigma_star, const Mat& q) {
  const auto inv = inverse_if_invertible(q);
  if (!inv) throw NumericalError("alignment_gradient: singular Q");
  const Mat z = inv->transpose();
  const Mat grad_first = 2.0 * f.L.transpose() * (f.L * q - fstar.L) * sigma_star.asDiagonal();
  const Mat grad_z = 2.0 * f.R.transpose() * (f.R * z - fstar.R) * sigma_star.asDiagonal();
  return grad_first - z * grad_z.transpose() * z;
}

AlignmentReport aligned_distance(const FactorPair& f, const FactorPair& fstar,
                                 const Vec& sigma_star, const Mat* warm) {
  require_shape(f.rank() == fstar.rank() && sigma_star.size() == f.rank(),
                "aligned_distance ranks");
  const Index r = f.rank();

  // Start from the least-squares fit of the first term, or the warm
  // start if it scores better.
  Mat q = f.L.colPivHouseholderQr().solve(fstar.L);
  if (!inverse_if_invertible(q)) q = Mat::Identity(r, r);
  double value = alignment_objective(f, fstar, sigma_star, q);
  if (warm != nullptr && warm->rows() == r && warm->cols() == r) {
    const double warm_value = alignment_objective(f, fstar, sigma_star, *warm);
    if (warm_value < value) {
      q = *warm;
      value = warm_value;
    }
  }

  AlignmentReport report;
  report.converged = false;
  report.residual = 0.0;
  double step = 1.0;
  constexpr int kMaxIters = 600;
  for (int it = 0; it < kMaxIters; ++it) {
    const Mat grad = alignment_gradient(f, fstar, sigma_star, q);
    const double grad_norm2 = grad.squaredNorm();
    if (grad_norm2 <= 1e-30 * std::max(1.0, value)) {
      report.converged = true;
      break;
    }
    double trial_value = std::numeric_limits<double>::infinity();
    Mat trial;
    while (step > 1e-20) {
      trial = q - step * grad;
      trial_value = alignment_objective(f, fstar, sigma_star, trial);
      if (trial_value <= value - 1e-4 * step * grad_norm2) break;
      step *= 0.5;
    }
    if (!(trial_value < value)) {
      report.converged = true;  // no descent direction progress left
      break;
    }
    report.residual = value - trial_value;
    q = trial;
    value = trial_value;
    step *= 2.0;
    if (report.residual <= 1e-12 * std::max(1.0, value)) {
      report.converged = true;
      break;
    }
  }
  report.dist = std::sqrt(std::max(value, 0.0));
  report.Q = q;
  return report;
}

std::vector<ContractionStep> contraction_trace(const problems::MultiTermProblem& p,
                                               double eta, int iters) {
  if (!(eta > 0.0 && eta <= 2.0 / 3.0))
    throw ConfigError("contraction_trace: eta must satisfy 0 < eta <= 2/3");
  std::vector<FactorPair> pairs = problems::spectral_init(p);
  for (FactorPair& pair : pairs) pair.delta = 0.0;

  const opt::StepConfig cfg{eta, eta, opt::Mode::scaled_raw, opt::Rule::gd};
  std::vector<Mat> warm(static_cast<std::size_t>(p.P));
  std::vector<ContractionStep> trace;
  trace.reserve(static_cast<std::size_t>(iters) + 1);

  for (int t = 0; t <= iters; ++t) {
    const auto [loss, grads] = problems::multiterm_loss_grad(p, pairs);
    ContractionStep rec;
    rec.loss = loss;
    rec.product_ratio = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < p.P; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const auto& truth = p.truth[idx];
      const FactorPair star{truth.L, truth.R, 0.0};
      const Mat* start = warm[idx].size() > 0 ? &warm[idx] : nullptr;
      const AlignmentReport rep =
          aligned_distance(pairs[idx], star, truth.sigma, start);
      warm[idx] = rep.Q;
      rec.max_dist = std::max(rec.max_dist, rep.dist);
      if (rep.dist > kDistFloor) {
        const double err = (pairs[idx].product() - star.product()).norm();
        const double ratio = err / rep.dist;
        rec.product_ratio = std::isnan(rec.product_ratio)
                                ? ratio
                                : std::max(rec.product_ratio, ratio);
      }
    }
    trace.push_back(rec);
    if (t == iters) break;
    for (int i = 0; i < p.P; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      pairs[idx] = opt::gd_step(pairs[idx], grads[idx], cfg);
    }
  }
  return trace;
}

double empirical_rip(const Mat& c, Index r, int trials, std::uint64_t seed,
                     Index cols) {
  if (trials < 1) throw ConfigError("empirical_rip: trials must be >= 1");
  if (cols < 0) cols = c.cols();
  const Index d = c.cols();
  const Index rank = std::min(2 * r, std::min(d, cols));
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    rng::Stream stream(seed, 0x72697000ULL + static_cast<std::uint64_t>(trial));
    const Mat g1 = stream.gaussian_mat(d, rank);
    const Mat g2 = stream.gaussian_mat(cols, rank);
    Mat m = g1 * g2.transpose();
    const double norm = m.norm();
    if (norm == 0.0) continue;
    m /= norm;
    worst = std::max(worst, std::abs((c * m).squaredNorm() - 1.0));
  }
  return worst;
}

GammaFit gamma_slope(const std::vector<double>& widths,
                     const std::vector<double>& values) {
  if (widths.size() < 4)
    throw ConfigError("gamma_slope: need at least 4 widths");
  if (widths.size() != values.size())
    throw ConfigError("gamma_slope: widths/values length mismatch");
  for (std::size_t i = 1; i < widths.size(); ++i)
    if (!(widths[i] > widths[i - 1]))
      throw ConfigError("gamma_slope: widths must be strictly increasing");

  const auto n = static_cast<double>(widths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> xs(widths.size()), ys(widths.size());
  for (std::size_t i = 0; i < widths.size(); ++i) {
    xs[i] = std::log2(widths[i]);
    ys[i] = std::log2(std::max(std::abs(values[i]), 1e-300));
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  GammaFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const double pred = fit.slope * xs[i] + intercept;
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

GramScalingResult gram_inverse_scaling_check(const std::vector<double>& widths,
                                             double c, Index r,
                                             std::uint64_t seed) {
  // odd so the median picks one rep; reciprocal magnitudes then stay
  // exactly reciprocal at r = 1
  constexpr int kReps = 9;
  constexpr int kRetryCap = 100;
  std::vector<double> inv_rep, norm_rep;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const auto n = static_cast<Index>(widths[wi]);
    const double stddev = std::pow(static_cast<double>(n), c);
    std::vector<double> inv_vals, norm_vals;
    for (int rep = 0; rep < kReps; ++rep) {
      rng::Stream stream(seed, (static_cast<std::uint64_t>(wi) << 20) +
                                   static_cast<std::uint64_t>(rep));
      Mat inverse;
      Mat a;
      int attempts = 0;
      for (;; ++attempts) {
        if (attempts >= kRetryCap)
          throw NumericalError("gram_inverse_scaling_check: singular samples");
        a = stream.gaussian_mat(n, r, stddev);
        Eigen::LLT<Mat> chol(Mat(a.transpose() * a));
        if (chol.info() == Eigen::Success) {
          inverse = chol.solve(Mat::Identity(r, r));
          break;
        }
      }
      std::vector<double> diag(static_cast<std::size_t>(r));
      for (Index i = 0; i < r; ++i) diag[static_cast<std::size_t>(i)] = std::abs(inverse(i, i));
      inv_vals.push_back(median(diag));
      std::vector<double> cols(static_cast<std::size_t>(r));
      for (Index i = 0; i < r; ++i) cols[static_cast<std::size_t>(i)] = a.col(i).squaredNorm();
      norm_vals.push_back(median(cols));
    }
    inv_rep.push_back(median(inv_vals));
    norm_rep.push_back(median(norm_vals));
  }
  return GramScalingResult{gamma_slope(widths, inv_rep),
                           gamma_slope(widths, norm_rep)};
}

}  // namespace rplo::analysis
