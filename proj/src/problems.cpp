#include "rplo/problems.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "rplo/linalg.hpp"
#include "rplo/rng.hpp"

namespace rplo::problems {
namespace {

constexpr int kMaskSampleCap = 100000;

Mat thin_orthonormal(Index rows, Index cols, rng::Stream& stream) {
  const Mat g = stream.gaussian_mat(rows, cols);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(rows, cols);
}

Vec geometric_sigma(Index r, double kappa) {
  Vec sigma(r);
  for (Index i = 0; i < r; ++i) {
    const double t = r == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(r - 1);
    sigma(i) = std::pow(kappa, -t);
  }
  return sigma;
}

TruthFactors make_truth(Index d, Index c, Index r, double kappa,
                        rng::Stream& stream) {
  const Vec sigma = geometric_sigma(r, kappa);
  const Vec root = sigma.cwiseSqrt();
  const Mat u = thin_orthonormal(d, r, stream);
  const Mat v = thin_orthonormal(c, r, stream);
  return TruthFactors{u * root.asDiagonal(), v * root.asDiagonal(), sigma};
}

Mat assemble_response(const MultiTermProblem& p) {
  Mat y = Mat::Zero(p.X.rows(), p.W[0].cols());
  for (int i = 0; i < p.P; ++i)
    y += p.masks[i].asDiagonal() * (p.X * (p.W[i] + p.truth[i].L * p.truth[i].R.transpose()));
  return y;
}

std::vector<bool> pattern_of(const Mat& x, const Vec& u) {
  std::vector<bool> bits(static_cast<std::size_t>(x.rows()));
  const Vec proj = x * u;
  for (Index i = 0; i < proj.size(); ++i) bits[static_cast<std::size_t>(i)] = proj(i) >= 0.0;
  return bits;
}

Vec pattern_to_mask(const std::vector<bool>& bits) {
  Vec mask(static_cast<Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) mask(static_cast<Index>(i)) = bits[i] ? 1.0 : 0.0;
  return mask;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

DecompositionProblem make_decomposition(Index m, Index n, Index r, double kappa,
                                        std::uint64_t seed) {
  if (r < 1 || r > std::min(m, n)) throw ConfigError("make_decomposition: bad rank");
  if (kappa < 1.0) throw ConfigError("make_decomposition: kappa must be >= 1");
  rng::Stream stream(seed, 0x6d61646bULL);
  const Vec sigma = geometric_sigma(r, kappa);
  const Mat u = thin_orthonormal(m, r, stream);
  const Mat v = thin_orthonormal(n, r, stream);
  return DecompositionProblem{u * sigma.asDiagonal() * v.transpose(), r};
}

std::pair<double, FactorGrad> decomp_loss_grad(const DecompositionProblem& p,
                                               const FactorPair& pair) {
  require_shape(pair.rows() == p.Y.rows() && pair.cols() == p.Y.cols(),
                "decomp_loss_grad pair vs Y");
  const Mat resid = pair.product() - p.Y;
  const double loss = 0.5 * resid.squaredNorm();
  return {loss, FactorGrad{resid * pair.R, resid.transpose() * pair.L}};
}

// ---------------------------------------------------------------------------
// Multi-term sensing
// ---------------------------------------------------------------------------

Mat MultiTermProblem::measurement(int i) const {
  return masks[static_cast<std::size_t>(i)].asDiagonal() * X;
}

Mat MultiTermProblem::reduced_response() const {
  Mat y = Y;
  for (int i = 0; i < P; ++i)
    y -= masks[static_cast<std::size_t>(i)].asDiagonal() * (X * W[static_cast<std::size_t>(i)]);
  return y;
}

std::vector<Vec> arrangements(const Mat& X, int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("arrangements: samples must be >= 1");
  rng::Stream stream(seed, 0x61727267ULL);
  std::set<std::vector<bool>> seen;
  std::vector<Vec> masks;
  for (int s = 0; s < samples; ++s) {
    const Vec u = stream.gaussian_vec(X.cols());
    auto bits = pattern_of(X, u);
    if (seen.insert(bits).second) masks.push_back(pattern_to_mask(bits));
  }
  return masks;
}

double arrangement_bound(Index n, Index rank) {
  if (rank == 0) return 1.0;
  const double r = static_cast<double>(rank);
  return 2.0 * r * std::pow(M_E * static_cast<double>(n - 1) / r, r);
}

std::vector<Vec> arrangements_sweep_2d(const Mat& X) {
  require_shape(X.cols() == 2, "arrangements_sweep_2d needs d = 2");
  // Patterns change only when u crosses a direction orthogonal to a row;
  // probing the midpoint of every arc between such critical angles
  // enumerates all patterns of full angular measure.
  std::vector<double> angles;
  for (Index i = 0; i < X.rows(); ++i) {
    const double base = std::atan2(X(i, 1), X(i, 0));
    for (double shift : {M_PI / 2.0, -M_PI / 2.0}) {
      double a = std::fmod(base + shift, 2.0 * M_PI);
      if (a < 0) a += 2.0 * M_PI;
      angles.push_back(a);
    }
  }
  std::sort(angles.begin(), angles.end());
  std::set<std::vector<bool>> seen;
  std::vector<Vec> masks;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double next = i + 1 < angles.size() ? angles[i + 1] : angles[0] + 2.0 * M_PI;
    const double mid = 0.5 * (angles[i] + next);
    const Vec u = (Vec(2) << std::cos(mid), std::sin(mid)).finished();
    auto bits = pattern_of(X, u);
    if (seen.insert(bits).second) masks.push_back(pattern_to_mask(bits));
  }
  return masks;
}

MultiTermProblem build_multiterm(const Dims& dims, Index r, int P, double kappa,
                                 std::uint64_t seed) {
  if (r < 1 || r > std::min(dims.d, dims.c)) throw ConfigError("build_multiterm: bad rank");
  if (P < 1) throw ConfigError("build_multiterm: P must be >= 1");
  if (kappa < 1.0) throw ConfigError("build_multiterm: kappa must be >= 1");
  rng::Stream stream(seed, 0x6d756c74ULL);

  // First pass with unit variance to find P distinct masks; the final X
  // is rescaled once the mean support is known.
  Mat x = stream.gaussian_mat(dims.n, dims.d);
  std::set<std::vector<bool>> seen;
  std::vector<Vec> masks;
  for (int s = 0; s < kMaskSampleCap && static_cast<int>(masks.size()) < P; ++s) {
    const Vec u = stream.gaussian_vec(dims.d);
    auto bits = pattern_of(x, u);
    if (seen.insert(bits).second) masks.push_back(pattern_to_mask(bits));
  }
  if (static_cast<int>(masks.size()) < P)
    throw ConfigError("build_multiterm: could not find " + std::to_string(P) +
                      " distinct masks in " + std::to_string(kMaskSampleCap) +
                      " samples; increase n");

  double mean_support = 0.0;
  for (const Vec& m : masks) mean_support += m.sum();
  mean_support = std::max(mean_support / static_cast<double>(P), 1.0);
  x *= 1.0 / std::sqrt(static_cast<double>(dims.d) * mean_support);

  MultiTermProblem p;
  p.masks = std::move(masks);
  p.X = std::move(x);
  p.r = r;
  p.P = P;
  for (int i = 0; i < P; ++i) {
    p.truth.push_back(make_truth(dims.d, dims.c, r, kappa, stream));
    p.W.push_back(stream.gaussian_mat(dims.d, dims.c));
  }
  p.Y = assemble_response(p);
  return p;
}

MultiTermProblem build_multiterm_compliant(const Dims& dims, Index r, int P,
                                           double kappa, double rho2,
                                           std::uint64_t seed) {
  if (r < 1 || r > std::min(dims.d, dims.c))
    throw ConfigError("build_multiterm_compliant: bad rank");
  if (P < 1) throw ConfigError("build_multiterm_compliant: P must be >= 1");
  if (rho2 < 0.0 || rho2 >= 1.0) throw ConfigError("build_multiterm_compliant: rho2 in [0,1)");
  if (dims.n / P < dims.d + 2)
    throw ConfigError("build_multiterm_compliant: need n/P >= d + 2");
  rng::Stream stream(seed, 0x626c6f63ULL);

  std::vector<Index> bounds(static_cast<std::size_t>(P) + 1);
  for (int i = 0; i <= P; ++i)
    bounds[static_cast<std::size_t>(i)] = dims.n * i / P;

  MultiTermProblem p;
  p.r = r;
  p.P = P;
  p.X = Mat::Zero(dims.n, dims.d);
  const double rho = std::sqrt(rho2);

  // Masks: contiguous blocks; block i additionally claims the first row
  // of block i+1, which is the single shared row of the pair (i, i+1).
  for (int i = 0; i < P; ++i) {
    Vec mask = Vec::Zero(dims.n);
    mask.segment(bounds[i], bounds[i + 1] - bounds[i]).setOnes();
    if (i + 1 < P) mask(bounds[i + 1]) = 1.0;
    p.masks.push_back(mask);
  }
  std::vector<Index> shared_rows;
  for (int i = 1; i < P; ++i) shared_rows.push_back(bounds[static_cast<std::size_t>(i)]);
  for (Index row : shared_rows) {
    Vec v = stream.gaussian_vec(dims.d);
    p.X.row(row) = (rho / v.norm()) * v.transpose();
  }

  // Core rows of each block carry Q * (I - sum rho^2 v v^T)^{1/2} with Q
  // orthonormal-column, which makes C_i^T C_i = I exactly including the
  // shared-row contributions.
  for (int i = 0; i < P; ++i) {
    std::vector<Index> core;
    Mat correction = Mat::Identity(dims.d, dims.d);
    for (Index row = 0; row < dims.n; ++row) {
      if (p.masks[static_cast<std::size_t>(i)](row) == 0.0) continue;
      if (std::find(shared_rows.begin(), shared_rows.end(), row) != shared_rows.end())
        correction -= p.X.row(row).transpose() * p.X.row(row);
      else
        core.push_back(row);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(correction);
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw NumericalError("build_multiterm_compliant: rho2 too large");
    const Mat half = eig.eigenvectors() *
                     eig.eigenvalues().cwiseSqrt().asDiagonal() *
                     eig.eigenvectors().transpose();
    const Mat q = thin_orthonormal(static_cast<Index>(core.size()), dims.d, stream);
    const Mat block = q * half;
    for (std::size_t k = 0; k < core.size(); ++k) p.X.row(core[k]) = block.row(static_cast<Index>(k));
  }

  for (int i = 0; i < P; ++i) {
    p.truth.push_back(make_truth(dims.d, dims.c, r, kappa, stream));
    p.W.push_back(stream.gaussian_mat(dims.d, dims.c));
  }
  p.Y = assemble_response(p);
  return p;
}

std::pair<double, std::vector<FactorGrad>> multiterm_loss_grad(
    const MultiTermProblem& p, const std::vector<FactorPair>& pairs) {
  require_shape(static_cast<int>(pairs.size()) == p.P, "multiterm pairs vs P");
  Mat resid = -p.reduced_response();
  for (int i = 0; i < p.P; ++i) {
    const FactorPair& pair = pairs[static_cast<std::size_t>(i)];
    require_shape(pair.rows() == p.X.cols() && pair.cols() == p.Y.cols() &&
                      pair.rank() == p.r,
                  "multiterm pair " + std::to_string(i));
    resid += p.measurement(i) * pair.product();
  }
  const double loss = 0.5 * resid.squaredNorm();
  std::vector<FactorGrad> grads;
  grads.reserve(pairs.size());
  for (int i = 0; i < p.P; ++i) {
    const Mat back = p.measurement(i).transpose() * resid;  // d x c
    grads.push_back(FactorGrad{back * pairs[static_cast<std::size_t>(i)].R,
                               back.transpose() * pairs[static_cast<std::size_t>(i)].L});
  }
  return {loss, std::move(grads)};
}

std::vector<FactorPair> spectral_init(const MultiTermProblem& p) {
  const Mat reduced = p.reduced_response();
  std::vector<FactorPair> pairs;
  pairs.reserve(static_cast<std::size_t>(p.P));
  for (int i = 0; i < p.P; ++i) {
    auto [l, r] = linalg::best_rank_r(p.measurement(i).transpose() * reduced, p.r);
    pairs.push_back(FactorPair{std::move(l), std::move(r)});
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Width model
// ---------------------------------------------------------------------------

WidthModel WidthModel::make(Index n, Index r, std::uint64_t seed) {
  if (n < 1 || r < 1) throw ConfigError("WidthModel: n and r must be >= 1");
  rng::Stream stream(seed, 0x77696474ULL);
  WidthModel model;
  model.n = n;
  model.m = n;  // the simplest Theta(n) output dimension
  model.sigma_a2 = 1.0 / static_cast<double>(n);
  model.sigma_b2 = 0.0;
  model.pair.L = Mat::Zero(model.m, r);
  model.pair.R = stream.gaussian_mat(n, r, std::sqrt(model.sigma_a2));
  model.x = stream.gaussian_vec(n);
  model.y = stream.gaussian_vec(model.m);
  return model;
}

std::pair<double, FactorGrad> width_loss_grad(const WidthModel& model,
                                              const FactorPair& pair) {
  const Vec resid = pair.L * (pair.R.transpose() * model.x) - model.y;
  const double loss = 0.5 * resid.squaredNorm();
  return {loss, FactorGrad{resid * (pair.R.transpose() * model.x).transpose(),
                           model.x * (pair.L.transpose() * resid).transpose()}};
}

std::vector<double> width_forward_increment(const WidthModel& model, int steps,
                                            const opt::StepConfig& cfg) {
  if (cfg.rule == opt::Rule::gd)
    throw ConfigError("width_forward_increment: rule must be sign_adam or adamw");
  std::vector<double> increments;
  if (steps <= 0) return increments;
  FactorPair pair = model.pair;
  opt::AdamState state = cfg.mode == opt::Mode::plain
                             ? opt::AdamState::plain_preset(model.m, model.n, pair.rank())
                             : opt::AdamState::scaled_preset(model.m, model.n, pair.rank());
  Vec f_prev = pair.L * (pair.R.transpose() * model.x);
  for (int t = 0; t < steps; ++t) {
    const auto [loss, grad] = width_loss_grad(model, pair);
    (void)loss;
    pair = cfg.rule == opt::Rule::sign_adam ? opt::sign_adam_step(pair, grad, cfg)
                                            : opt::adamw_step(pair, grad, state, cfg);
    const Vec f = pair.L * (pair.R.transpose() * model.x);
    if (!f.allFinite()) {
      // overflow sentinel for this and all remaining steps
      while (static_cast<int>(increments.size()) < steps)
        increments.push_back(std::numeric_limits<double>::infinity());
      return increments;
    }
    increments.push_back((f - f_prev).cwiseAbs().maxCoeff());
    f_prev = f;
  }
  return increments;
}

// ---------------------------------------------------------------------------
// Toy model
// ---------------------------------------------------------------------------

ToyModel ToyModel::make(Index n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("ToyModel: n must be >= 2");
  rng::Stream stream(seed, 0x746f79ULL);
  ToyModel model;
  model.W = Vec::Zero(n);
  model.a = Vec::Zero(n);
  model.x = Vec::Ones(n);
  model.b = std::abs(stream.gaussian()) + 0.1;
  model.y = stream.gaussian();
  return model;
}

std::vector<ToyRecord> toy_trajectory(const ToyModel& model, int steps,
                                      double c_exponent, bool scaled,
                                      double eta_scale) {
  const Index n = model.x.size();
  if (n < 2) throw ConfigError("toy_trajectory: n must be >= 2");
  const double eta = eta_scale * std::pow(static_cast<double>(n), c_exponent);
  const double wx = model.W.dot(model.x);
  const double xx = model.x.squaredNorm();

  double b = model.b;
  Vec a = model.a;
  std::vector<ToyRecord> records;
  records.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  for (int t = 0; t < steps; ++t) {
    ToyRecord rec;
    rec.b = b;
    rec.ax = a.dot(model.x);
    rec.a_norm2 = a.squaredNorm();
    rec.err = wx + b * rec.ax - model.y;
    const double e = rec.err;
    if (!scaled) {
      rec.d1 = eta * b * b * e * xx;
      rec.d2 = eta * rec.ax * rec.ax * e;
      rec.d3 = eta * eta * e * e * b * rec.ax * xx;
      const double gb = e * rec.ax;
      const Vec ga = (e * b) * model.x;
      b -= eta * gb;
      a -= eta * ga;
    } else {
      if (b == 0.0)
        throw NumericalError(
            "toy_trajectory: b = 0 in scaled mode; initialize b away from "
            "zero (sigma_b^2 = Theta(1))");
      // ||a|| = 0 only together with a^T x = 0, where the preconditioned
      // b-gradient (f - y) a^T x / ||a||^2 is taken as zero.
      const bool a_zero = rec.a_norm2 == 0.0;
      rec.d1 = eta * e * xx;
      rec.d2 = a_zero ? 0.0 : eta * rec.ax * rec.ax * e / rec.a_norm2;
      rec.d3 = a_zero ? 0.0 : eta * eta * e * e * rec.ax * xx / (b * rec.a_norm2);
      const double gb = a_zero ? 0.0 : e * rec.ax / rec.a_norm2;
      const Vec ga = (e / b) * model.x;
      b -= eta * gb;
      a -= eta * ga;
    }
    rec.f = wx + b * a.dot(model.x);
    records.push_back(rec);
  }
  return records;
}

}  // namespace rplo::problems
