#include <doctest.h>

#include <cmath>
#include <vector>

#include "rplo/analysis.hpp"
#include "rplo/optimizers.hpp"
#include "rplo/problems.hpp"
#include "rplo/rng.hpp"
#include "test_util.hpp"

using namespace rplo;
using opt::AdamState;
using opt::Mode;
using opt::Rule;
using opt::StepConfig;
using testutil::random_grad;
using testutil::random_pair;

TEST_SUITE_BEGIN("optimizers");

TEST_CASE("gd_step leaves the pair unchanged on a zero gradient") {
  rng::Stream s(1);
  const FactorPair pair = random_pair(5, 4, 2, s);
  const FactorGrad zero{Mat::Zero(5, 2), Mat::Zero(4, 2)};
  for (Mode mode : {Mode::plain, Mode::scaled_raw}) {
    const FactorPair next = opt::gd_step(pair, zero, {0.1, 0.1, mode, Rule::gd});
    CHECK((next.L - pair.L).norm() == 0.0);
    CHECK((next.R - pair.R).norm() == 0.0);
  }
}

TEST_CASE("gd_step validates rule and mode") {
  rng::Stream s(2);
  const FactorPair pair = random_pair(4, 4, 2, s);
  const FactorGrad grad = random_grad(pair, s);
  CHECK_THROWS_AS(opt::gd_step(pair, grad, {0.1, 0.1, Mode::plain, Rule::adamw}),
                  ConfigError);
  CHECK_THROWS_AS(opt::gd_step(pair, grad, {0.1, 0.1, Mode::scaled_processed, Rule::gd}),
                  ConfigError);
}

TEST_CASE("scaled gd equals plain gd on orthonormal factors") {
  rng::Stream s(3);
  Eigen::HouseholderQR<Mat> ql(s.gaussian_mat(7, 3));
  Eigen::HouseholderQR<Mat> qr(s.gaussian_mat(6, 3));
  FactorPair pair{ql.householderQ() * Mat::Identity(7, 3),
                  qr.householderQ() * Mat::Identity(6, 3), 0.0};
  const FactorGrad grad = random_grad(pair, s);
  const FactorPair plain = opt::gd_step(pair, grad, {0.2, 0.2, Mode::plain, Rule::gd});
  const FactorPair scaled =
      opt::gd_step(pair, grad, {0.2, 0.2, Mode::scaled_raw, Rule::gd});
  CHECK((plain.L - scaled.L).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((plain.R - scaled.R).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("one scaled step reproduces the rank-1 update terms exactly") {
  // scalar b = 2 with a = (1, 0): the preconditioners collapse to 1/b^2
  // and 1/||a||^2, so the product increment must match the three-term
  // closed form evaluated independently.
  const double b = 2.0, y = 0.7, eta = 0.01;
  Vec a(2), x(2);
  a << 1.0, 0.0;
  x << 0.8, -0.4;
  FactorPair pair{Mat::Constant(1, 1, b), a, 0.0};

  const double f = b * a.dot(x);
  const double e = f - y;
  const FactorGrad grad{Mat::Constant(1, 1, e * a.dot(x)), (e * b) * x};

  const FactorPair next = opt::gd_step(pair, grad, {eta, eta, Mode::scaled_raw, Rule::gd});
  const double f_next = (next.L * next.R.transpose() * x)(0);

  const double xx = x.squaredNorm();
  const double ax = a.dot(x);
  const double na2 = a.squaredNorm();
  const double d1 = eta * e * xx;
  const double d2 = eta * ax * ax * e / na2;
  const double d3 = eta * eta * e * e * ax * xx / (b * na2);
  CHECK(f_next - f == doctest::Approx(-d1 - d2 + d3).epsilon(1e-12));

  // term-by-term against the trajectory runner on the same model
  problems::ToyModel model;
  model.W = Vec::Zero(2);
  model.a = a;
  model.x = x;
  model.b = b;
  model.y = y;
  const auto recs = problems::toy_trajectory(model, 1, 0.0, true, eta);
  CHECK(recs[0].d1 == doctest::Approx(d1).epsilon(1e-12));
  CHECK(recs[0].d2 == doctest::Approx(d2).epsilon(1e-12));
  CHECK(recs[0].d3 == doctest::Approx(d3).epsilon(1e-12));
  CHECK(recs[0].f == doctest::Approx(f_next).epsilon(1e-12));
}

TEST_CASE("plain gd_step matches a hand-rolled descent loop") {
  rng::Stream s(4);
  const problems::DecompositionProblem prob{s.gaussian_mat(5, 6), 2};
  FactorPair pair = random_pair(5, 6, 2, s);
  FactorPair manual = pair;
  const double lr = 0.01;
  for (int t = 0; t < 5; ++t) {
    const auto [loss, grad] = problems::decomp_loss_grad(prob, pair);
    (void)loss;
    pair = opt::gd_step(pair, grad, {lr, lr, Mode::plain, Rule::gd});
    const Mat resid = manual.L * manual.R.transpose() - prob.Y;
    const Mat new_l = manual.L - lr * resid * manual.R;
    const Mat new_r = manual.R - lr * resid.transpose() * manual.L;
    manual.L = new_l;
    manual.R = new_r;
    CHECK((pair.L - manual.L).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pair.R - manual.R).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("scaled gd product trajectory is invariant under GL(r) reparameterization") {
  rng::Stream s(5);
  const Index m = 7, n = 6, r = 2;
  const problems::DecompositionProblem prob{s.gaussian_mat(m, n), r};
  FactorPair pair = random_pair(m, n, r, s);
  FactorPair moved = factorized::gl_transform(pair, testutil::random_conditioned(r, 5.0, s));
  const StepConfig cfg{0.05, 0.05, Mode::scaled_raw, Rule::gd};
  for (int t = 0; t < 10; ++t) {
    pair = opt::gd_step(pair, problems::decomp_loss_grad(prob, pair).second, cfg);
    moved = opt::gd_step(moved, problems::decomp_loss_grad(prob, moved).second, cfg);
    CHECK((pair.product() - moved.product()).norm() / pair.product().norm() <= 1e-8);
  }
}

TEST_CASE("adamw_step is identity on a zero gradient with fresh state") {
  rng::Stream s(6);
  const FactorPair pair = random_pair(4, 5, 2, s);
  AdamState state = AdamState::plain_preset(4, 5, 2);
  const FactorGrad zero{Mat::Zero(4, 2), Mat::Zero(5, 2)};
  const FactorPair next =
      opt::adamw_step(pair, zero, state, {0.1, 0.1, Mode::plain, Rule::adamw});
  CHECK((next.L - pair.L).norm() == 0.0);
  CHECK((next.R - pair.R).norm() == 0.0);
  CHECK(state.t == 1);
}

TEST_CASE("adamw_step with zero betas matches the scaled gd direction up to eps") {
  rng::Stream s(7);
  const FactorPair pair = random_pair(6, 5, 2, s);
  const FactorGrad grad = random_grad(pair, s);
  const double big_eps = 1e8;
  AdamState state = AdamState::zeros(6, 5, 2, 0.0, 0.0, big_eps);
  const FactorPair next =
      opt::adamw_step(pair, grad, state, {1.0, 1.0, Mode::scaled_raw, Rule::adamw});
  FactorPair zero_delta = pair;
  const FactorGrad scaled = factorized::precondition(zero_delta, grad);
  // direction ~ g_scaled / eps when eps dominates sqrt(v)
  CHECK((big_eps * (pair.L - next.L) - scaled.dL).norm() / scaled.dL.norm() <= 1e-6);
  CHECK((big_eps * (pair.R - next.R) - scaled.dR).norm() / scaled.dR.norm() <= 1e-6);
}

TEST_CASE("adamw_step with zero betas is entrywise normalized descent") {
  rng::Stream s(8);
  const FactorPair pair = random_pair(5, 4, 3, s);
  const FactorGrad grad = random_grad(pair, s);
  const double eps = 1e-3, lr = 0.25;
  AdamState state = AdamState::zeros(5, 4, 3, 0.0, 0.0, eps);
  const FactorPair next =
      opt::adamw_step(pair, grad, state, {lr, lr, Mode::plain, Rule::adamw});
  const Mat want = grad.dL.array() / (grad.dL.cwiseAbs().array() + eps);
  CHECK(((pair.L - next.L) / lr - want).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("adamw presets carry the shipped hyperparameters") {
  const AdamState plain = AdamState::plain_preset(2, 2, 1);
  CHECK(plain.beta1 == 0.9);
  CHECK(plain.beta2 == 0.999);
  const AdamState scaled = AdamState::scaled_preset(2, 2, 1);
  CHECK(scaled.beta1 == 0.7);
  CHECK(scaled.beta2 == 0.8);
}

TEST_CASE("adamw decoupled weight decay shrinks parameters without touching moments") {
  rng::Stream s(9);
  const FactorPair pair = random_pair(4, 4, 2, s);
  AdamState state = AdamState::zeros(4, 4, 2, 0.9, 0.999, 1e-8, 0.5);
  const FactorGrad zero{Mat::Zero(4, 2), Mat::Zero(4, 2)};
  const double lr = 0.1;
  const FactorPair next =
      opt::adamw_step(pair, zero, state, {lr, lr, Mode::plain, Rule::adamw});
  CHECK((next.L - (1.0 - lr * 0.5) * pair.L).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(state.mL.norm() == 0.0);
}

TEST_CASE("adamw_step is deterministic and shape stable while t increases") {
  rng::Stream s(10);
  const FactorPair pair = random_pair(6, 7, 3, s);
  const FactorGrad grad = random_grad(pair, s);
  AdamState a = AdamState::scaled_preset(6, 7, 3);
  AdamState b = AdamState::scaled_preset(6, 7, 3);
  const StepConfig cfg{0.01, 0.01, Mode::scaled_raw, Rule::adamw};
  FactorPair pa = pair, pb = pair;
  for (int t = 1; t <= 4; ++t) {
    pa = opt::adamw_step(pa, grad, a, cfg);
    pb = opt::adamw_step(pb, grad, b, cfg);
    CHECK(a.t == t);
    CHECK(pa.L.rows() == pair.L.rows());
    CHECK((pa.L - pb.L).cwiseAbs().maxCoeff() == 0.0);  // bit identical
    CHECK((pa.R - pb.R).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sign_adam_step processes gradients entrywise") {
  rng::Stream s(11);
  const FactorPair pair = random_pair(3, 3, 2, s);
  FactorGrad grad{Mat::Constant(3, 2, 0.7), Mat::Constant(3, 2, 2.5)};
  const double lr = 0.5;
  const FactorPair next =
      opt::sign_adam_step(pair, grad, {lr, lr, Mode::plain, Rule::sign_adam});
  CHECK(((pair.L - next.L) / lr - Mat::Ones(3, 2)).cwiseAbs().maxCoeff() <= 1e-15);

  grad.dL.row(1).setZero();  // sign(0) = 0 keeps those rows fixed
  const FactorPair tied =
      opt::sign_adam_step(pair, grad, {lr, lr, Mode::plain, Rule::sign_adam});
  CHECK((tied.L.row(1) - pair.L.row(1)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(
      opt::sign_adam_step(pair, grad, {lr, lr, Mode::scaled_raw, Rule::sign_adam}),
      ConfigError);
}

TEST_CASE("sign-processed right gradient applied to x grows linearly in width") {
  // Assumption-style check: after the first step from LoRA-zero init the
  // sign gradient of the right factor satisfies ||g_R^T x||_inf = Theta(n).
  std::vector<double> widths{64, 128, 256, 512, 1024, 2048, 4096};
  std::vector<double> values;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    std::vector<double> trials;
    for (int trial = 0; trial < 5; ++trial) {
      const auto model = problems::WidthModel::make(
          static_cast<Index>(widths[wi]), 4, rng::derive_seed(99, wi * 16 + trial));
      FactorPair pair = model.pair;
      const StepConfig cfg{0.1, 0.1, Mode::plain, Rule::sign_adam};
      pair = opt::sign_adam_step(pair, problems::width_loss_grad(model, pair).second, cfg);
      const FactorGrad grad = problems::width_loss_grad(model, pair).second;
      const Mat g = grad.dR.unaryExpr(
          [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
      trials.push_back((g.transpose() * model.x).cwiseAbs().maxCoeff());
    }
    values.push_back(testutil::median(trials));
  }
  const auto fit = analysis::gamma_slope(widths, values);
  CHECK(fit.slope >= 0.8);
  CHECK(fit.slope <= 1.2);
}

TEST_SUITE_END();
