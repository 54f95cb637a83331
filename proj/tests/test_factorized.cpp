#include <doctest.h>

#include <cmath>

#include "rplo/factorized.hpp"
#include "rplo/linalg.hpp"
#include "rplo/problems.hpp"
#include "rplo/rng.hpp"
#include "test_util.hpp"

using namespace rplo;
using factorized::gl_transform;
using factorized::metric_inner;
using factorized::precondition;
using factorized::projection_residual;
using testutil::random_conditioned;
using testutil::random_grad;
using testutil::random_pair;

TEST_SUITE_BEGIN("factorized");

TEST_CASE("precondition with orthonormal left factor leaves dR unchanged") {
  rng::Stream s(1);
  Eigen::HouseholderQR<Mat> qr(s.gaussian_mat(8, 3));
  FactorPair pair{qr.householderQ() * Mat::Identity(8, 3), s.gaussian_mat(6, 3), 0.0};
  const FactorGrad grad = random_grad(pair, s);
  const FactorGrad scaled = precondition(pair, grad);
  CHECK((scaled.dR - grad.dR).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("precondition at zero factors is a pure 1/delta scaling") {
  FactorPair pair{Mat::Zero(4, 2), Mat::Zero(5, 2), 1e-6};
  rng::Stream s(2);
  const FactorGrad grad = random_grad(pair, s);
  const FactorGrad scaled = precondition(pair, grad);
  CHECK((scaled.dL - 1e6 * grad.dL).norm() / grad.dL.norm() <= 1e-9);
  CHECK((scaled.dR - 1e6 * grad.dR).norm() / grad.dR.norm() <= 1e-9);
}

TEST_CASE("precondition multiplies back to the raw gradient") {
  rng::Stream s(3);
  const FactorPair pair = random_pair(7, 9, 3, s);
  const FactorGrad grad = random_grad(pair, s);
  const FactorGrad scaled = precondition(pair, grad);
  const Mat gram_r = pair.R.transpose() * pair.R;
  const Mat gram_l = pair.L.transpose() * pair.L;
  CHECK((scaled.dL * gram_r - grad.dL).cwiseAbs().maxCoeff() <= 1e-10 * grad.dL.norm());
  CHECK((scaled.dR * gram_l - grad.dR).cwiseAbs().maxCoeff() <= 1e-10 * grad.dR.norm());
}

TEST_CASE("precondition demands delta for singular Gram matrices") {
  rng::Stream s(4);
  FactorPair pair{Mat::Zero(4, 2), s.gaussian_mat(5, 2), 0.0};
  const FactorGrad grad = random_grad(pair, s);
  CHECK_THROWS_WITH_AS(precondition(pair, grad), doctest::Contains("delta"),
                       NumericalError);
}

TEST_CASE("metric_inner is zero on zero tangents and Euclidean on orthonormal pairs") {
  rng::Stream s(5);
  const FactorPair pair = random_pair(6, 5, 2, s);
  const TangentPair zero{Mat::Zero(6, 2), Mat::Zero(5, 2)};
  CHECK(metric_inner(pair, zero, zero) == 0.0);

  Eigen::HouseholderQR<Mat> ql(s.gaussian_mat(6, 2));
  Eigen::HouseholderQR<Mat> qm(s.gaussian_mat(5, 2));
  const FactorPair ortho{ql.householderQ() * Mat::Identity(6, 2),
                         qm.householderQ() * Mat::Identity(5, 2), 0.0};
  const TangentPair u{s.gaussian_mat(6, 2), s.gaussian_mat(5, 2)};
  const TangentPair v{s.gaussian_mat(6, 2), s.gaussian_mat(5, 2)};
  const double euclid = (u.etaL.transpose() * v.etaL).trace() +
                        (u.etaR.transpose() * v.etaR).trace();
  CHECK(metric_inner(ortho, u, v) == doctest::Approx(euclid).epsilon(1e-10));
}

TEST_CASE("metric_inner is symmetric and bilinear") {
  rng::Stream s(6);
  const FactorPair pair = random_pair(5, 4, 3, s);
  const TangentPair u{s.gaussian_mat(5, 3), s.gaussian_mat(4, 3)};
  const TangentPair v{s.gaussian_mat(5, 3), s.gaussian_mat(4, 3)};
  const TangentPair w{s.gaussian_mat(5, 3), s.gaussian_mat(4, 3)};
  CHECK(metric_inner(pair, u, v) == doctest::Approx(metric_inner(pair, v, u)));
  const TangentPair combo{2.0 * v.etaL + 0.5 * w.etaL, 2.0 * v.etaR + 0.5 * w.etaR};
  CHECK(metric_inner(pair, u, combo) ==
        doctest::Approx(2.0 * metric_inner(pair, u, v) +
                        0.5 * metric_inner(pair, u, w)));
}

TEST_CASE("preconditioned gradient is dual to the Euclidean pairing") {
  rng::Stream s(7);
  for (int trial = 0; trial < 20; ++trial) {
    const FactorPair pair = random_pair(8, 6, 3, s);
    const FactorGrad grad = random_grad(pair, s);
    const FactorGrad scaled = precondition(pair, grad);
    const TangentPair direction{s.gaussian_mat(8, 3), s.gaussian_mat(6, 3)};
    const TangentPair riem{scaled.dL, scaled.dR};
    const double lhs = metric_inner(pair, riem, direction);
    const double rhs = (grad.dL.transpose() * direction.etaL).trace() +
                       (grad.dR.transpose() * direction.etaR).trace();
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("projection_residual vanishes without a step or a gradient") {
  rng::Stream s(8);
  const FactorPair pair = random_pair(7, 6, 2, s);
  CHECK(projection_residual(pair, s.gaussian_mat(7, 6), 0.0) == 0.0);
  CHECK(projection_residual(pair, Mat::Zero(7, 6), 0.1) == 0.0);
}

TEST_CASE("projection_residual is second order in the step size") {
  rng::Stream s(9);
  const FactorPair pair = random_pair(10, 8, 3, s);
  const Mat g = s.gaussian_mat(10, 8);
  const double at_01 = projection_residual(pair, g, 0.1);
  const double at_005 = projection_residual(pair, g, 0.05);
  const double ratio = at_01 / at_005;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("product is invariant under the GL(r) action") {
  rng::Stream s(10);
  const FactorPair pair = random_pair(6, 7, 3, s);
  const Mat q = random_conditioned(3, 8.0, s);
  const FactorPair moved = gl_transform(pair, q);
  CHECK((moved.product() - pair.product()).norm() / pair.product().norm() <= 1e-10);
  CHECK_THROWS_AS(gl_transform(pair, Mat::Zero(3, 3)), NumericalError);
}

TEST_CASE("one preconditioned step is GL(r) equivariant in the product") {
  rng::Stream s(11);
  const Index m = 8, n = 7, r = 3;
  const FactorPair pair = random_pair(m, n, r, s);
  const Mat q = random_conditioned(r, 6.0, s);
  const FactorPair moved = gl_transform(pair, q);
  const problems::DecompositionProblem prob{s.gaussian_mat(m, n), r};
  const double eta = 0.05;

  auto stepped_product = [&](const FactorPair& p) {
    const auto [loss, grad] = problems::decomp_loss_grad(prob, p);
    (void)loss;
    FactorPair zero_delta = p;
    zero_delta.delta = 0.0;
    const FactorGrad scaled = precondition(zero_delta, grad);
    return Mat((p.L - eta * scaled.dL) * (p.R - eta * scaled.dR).transpose());
  };

  const Mat base = stepped_product(pair);
  const Mat transformed = stepped_product(moved);
  CHECK((base - transformed).norm() / base.norm() <= 1e-8);
}

TEST_SUITE_END();
