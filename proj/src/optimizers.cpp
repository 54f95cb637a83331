#include "rplo/optimizers.hpp"

#include <cmath>
#include <limits>

namespace rplo::opt {
namespace {

Mat sign_of(const Mat& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

void check_shapes(const FactorPair& pair, const FactorGrad& grad) {
  require_shape(grad.dL.rows() == pair.rows() && grad.dL.cols() == pair.rank() &&
                    grad.dR.rows() == pair.cols() && grad.dR.cols() == pair.rank(),
                "optimizer gradient vs pair");
}

}  // namespace

AdamState AdamState::zeros(Index m, Index n, Index r, double beta1, double beta2,
                           double eps, double weight_decay) {
  AdamState s;
  s.mL = Mat::Zero(m, r);
  s.vL = Mat::Zero(m, r);
  s.mR = Mat::Zero(n, r);
  s.vR = Mat::Zero(n, r);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.weight_decay = weight_decay;
  return s;
}

AdamState AdamState::plain_preset(Index m, Index n, Index r) {
  return zeros(m, n, r, 0.9, 0.999);
}

AdamState AdamState::scaled_preset(Index m, Index n, Index r) {
  return zeros(m, n, r, 0.7, 0.8);
}

FactorPair gd_step(const FactorPair& pair, const FactorGrad& grad,
                   const StepConfig& cfg) {
  if (cfg.rule != Rule::gd) throw ConfigError("gd_step: cfg.rule must be gd");
  if (cfg.mode == Mode::scaled_processed)
    throw ConfigError("gd_step: scaled_processed is not valid for gd");
  check_shapes(pair, grad);
  const FactorGrad* use = &grad;
  FactorGrad scaled;
  if (cfg.mode == Mode::scaled_raw) {
    scaled = factorized::precondition(pair, grad);
    use = &scaled;
  }
  return FactorPair{pair.L - cfg.lr_L * use->dL, pair.R - cfg.lr_R * use->dR,
                    pair.delta};
}

FactorPair adamw_step(const FactorPair& pair, const FactorGrad& grad,
                      AdamState& state, const StepConfig& cfg) {
  if (cfg.rule != Rule::adamw) throw ConfigError("adamw_step: cfg.rule must be adamw");
  check_shapes(pair, grad);
  require_shape(state.mL.rows() == pair.rows() && state.mR.rows() == pair.cols() &&
                    state.mL.cols() == pair.rank(),
                "adamw state vs pair");
  if (state.t == std::numeric_limits<std::int64_t>::max())
    throw NumericalError("adamw_step: step counter overflow");
  state.t += 1;

  FactorGrad g = grad;
  if (cfg.mode == Mode::scaled_raw) g = factorized::precondition(pair, grad);

  // Decoupled decay on the parameters, before the moment update.
  Mat next_l = pair.L * (1.0 - cfg.lr_L * state.weight_decay);
  Mat next_r = pair.R * (1.0 - cfg.lr_R * state.weight_decay);

  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  state.mL = state.beta1 * state.mL + (1.0 - state.beta1) * g.dL;
  state.vL = state.beta2 * state.vL + (1.0 - state.beta2) * g.dL.cwiseAbs2();
  state.mR = state.beta1 * state.mR + (1.0 - state.beta1) * g.dR;
  state.vR = state.beta2 * state.vR + (1.0 - state.beta2) * g.dR.cwiseAbs2();

  Mat dir_l = (state.mL / corr1).array() /
              ((state.vL / corr2).cwiseSqrt().array() + state.eps);
  Mat dir_r = (state.mR / corr1).array() /
              ((state.vR / corr2).cwiseSqrt().array() + state.eps);
  if (cfg.mode == Mode::scaled_processed) {
    const FactorGrad scaled =
        factorized::precondition(pair, FactorGrad{dir_l, dir_r});
    dir_l = scaled.dL;
    dir_r = scaled.dR;
  }
  next_l -= cfg.lr_L * dir_l;
  next_r -= cfg.lr_R * dir_r;
  return FactorPair{std::move(next_l), std::move(next_r), pair.delta};
}

FactorPair sign_adam_step(const FactorPair& pair, const FactorGrad& grad,
                          const StepConfig& cfg) {
  if (cfg.rule != Rule::sign_adam)
    throw ConfigError("sign_adam_step: cfg.rule must be sign_adam");
  if (cfg.mode == Mode::scaled_raw)
    throw ConfigError("sign_adam_step: use plain or scaled_processed");
  check_shapes(pair, grad);
  FactorGrad g{sign_of(grad.dL), sign_of(grad.dR)};
  if (cfg.mode == Mode::scaled_processed) g = factorized::precondition(pair, g);
  return FactorPair{pair.L - cfg.lr_L * g.dL, pair.R - cfg.lr_R * g.dR,
                    pair.delta};
}

}  // namespace rplo::opt
