#pragma once

#include <cstdint>

#include "rplo/factorized.hpp"
#include "rplo/mat.hpp"

namespace rplo::opt {

/// Where the preconditioner is applied.
///  - plain:            no preconditioning
///  - scaled_raw:       precondition the raw gradient before any processing
///  - scaled_processed: process first (moments / sign), precondition the result
enum class Mode { plain, scaled_raw, scaled_processed };

enum class Rule { gd, adamw, sign_adam };

struct StepConfig {
  double lr_L = 0.0;
  double lr_R = 0.0;
  Mode mode = Mode::plain;
  Rule rule = Rule::gd;
};

/// Adam moment accumulators for one factor pair. Owned by exactly one
/// run; adamw_step mutates it in place.
struct AdamState {
  Mat mL, vL, mR, vR;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static AdamState zeros(Index m, Index n, Index r, double beta1, double beta2,
                         double eps = 1e-8, double weight_decay = 0.0);
  /// Shipped presets: plain AdamW uses (0.9, 0.999); the scaled variant
  /// ships with the lower (0.7, 0.8) pair that works better with
  /// gradient scaling.
  static AdamState plain_preset(Index m, Index n, Index r);
  static AdamState scaled_preset(Index m, Index n, Index r);
};

/// One (possibly scaled) gradient-descent step. Both factors are updated
/// simultaneously from the pre-step values.
FactorPair gd_step(const FactorPair& pair, const FactorGrad& grad,
                   const StepConfig& cfg);

/// One AdamW step with bias correction and decoupled weight decay
/// (decay hits the parameters, never the gradient, and is not
/// preconditioned). scaled_raw preconditions the raw gradient before the
/// moment update; scaled_processed preconditions the finished Adam
/// direction instead.
FactorPair adamw_step(const FactorPair& pair, const FactorGrad& grad,
                      AdamState& state, const StepConfig& cfg);

/// Momentum-free Adam: the processed gradient is the entrywise sign of
/// the raw gradient, with sign(0) = 0.
FactorPair sign_adam_step(const FactorPair& pair, const FactorGrad& grad,
                          const StepConfig& cfg);

}  // namespace rplo::opt
