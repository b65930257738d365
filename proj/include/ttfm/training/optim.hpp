#pragma once

#include <cstdint>

#include "ttfm/common.hpp"

namespace ttfm::training {

struct AdamConfig {
  double lr_peak = 1e-4;
  std::uint64_t warmup_iters = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Linear ramp from 0 at iter 0 to lr_peak at warmup_iters, constant afterwards.
double lr_at(std::uint64_t iter, const AdamConfig& cfg);

struct OptimState {
  Vec m;
  Vec v;
  std::uint64_t step = 0;
  AdamConfig cfg;

  static OptimState zeros(Eigen::Index n, const AdamConfig& cfg);
};

/// Adam update with bias correction. Throws NonFiniteError on a NaN/Inf gradient.
void adam_step(Vec& params, const Vec& grads, OptimState& opt, double lr);

/// Exponential moving average of a parameter vector.
struct EmaState {
  double decay = 0.999;
  Vec shadow;
};

/// shadow <- decay * shadow + (1 - decay) * params.
void ema_update(EmaState& ema, const Vec& params);

}  // namespace ttfm::training
