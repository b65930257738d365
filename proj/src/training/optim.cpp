#include "ttfm/training/optim.hpp"

#include <cmath>

namespace ttfm::training {

double lr_at(std::uint64_t iter, const AdamConfig& cfg) {
  if (cfg.warmup_iters == 0 || iter >= cfg.warmup_iters) return cfg.lr_peak;
  return cfg.lr_peak * static_cast<double>(iter) / static_cast<double>(cfg.warmup_iters);
}

OptimState OptimState::zeros(Eigen::Index n, const AdamConfig& cfg) {
  OptimState s;
  s.m = Vec::Zero(n);
  s.v = Vec::Zero(n);
  s.cfg = cfg;
  return s;
}

void adam_step(Vec& params, const Vec& grads, OptimState& opt, double lr) {
  require(params.size() == grads.size() && params.size() == opt.m.size(),
          "adam_step: length mismatch");
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads(i)))
      throw NonFiniteError("adam_step: non-finite gradient at index " + std::to_string(i));
  }
  const auto& c = opt.cfg;
  ++opt.step;
  opt.m = c.beta1 * opt.m + (1.0 - c.beta1) * grads;
  opt.v = c.beta2 * opt.v + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  params.array() -= lr * (opt.m.array() / bc1) / ((opt.v.array() / bc2).sqrt() + c.eps);
}

void ema_update(EmaState& ema, const Vec& params) {
  require(ema.shadow.size() == params.size(), "ema_update: length mismatch");
  ema.shadow = ema.decay * ema.shadow + (1.0 - ema.decay) * params;
}

}  // namespace ttfm::training
