#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dflow/errors.hpp"

namespace dflow {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  void resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

// One Adam update with bias correction; eps sits outside the square root.
inline void adam_step(std::span<double> params, std::span<const double> grad,
                      AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw ContractError("adam_step: size mismatch");
  }
  state.step += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// ema <- decay * ema + (1 - decay) * params
inline void ema_update(std::span<double> ema, std::span<const double> params,
                       double decay) {
  for (std::size_t i = 0; i < ema.size(); ++i) {
    ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
  }
}

}  // namespace dflow
