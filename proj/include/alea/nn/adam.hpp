#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "alea/errors.hpp"
#include "alea/nn/parameters.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  static AdamState for_params(const ParameterSet& params, AdamConfig config = {}) {
    AdamState s;
    s.config = config;
    s.m = zero_gradients(params);
    s.v = zero_gradients(params);
    return s;
  }
};

/// Bias-corrected Adam update, in place. Throws TrainingError, leaving
/// params and state untouched, if any gradient entry is non-finite.
inline void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = params[i].value;
    require_shape(grads[i], p.rows(), p.cols(), "adam_step gradient");
    require_shape(state.m[i], p.rows(), p.cols(), "adam_step first moment");
    require_shape(state.v[i], p.rows(), p.cols(), "adam_step second moment");
    if (!grads[i].allFinite()) {
      throw TrainingError("adam_step: non-finite gradient for " + params[i].name);
    }
  }
  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads[i].cwiseAbs2();
    params[i].value.array() -= cfg.lr * (m.array() / correction1) /
                               ((v.array() / correction2).sqrt() + cfg.eps);
  }
}

}  // namespace alea::nn
