#include "latentdyn/training/adamw.hpp"

#include <cmath>

#include "latentdyn/errors.hpp"

namespace latentdyn::train {

OptimState make_optim_state(std::span<const ad::Tensor> params) {
  OptimState s;
  for (const ad::Tensor& p : params) {
    s.m.emplace_back(p.size(), 0.0f);
    s.v.emplace_back(p.size(), 0.0f);
  }
  return s;
}

void adamw_step(std::span<ad::Tensor> params, std::span<const ad::Tensor> grads,
                OptimState& state, double lr, const AdamWConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ValidationError("adamw_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() ||
        state.m[i].size() != params[i].size()) {
      throw ValidationError("adamw_step: shape mismatch for parameter " +
                            std::to_string(i));
    }
  }

  const std::size_t step = state.step + 1;
  const auto b1 = static_cast<float>(config.beta1);
  const auto b2 = static_cast<float>(config.beta2);
  const auto eps = static_cast<float>(config.eps);
  const auto rate = static_cast<float>(lr);
  const auto decay = static_cast<float>(config.weight_decay);
  const auto c1 = static_cast<float>(1.0 - std::pow(config.beta1, double(step)));
  const auto c2 = static_cast<float>(1.0 - std::pow(config.beta2, double(step)));

  std::vector<std::vector<float>> next_m = state.m, next_v = state.v;
  std::vector<ad::Tensor> updated;
  updated.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto p = params[i].values();
    const auto g = grads[i].values();
    auto& m = next_m[i];
    auto& v = next_v[i];
    std::vector<float> out(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      const float m_hat = m[j] / c1;
      const float v_hat = v[j] / c2;
      out[j] = p[j] - rate * (m_hat / (std::sqrt(v_hat) + eps) + decay * p[j]);
      if (!std::isfinite(out[j])) {
        throw NumericalError("adamw_step: non-finite update in parameter " +
                             std::to_string(i));
      }
    }
    updated.emplace_back(params[i].shape(), std::move(out));
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] = std::move(updated[i]);
  state.m = std::move(next_m);
  state.v = std::move(next_v);
  state.step = step;
}

}  // namespace latentdyn::train
