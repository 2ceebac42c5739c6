#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentdyn/autodiff/tensor.hpp"

namespace latentdyn::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

/// Moments per parameter tensor, in the order the parameters are passed.
struct OptimState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::size_t step = 0;
};

OptimState make_optim_state(std::span<const ad::Tensor> params);

/// Bias-corrected Adam with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Throws NumericalError on a non-finite update, leaving params untouched.
void adamw_step(std::span<ad::Tensor> params, std::span<const ad::Tensor> grads,
                OptimState& state, double lr, const AdamWConfig& config = {});

}  // namespace latentdyn::train
