#pragma once

#include <optional>
#include <span>
#include <vector>

#include "latentdyn/autodiff/tape.hpp"
#include "latentdyn/circle_maps.hpp"
#include "latentdyn/nn/model.hpp"

namespace latentdyn::train {

/// Model parameters registered as leaves of one tape.
struct BoundModel {
  std::vector<nn::Layer> encoder;
  std::vector<nn::Layer> decoder;
  std::vector<nn::Layer> latent;
};

BoundModel bind(const nn::Model& model, ad::Tape& tape);

/// f(x) = (-2 x1 x2^2, 2 x1^2 x2) row by row on a [B x 2] tensor.
ad::Tensor ambient_field(const ad::Tensor& x);

// All three losses reduce as: sum over coordinates, mean over the batch.

/// mean |D(E(x)) - x|^2 over a [B x 2] batch.
ad::Tensor loss_rec(std::span<const nn::Layer> encoder,
                    std::span<const nn::Layer> decoder, const ad::Tensor& x);

/// mean |J_D(phi) h(phi) - f(D(phi))|^2 with phi = E(x). The decoder
/// Jacobian is recorded on `tape`, so gradients flow through it.
ad::Tensor loss_conj(std::span<const nn::Layer> encoder,
                     std::span<const nn::Layer> decoder,
                     std::span<const nn::Layer> latent, const ad::Tensor& x,
                     ad::Tape& tape);

/// mean |RK4(E(x_t), h; dt) - E(x_next)|^2.
ad::Tensor loss_lat1(std::span<const nn::Layer> encoder,
                     std::span<const nn::Layer> latent, const ad::Tensor& x_t,
                     const ad::Tensor& x_next, double dt);

struct LossWeights {
  double rec = 0.0;
  double conj = 0.0;
  double lat1 = 0.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossParts {
  std::optional<ad::Tensor> rec;
  std::optional<ad::Tensor> conj;
  std::optional<ad::Tensor> lat1;
};

/// W_rec L_rec + W_conj L_conj + W_lat1 L_lat1. Parts with zero weight may be
/// absent; a missing part with a positive weight is an error.
ad::Tensor total_loss(const LossWeights& weights, const LossParts& parts);

// Float64 versions of the same three losses for any CircleMaps. They share
// no code with the tape path and serve as its cross-check, and they are the
// only way to score the closed-form chart pair.
double reference_loss_rec(const CircleMaps& maps, std::span<const Vec2> x);
double reference_loss_conj(const CircleMaps& maps, std::span<const Vec2> x);
double reference_loss_lat1(const CircleMaps& maps, std::span<const Vec2> x_t,
                           std::span<const Vec2> x_next, double dt);

}  // namespace latentdyn::train
