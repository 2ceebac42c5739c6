#include "latentdyn/training/losses.hpp"

#include <string>

#include "latentdyn/dynamics/dynamics.hpp"
#include "latentdyn/errors.hpp"

namespace latentdyn::train {
namespace {

// Constant selectors: the primitive set has no slicing, so columns are
// picked and placed with fixed affine maps.
const ad::Tensor& first_column() {
  static const ad::Tensor m = ad::Tensor::matrix(1, 2, {1.0f, 0.0f});
  return m;
}
const ad::Tensor& second_column() {
  static const ad::Tensor m = ad::Tensor::matrix(1, 2, {0.0f, 1.0f});
  return m;
}
const ad::Tensor& into_first() {
  static const ad::Tensor m = ad::Tensor::matrix(2, 1, {1.0f, 0.0f});
  return m;
}
const ad::Tensor& into_second() {
  static const ad::Tensor m = ad::Tensor::matrix(2, 1, {0.0f, 1.0f});
  return m;
}
const ad::Tensor& duplicate() {
  static const ad::Tensor m = ad::Tensor::matrix(2, 1, {1.0f, 1.0f});
  return m;
}

std::size_t batch_rows(const ad::Tensor& x, std::size_t cols, const char* what) {
  if (x.rank() != 2 || x.shape()[1] != cols) {
    throw ValidationError(std::string(what) + ": expected a [B x " +
                          std::to_string(cols) + "] batch");
  }
  if (x.shape()[0] == 0) throw ValidationError(std::string(what) + ": empty batch");
  return x.shape()[0];
}

ad::Tensor batch_mean_sq(const ad::Tensor& a, const ad::Tensor& b) {
  const auto rows = static_cast<float>(a.shape()[0]);
  return ad::scale(ad::sum(ad::square(ad::sub(a, b))), 1.0f / rows);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

}  // namespace

BoundModel bind(const nn::Model& model, ad::Tape& tape) {
  return {nn::bind(model.encoder, tape), nn::bind(model.decoder, tape),
          nn::bind(model.latent, tape)};
}

ad::Tensor ambient_field(const ad::Tensor& x) {
  batch_rows(x, 2, "ambient_field");
  const ad::Tensor x1 = ad::affine(first_column(), x);
  const ad::Tensor x2 = ad::affine(second_column(), x);
  const ad::Tensor p = ad::mul(x1, x2);
  const ad::Tensor f1 = ad::scale(ad::mul(p, x2), -2.0f);
  const ad::Tensor f2 = ad::scale(ad::mul(p, x1), 2.0f);
  return ad::add(ad::affine(into_first(), f1), ad::affine(into_second(), f2));
}

ad::Tensor loss_rec(std::span<const nn::Layer> encoder,
                    std::span<const nn::Layer> decoder, const ad::Tensor& x) {
  batch_rows(x, 2, "loss_rec");
  const ad::Tensor x_hat = nn::mlp_forward(decoder, nn::mlp_forward(encoder, x));
  return batch_mean_sq(x_hat, x);
}

ad::Tensor loss_conj(std::span<const nn::Layer> encoder,
                     std::span<const nn::Layer> decoder,
                     std::span<const nn::Layer> latent, const ad::Tensor& x,
                     ad::Tape& tape) {
  batch_rows(x, 2, "loss_conj");
  const ad::Tensor phi = nn::mlp_forward(encoder, x);
  const auto decoded = nn::decode_with_jacobian(decoder, phi, tape);
  const ad::Tensor h = nn::mlp_forward(latent, phi);
  const ad::Tensor v_push = ad::mul(decoded.jacobian, ad::affine(duplicate(), h));
  return batch_mean_sq(v_push, ambient_field(decoded.value));
}

ad::Tensor loss_lat1(std::span<const nn::Layer> encoder,
                     std::span<const nn::Layer> latent, const ad::Tensor& x_t,
                     const ad::Tensor& x_next, double dt) {
  const std::size_t rows = batch_rows(x_t, 2, "loss_lat1");
  if (batch_rows(x_next, 2, "loss_lat1") != rows) {
    throw ValidationError("loss_lat1: x_t and x_next differ in batch size");
  }
  const ad::Tensor phi = nn::mlp_forward(encoder, x_t);
  const ad::Tensor phi_enc = nn::mlp_forward(encoder, x_next);
  const auto field = [&](const ad::Tensor& p) { return nn::mlp_forward(latent, p); };
  const ad::Tensor phi_pred = dyn::rk4_step(field, phi, dt);
  return batch_mean_sq(phi_pred, phi_enc);
}

ad::Tensor total_loss(const LossWeights& weights, const LossParts& parts) {
  std::optional<ad::Tensor> total;
  auto term = [&](double w, const std::optional<ad::Tensor>& part, const char* name) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw ValidationError(std::string("loss weight ") + name + " must be >= 0");
    }
    if (w == 0.0) return;
    if (!part) {
      throw ValidationError(std::string("loss part ") + name +
                            " has positive weight but was not computed");
    }
    const ad::Tensor weighted = ad::scale(*part, static_cast<float>(w));
    total = total ? ad::add(*total, weighted) : weighted;
  };
  term(weights.rec, parts.rec, "rec");
  term(weights.conj, parts.conj, "conj");
  term(weights.lat1, parts.lat1, "lat1");
  return total ? *total : ad::Tensor::scalar(0.0f);
}

double reference_loss_rec(const CircleMaps& maps, std::span<const Vec2> x) {
  if (x.empty()) throw ValidationError("reference_loss_rec: empty batch");
  double acc = 0.0;
  for (const Vec2& p : x) acc += (maps.decode(maps.encode(p)) - p).squaredNorm();
  const double out = acc / double(x.size());
  require_finite(out, "reference_loss_rec");
  return out;
}

double reference_loss_conj(const CircleMaps& maps, std::span<const Vec2> x) {
  if (x.empty()) throw ValidationError("reference_loss_conj: empty batch");
  double acc = 0.0;
  for (const Vec2& p : x) {
    const double phi = maps.encode(p);
    const Vec2 x_hat = maps.decode(phi);
    const Vec2 v_push = maps.decode_jacobian(phi) * maps.field(phi);
    acc += (v_push - dyn::ambient_field(x_hat)).squaredNorm();
  }
  const double out = acc / double(x.size());
  require_finite(out, "reference_loss_conj");
  return out;
}

double reference_loss_lat1(const CircleMaps& maps, std::span<const Vec2> x_t,
                           std::span<const Vec2> x_next, double dt) {
  if (x_t.empty() || x_t.size() != x_next.size()) {
    throw ValidationError("reference_loss_lat1: batches empty or unequal");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double pred = dyn::rk4_step(maps.field, maps.encode(x_t[i]), dt);
    const double d = pred - maps.encode(x_next[i]);
    acc += d * d;
  }
  const double out = acc / double(x_t.size());
  require_finite(out, "reference_loss_lat1");
  return out;
}

}  // namespace latentdyn::train
