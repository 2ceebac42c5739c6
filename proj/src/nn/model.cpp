#include "latentdyn/nn/model.hpp"

#include <array>
#include <memory>

#include "latentdyn/errors.hpp"

namespace latentdyn::nn {

void Model::validate() const {
  encoder.validate();
  decoder.validate();
  latent.validate();
  if (encoder.spec.input_dim() != 2 || encoder.spec.output_dim() != 1 ||
      decoder.spec.input_dim() != 1 || decoder.spec.output_dim() != 2 ||
      latent.spec.input_dim() != 1 || latent.spec.output_dim() != 1) {
    throw ValidationError(
        "model nets must map R^2 -> R (encoder), R -> R^2 (decoder), R -> R "
        "(latent)");
  }
}

Model init_model(const ModelSpecs& specs, std::uint64_t seed) {
  Rng re = make_rng(seed, "init-E");
  Rng rd = make_rng(seed, "init-D");
  Rng rh = make_rng(seed, "init-h");
  Model m{init_params(specs.encoder, re), init_params(specs.decoder, rd),
          init_params(specs.latent, rh)};
  m.validate();
  return m;
}

CircleMaps circle_maps(const Model& model) {
  model.validate();
  auto e = std::make_shared<const MlpEvaluator>(model.encoder);
  auto d = std::make_shared<const MlpEvaluator>(model.decoder);
  auto h = std::make_shared<const MlpEvaluator>(model.latent);
  CircleMaps maps;
  maps.encode = [e](const Vec2& x) {
    const std::array<double, 2> in{x[0], x[1]};
    return (*e)(in)[0];
  };
  maps.decode = [d](double phi) {
    const std::array<double, 1> in{phi};
    const auto out = (*d)(in);
    return Vec2(out[0], out[1]);
  };
  maps.decode_jacobian = [d](double phi) {
    const std::array<double, 1> in{phi}, dir{1.0};
    const auto out = d->with_tangent(in, dir).second;
    return Vec2(out[0], out[1]);
  };
  maps.field = [h](double phi) {
    const std::array<double, 1> in{phi};
    return (*h)(in)[0];
  };
  return maps;
}

}  // namespace latentdyn::nn
