#pragma once

#include <cstdint>

#include "latentdyn/circle_maps.hpp"
#include "latentdyn/nn/mlp.hpp"

namespace latentdyn::nn {

/// Encoder E: R^2 -> R, decoder D: R -> R^2, latent field h: R -> R.
struct Model {
  MlpParams encoder;
  MlpParams decoder;
  MlpParams latent;

  void validate() const;
};

struct ModelSpecs {
  MlpSpec encoder = MlpSpec::encoder();
  MlpSpec decoder = MlpSpec::decoder();
  MlpSpec latent = MlpSpec::latent();
};

/// Each net draws from its own stream ("init-E", "init-D", "init-h").
Model init_model(const ModelSpecs& specs, std::uint64_t seed);

/// Float64 view of frozen weights.
CircleMaps circle_maps(const Model& model);

}  // namespace latentdyn::nn
