#pragma once

#include <Eigen/Core>
#include <functional>

namespace latentdyn {

using Vec2 = Eigen::Vector2d;

/// Float64 view of an encoder/decoder/latent-field triple for the circle
/// example: E: R^2 -> R, D: R -> R^2 (with dD/dphi), h: R -> R. Trained nets
/// and closed-form charts both present themselves this way to the
/// evaluation and theory code.
struct CircleMaps {
  std::function<double(const Vec2&)> encode;
  std::function<Vec2(double)> decode;
  std::function<Vec2(double)> decode_jacobian;
  std::function<double(double)> field;
};

}  // namespace latentdyn
