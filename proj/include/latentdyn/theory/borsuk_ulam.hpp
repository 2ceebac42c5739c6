#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "latentdyn/circle_maps.hpp"

namespace latentdyn::theory {

using Vec3 = Eigen::Vector3d;

/// Encoder R^3 -> R^l and decoder R^l -> R^3.
struct SphereMaps {
  std::size_t latent_dim = 1;
  std::function<Eigen::VectorXd(const Vec3&)> encode;
  std::function<Vec3(const Eigen::VectorXd&)> decode;
};

/// s -> cos(s) u + sin(s) v with orthonormal u, v.
struct GreatCircle {
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();

  Vec3 at(double s) const { return std::cos(s) * u + std::sin(s) * v; }
};

struct BoundWitness {
  Vec3 z = Vec3::Zero();
  double residual = 0.0;     // |E(z) - E(-z)|
  double decoded_gap = 0.0;  // |D(E(z)) - D(E(-z))|
  double err_plus = 0.0;     // |D(E(z)) - z|
  double err_minus = 0.0;    // |D(E(-z)) - (-z)|
  double bound = 1.0;        // C: half the smallest antipodal distance
  bool found = false;        // residual target met
  bool certified = false;    // max(err_plus, err_minus) >= C (1 - 1e-3)
  bool triangle = false;     // err_plus + err_minus >= 2C - decoded_gap

  double max_err() const { return std::max(err_plus, err_minus); }
};

/// l = 1 on a great circle: the odd map g(s) = E(z(s)) - E(-z(s)) changes
/// sign on [0, pi] because g(pi) = -g(0); a scan locates the sign change
/// and bisection drives |g| below `tol`.
BoundWitness borsuk_ulam_circle(const SphereMaps& maps, const GreatCircle& circle = {},
                                std::size_t scan = 720, double tol = 1e-6);

/// l = 2 on the whole sphere: Nelder-Mead on |g(y / |y|)|^2 from `starts`
/// random points, stopping at the first residual <= tol. Not finding one
/// leaves found = false.
BoundWitness borsuk_ulam_sphere(const SphereMaps& maps, std::size_t starts,
                                std::uint64_t seed, double tol = 1e-4);

/// max |g(z) + g(-z)| over `samples` random unit z.
double odd_map_asymmetry(const SphereMaps& maps, std::size_t samples,
                         std::uint64_t seed);

/// Seeded random tanh nets R^3 -> R^l -> R^3 with the given hidden width.
SphereMaps random_sphere_maps(std::size_t latent_dim, std::uint64_t seed,
                              std::size_t hidden = 16);

/// E(y) = y1, D(phi) = (phi, 0, 0).
SphereMaps linear_projection_maps();

/// A circle encoder/decoder seen on the sphere: E(y) = E(y1, y2),
/// D(phi) = (D(phi), 0).
SphereMaps from_circle_maps(const CircleMaps& maps);

}  // namespace latentdyn::theory
