#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "latentdyn/circle_maps.hpp"

namespace latentdyn::eval {

/// Column-labeled float64 rows. Undefined entries are NaN and are written as
/// "nan".
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool truncated = false;  // a rollout stopped on a non-finite state

  std::vector<double> column(const std::string& name) const;
};

/// Shortest round-trip decimal for each value; header line first.
void write_csv(const Table& table, const std::filesystem::path& path);

/// theta_k = 2 pi k / K, k < K.
double grid_angle(std::size_t k, std::size_t K);
Vec2 on_circle(double theta);

/// (theta, phi) with phi = E(cos theta, sin theta).
Table encoder_curve(const CircleMaps& maps, std::size_t K = 720);

struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

/// [min phi, max phi] of an encoder curve widened by 5% of its span on each
/// side.
Window latent_window(const Table& encoder_curve);

/// (phi, h) on K equally spaced points of the window, ends included.
Table latent_field(const CircleMaps& maps, Window window, std::size_t K);

/// (theta, true_vf, pulled_vf, dphi_dtheta, flag). dphi/dtheta is the
/// centered difference on the periodic grid; where |dphi/dtheta| < 1e-8 the
/// pulled value is NaN and flag = 1.
Table pullback_field(const CircleMaps& maps, std::size_t K = 720);

/// (phi, x1, x2, radius, angle); angle is NaN where D(phi) = 0.
Table decoder_image(const CircleMaps& maps, Window window, std::size_t K);

/// Latent RK4 rollout from E(x0), decoded at each of the `steps` states:
/// (t, phi, x1, x2, theta_roll).
Table rollout(const CircleMaps& maps, const Vec2& x0, std::size_t steps,
              double dt);

/// (t, theta_true, theta_decoded, theta_rollout) for a labeled start, all
/// wrapped to (-pi, pi]. The true path is float64 Euler on sin(2 theta).
Table timeseries(char tag, const CircleMaps& maps, std::size_t steps,
                 double dt);

double roundtrip_error(const CircleMaps& maps, double theta);

struct RoundtripProfile {
  Table table;  // (theta, err): coarse grid plus refinement samples, sorted
  double max_err = 0.0;
  double argmax_theta = 0.0;
  std::vector<double> max_by_depth;  // running maximum after each depth
};

/// Round-trip error on a K-point grid, then recursive trisection around the
/// three largest grid values and the largest jump of the encoder curve until
/// the bracket is no wider than `tol`.
RoundtripProfile roundtrip_profile(const CircleMaps& maps, std::size_t K = 720,
                                   double tol = 1e-7);

/// (1 / 2 pi) * integral of err(theta)^p, periodic trapezoid rule on K nodes.
double lp_error(const CircleMaps& maps, double p, std::size_t K = 4096);

/// Midpoint of the grid interval with the largest |phi_{k+1} - phi_k|
/// (periodic), in [0, 2 pi).
double encoder_cut_angle(const CircleMaps& maps, std::size_t K = 720);

/// |D(E(x))| at the labeled points A..H.
std::map<char, double> tag_radii(const CircleMaps& maps);

struct EvalOptions {
  std::size_t grid = 720;
  std::size_t roundtrip_grid = 720;
  double refine_tol = 1e-7;
  double lp_p = 2.0;
  std::size_t lp_grid = 4096;
  std::size_t steps = 96;
  double dt = 0.04;
};

struct EvalBundle {
  std::map<std::string, Table> tables;  // file stem -> table
  RoundtripProfile roundtrip;
  double lp = 0.0;
  double lp_p = 2.0;
  std::map<char, double> radii;
};

EvalBundle evaluate(const CircleMaps& maps, const EvalOptions& options = {});

/// One CSV per table plus summary.json. `meta_json` is a serialized JSON
/// object stored under "meta" in the summary.
void write_bundle(const EvalBundle& bundle, const std::filesystem::path& dir,
                  const std::string& meta_json = "{}");

}  // namespace latentdyn::eval
