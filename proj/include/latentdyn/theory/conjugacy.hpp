#pragma once

#include <cstddef>
#include <vector>

#include "latentdyn/dynamics/dynamics.hpp"

namespace latentdyn::theory {

/// Open angular interval (a, b), b - a < 2 pi: a set on which the circle
/// admits a perfect encoder/decoder pair.
struct ChartInterval {
  double a = 0.0;
  double b = 0.0;

  void validate() const;
  bool contains(double theta) const { return a < theta && theta < b; }
  /// True when some lift cut + 2 pi k lies in [a, b].
  bool contains_cut(const dyn::CoveringChart& chart) const;
};

struct ChartIdentity {
  /// max |D(E(x(theta))) - x(theta)| over the samples.
  double roundtrip_defect = 0.0;
  /// max |E(D(theta)) - theta|: whether the section is a left inverse on the
  /// interval. Jumps by 2 pi when the interval straddles the cut.
  double inverse_defect = 0.0;
  bool contains_cut = false;
};

/// Samples at a + (b - a)(i + 1/2) / samples.
ChartIdentity check_chart_identity(const ChartInterval& chart,
                                   std::size_t samples,
                                   const dyn::CoveringChart& cover = {});

/// I_x intersected with [-T, T]: the connected time interval around 0 during
/// which the flow of sin(2 theta) from theta0 stays in [a, b].
struct ExitWindow {
  double lower = 0.0;
  double upper = 0.0;
};

/// Exit times by a coarse scan then bisection on the reference flow, to
/// `time_tol`.
ExitWindow exit_window(const ChartInterval& chart, double theta0, double T,
                       std::size_t substeps = 1000, double time_tol = 1e-10);

/// The same window from the closed-form flow, for cross-checking.
ExitWindow exit_window_exact(const ChartInterval& chart, double theta0,
                             double T, double time_tol = 1e-12);

struct ConjugacyDefect {
  double sup = 0.0;
  std::size_t evaluations = 0;
};

/// Reference flows of the ambient field on the plane (downstairs) and of the
/// lifted field on the line (upstairs) sampled together at sorted times that
/// contain 0; returns the largest |D(phi(t)) - x(t)|.
double lift_defect_along(double theta0, const std::vector<double>& times,
                         std::size_t substeps,
                         const dyn::CoveringChart& cover = {});

/// Sup of the lift defect over `time_samples` equally spaced times of each
/// base point's exit window.
ConjugacyDefect check_small_time_conjugacy(const ChartInterval& chart,
                                           const std::vector<double>& thetas,
                                           double T, std::size_t time_samples,
                                           std::size_t substeps = 1000);

/// Sup over all times in [-T, T] (no exit window). Base points must avoid the
/// cut.
ConjugacyDefect check_large_time_conjugacy(const std::vector<double>& thetas,
                                           double T, std::size_t time_samples,
                                           std::size_t substeps = 1000,
                                           const dyn::CoveringChart& cover = {});

/// F = time-dt flow of the ambient field on the circle, G = time-dt flow of
/// the lifted field on the line. Sup over n <= iterations of
/// |D(G^n(E(x))) - F^n(x)|.
ConjugacyDefect check_discrete_conjugacy(const std::vector<double>& thetas,
                                         std::size_t iterations, double dt,
                                         std::size_t substeps = 1000,
                                         const dyn::CoveringChart& cover = {});

/// Largest |G(phi + 2 pi) - G(phi) - 2 pi| over the base points: the
/// upstairs map commutes with the deck transformation.
double deck_equivariance_defect(const std::vector<double>& thetas, double dt,
                                std::size_t substeps = 1000,
                                const dyn::CoveringChart& cover = {});

/// theta_i = cut + 2 pi (i + 1/2) / count: equally spaced, never on the cut.
std::vector<double> base_grid(std::size_t count, const dyn::CoveringChart& cover = {});
/// a + (b - a)(i + 1/2) / count.
std::vector<double> chart_grid(const ChartInterval& chart, std::size_t count);

}  // namespace latentdyn::theory
