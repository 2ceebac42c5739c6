#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "latentdyn/circle_maps.hpp"
#include "latentdyn/errors.hpp"

namespace latentdyn::dyn {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Extended-precision state for reference computations whose own rounding
/// must stay far below the integrator error being measured.
using ExtVec2 = Eigen::Matrix<long double, 2, 1>;

/// f(x) = (-2 x1 x2^2, 2 x1^2 x2). Every circle about the origin is invariant.
Vec2 ambient_field(const Vec2& x);
ExtVec2 ambient_field(const ExtVec2& x);

/// The ambient field in the polar angle: d(theta)/dt = sin(2 theta).
double restricted_field(double theta);

/// One explicit Euler step of d(theta)/dt = sin(2 theta). Evaluated in
/// `Real` arithmetic, so the float instantiation reproduces the float32 data
/// recurrence bit for bit.
template <class Real>
Real euler_step(Real theta, Real dt) {
  if (!(dt > Real(0))) throw ValidationError("euler_step: dt must be > 0");
  return theta + dt * static_cast<Real>(std::sin(Real(2) * theta));
}

inline bool state_is_finite(double v) { return std::isfinite(v); }
inline bool state_is_finite(long double v) { return std::isfinite(v); }
template <class Derived>
bool state_is_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

namespace detail {

/// Coefficient type for a state: long double for extended-precision states,
/// double otherwise.
template <class State>
struct StepScalar {
  using type = double;
};
template <>
struct StepScalar<long double> {
  using type = long double;
};
template <class T, int R, int C, int O, int MR, int MC>
struct StepScalar<Eigen::Matrix<T, R, C, O, MR, MC>> {
  using type = T;
};

/// Classical RK4 increment for any signed step. State needs State + State and
/// scalar * State.
template <class State, class Field>
State rk4_advance(const Field& field, const State& y,
                  typename StepScalar<State>::type dt) {
  using R = typename StepScalar<State>::type;
  const State k1 = field(y);
  const State k2 = field(y + (R(0.5) * dt) * k1);
  const State k3 = field(y + (R(0.5) * dt) * k2);
  const State k4 = field(y + dt * k3);
  State next = y + (dt / R(6)) * (k1 + R(2) * k2 + R(2) * k3 + k4);
  if (!state_is_finite(next)) throw NumericalError("rk4: non-finite state");
  return next;
}

}  // namespace detail

/// One classical RK4 step. With a tape-recorded field and a tracked state
/// the whole step is recorded and differentiable.
template <class State, class Field>
State rk4_step(const Field& field, const State& y, double dt) {
  if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be > 0");
  return detail::rk4_advance(field, y, dt);
}

/// Fixed-step RK4 composition over time t (either sign), using
/// ceil(|t| * substeps_per_unit) equal steps.
template <class State, class Field>
State reference_flow(const Field& field, State x0, double t,
                     std::size_t substeps_per_unit = 1000) {
  if (substeps_per_unit == 0) {
    throw ValidationError("reference_flow: substeps_per_unit must be >= 1");
  }
  if (t == 0.0) return x0;
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::abs(t) * double(substeps_per_unit))));
  using R = typename detail::StepScalar<State>::type;
  const R h = R(t) / R(n);
  for (std::size_t i = 0; i < n; ++i) x0 = detail::rk4_advance(field, x0, h);
  return x0;
}

/// Covering map phi -> (cos phi, sin phi) of the unit circle with a section
/// that is continuous away from the cut angle.
struct CoveringChart {
  double cut = 0.0;

  Vec2 project(double phi) const { return {std::cos(phi), std::sin(phi)}; }
  Vec2 project_derivative(double phi) const {
    return {-std::sin(phi), std::cos(phi)};
  }
  ExtVec2 project(long double phi) const { return {std::cos(phi), std::sin(phi)}; }
  ExtVec2 project_derivative(long double phi) const {
    return {-std::sin(phi), std::cos(phi)};
  }
  /// The unique angle in (cut, cut + 2 pi] whose projection is x / |x|.
  double section(const Vec2& x) const;
  long double section(const ExtVec2& x) const;
};

/// Vector field upstairs whose push-forward through the covering map is
/// `ambient`: <f(D(phi)), D'(phi)> / |D'(phi)|^2.
template <class Real, class Ambient>
Real lifted_field(const CoveringChart& chart, const Ambient& ambient, Real phi) {
  const auto d = chart.project_derivative(phi);
  return ambient(chart.project(phi)).dot(d) / d.squaredNorm();
}
double lifted_field(const CoveringChart& chart, double phi);
long double lifted_field(const CoveringChart& chart, long double phi);

/// The section/covering pair with h = the lifted field: the exact oracle
/// triple for the circle example.
CircleMaps exact_chart_maps(const CoveringChart& chart = {});

/// Angle in (-pi, pi].
double wrap_angle(double a);
/// Angle in [0, 2 pi).
double angle_0_2pi(double a);
/// atan2 of a point, in (-pi, pi].
double polar_angle(const Vec2& x);

/// Closed-form flow of d(theta)/dt = sin(2 theta): tan(theta(t)) =
/// tan(theta0) e^{2t}, taken on the branch that keeps theta(t) in the
/// quadrant of theta0. Used as an independent check of the integrators.
double restricted_flow_exact(double theta0, double t);

}  // namespace latentdyn::dyn
