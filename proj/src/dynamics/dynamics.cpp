#include "latentdyn/dynamics/dynamics.hpp"

namespace latentdyn::dyn {

namespace {

template <class V>
V ambient_impl(const V& x) {
  using R = typename V::Scalar;
  return {R(-2) * x[0] * x[1] * x[1], R(2) * x[0] * x[0] * x[1]};
}

template <class R, class V>
R section_impl(R cut, const V& x) {
  constexpr R tau = R(2) * std::numbers::pi_v<R>;
  R r = std::atan2(x[1], x[0]) - cut;
  r -= tau * std::floor(r / tau);
  if (r <= R(0)) r = tau;
  if (r > tau) r = tau;
  return cut + r;
}

}  // namespace

Vec2 ambient_field(const Vec2& x) { return ambient_impl(x); }
ExtVec2 ambient_field(const ExtVec2& x) { return ambient_impl(x); }

double restricted_field(double theta) { return std::sin(2.0 * theta); }

double CoveringChart::section(const Vec2& x) const {
  return section_impl(cut, x);
}

long double CoveringChart::section(const ExtVec2& x) const {
  return section_impl<long double>(cut, x);
}

double lifted_field(const CoveringChart& chart, double phi) {
  return lifted_field(chart, [](const Vec2& x) { return ambient_field(x); }, phi);
}

long double lifted_field(const CoveringChart& chart, long double phi) {
  return lifted_field(chart, [](const ExtVec2& x) { return ambient_field(x); }, phi);
}

CircleMaps exact_chart_maps(const CoveringChart& chart) {
  CircleMaps maps;
  maps.encode = [chart](const Vec2& x) { return chart.section(x); };
  maps.decode = [chart](double phi) { return chart.project(phi); };
  maps.decode_jacobian = [chart](double phi) {
    return chart.project_derivative(phi);
  };
  maps.field = [chart](double phi) { return lifted_field(chart, phi); };
  return maps;
}

double wrap_angle(double a) {
  double r = std::remainder(a, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

double angle_0_2pi(double a) {
  double r = a - two_pi * std::floor(a / two_pi);
  if (r >= two_pi) r -= two_pi;
  return r;
}

double polar_angle(const Vec2& x) {
  const double a = std::atan2(x[1], x[0]);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

double restricted_flow_exact(double theta0, double t) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  // Reduce to a quadrant [q*pi/2, (q+1)*pi/2]; the flow never leaves it.
  const double q = std::floor(theta0 / half_pi);
  const double local = theta0 - q * half_pi;  // in [0, pi/2)
  if (local == 0.0) return theta0;
  // On (0, pi/2) the flow of sin(2 theta) is tan(theta) = tan(theta0) e^{2t};
  // in odd quadrants the shifted equation runs backwards in time.
  const bool odd = static_cast<long long>(q) % 2 != 0;
  const double s = odd ? -t : t;
  return q * half_pi + std::atan(std::tan(local) * std::exp(2.0 * s));
}

}  // namespace latentdyn::dyn
