#include "latentdyn/theory/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "latentdyn/errors.hpp"

namespace latentdyn::theory {
namespace {

using Ext = long double;
using dyn::ExtVec2;

ExtVec2 ambient(const ExtVec2& x) { return dyn::ambient_field(x); }

double gap(const dyn::CoveringChart& cover, Ext phi, const ExtVec2& x) {
  return double((cover.project(phi) - x).norm());
}

// Monotone-in-time membership test; the restricted flow never turns around,
// so the set of times spent in [a, b] on each side of 0 is an interval.
template <class Flow>
double exit_time(const ChartInterval& chart, double theta0, double T,
                 double direction, double time_tol, const Flow& flow) {
  auto inside = [&](double theta) { return chart.a <= theta && theta <= chart.b; };
  constexpr int scan = 100;
  const double step = T / scan;
  double t_in = 0.0, theta_in = theta0;
  for (int i = 1; i <= scan; ++i) {
    const double t_next = step * i;
    const double theta = flow(theta_in, direction * (t_next - t_in));
    if (!inside(theta)) {
      double lo = t_in, hi = t_next, at_lo = theta_in;
      while (hi - lo > time_tol) {
        const double mid = 0.5 * (lo + hi);
        const double th = flow(at_lo, direction * (mid - lo));
        if (inside(th)) {
          lo = mid;
          at_lo = th;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    t_in = t_next;
    theta_in = theta;
  }
  return T;
}

void check_start(const ChartInterval& chart, double theta0, double T) {
  chart.validate();
  if (!chart.contains(theta0)) {
    throw ValidationError("exit_window: start angle outside the chart");
  }
  if (!(T >= 0.0)) throw ValidationError("exit_window: horizon must be >= 0");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v;
  if (n == 1) return {lo};
  for (std::size_t i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * double(i) / double(n - 1));
  return v;
}

}  // namespace

void ChartInterval::validate() const {
  if (!(a < b) || !(b - a < dyn::two_pi) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("chart interval needs a < b and b - a < 2 pi");
  }
}

bool ChartInterval::contains_cut(const dyn::CoveringChart& chart) const {
  const double k = std::ceil((a - chart.cut) / dyn::two_pi);
  return chart.cut + dyn::two_pi * k <= b;
}

ChartIdentity check_chart_identity(const ChartInterval& chart, std::size_t samples,
                                   const dyn::CoveringChart& cover) {
  chart.validate();
  if (samples < 1) throw ValidationError("check_chart_identity: samples must be >= 1");
  ChartIdentity r;
  r.contains_cut = chart.contains_cut(cover);
  for (std::size_t i = 0; i < samples; ++i) {
    const double theta =
        chart.a + (chart.b - chart.a) * (double(i) + 0.5) / double(samples);
    const Vec2 x = cover.project(theta);
    r.roundtrip_defect =
        std::max(r.roundtrip_defect, (cover.project(cover.section(x)) - x).norm());
    r.inverse_defect = std::max(r.inverse_defect, std::abs(cover.section(x) - theta));
  }
  return r;
}

ExitWindow exit_window(const ChartInterval& chart, double theta0, double T,
                       std::size_t substeps, double time_tol) {
  check_start(chart, theta0, T);
  auto flow = [&](double th, double t) {
    return dyn::reference_flow(dyn::restricted_field, th, t, substeps);
  };
  return {-exit_time(chart, theta0, T, -1.0, time_tol, flow),
          exit_time(chart, theta0, T, 1.0, time_tol, flow)};
}

ExitWindow exit_window_exact(const ChartInterval& chart, double theta0, double T,
                             double time_tol) {
  check_start(chart, theta0, T);
  auto flow = [](double th, double t) { return dyn::restricted_flow_exact(th, t); };
  return {-exit_time(chart, theta0, T, -1.0, time_tol, flow),
          exit_time(chart, theta0, T, 1.0, time_tol, flow)};
}

double lift_defect_along(double theta0, const std::vector<double>& times,
                         std::size_t substeps, const dyn::CoveringChart& cover) {
  const ExtVec2 x0 = cover.project(Ext(theta0));
  const Ext phi0 = cover.section(x0);
  auto lifted = [&](Ext phi) { return dyn::lifted_field(cover, phi); };

  std::vector<double> forward, backward;
  for (double t : times) (t >= 0.0 ? forward : backward).push_back(t);
  std::sort(forward.begin(), forward.end());
  std::sort(backward.begin(), backward.end(), std::greater<>());

  double sup = 0.0;
  for (const auto* run : {&forward, &backward}) {
    ExtVec2 x = x0;
    Ext phi = phi0;
    double t = 0.0;
    for (double tk : *run) {
      x = dyn::reference_flow(ambient, x, tk - t, substeps);
      phi = dyn::reference_flow(lifted, phi, tk - t, substeps);
      t = tk;
      sup = std::max(sup, gap(cover, phi, x));
    }
  }
  return sup;
}

ConjugacyDefect check_small_time_conjugacy(const ChartInterval& chart,
                                           const std::vector<double>& thetas,
                                           double T, std::size_t time_samples,
                                           std::size_t substeps) {
  const dyn::CoveringChart cover;
  if (chart.contains_cut(cover)) {
    throw ValidationError("small-time conjugacy needs a chart that excludes the cut");
  }
  if (time_samples < 1) throw ValidationError("time_samples must be >= 1");
  ConjugacyDefect d;
  for (double theta0 : thetas) {
    const ExitWindow w = exit_window(chart, theta0, T, substeps);
    auto times = linspace(w.lower, w.upper, time_samples);
    times.push_back(0.0);
    d.sup = std::max(d.sup, lift_defect_along(theta0, times, substeps, cover));
    d.evaluations += times.size();
  }
  return d;
}

ConjugacyDefect check_large_time_conjugacy(const std::vector<double>& thetas,
                                           double T, std::size_t time_samples,
                                           std::size_t substeps,
                                           const dyn::CoveringChart& cover) {
  if (time_samples < 1) throw ValidationError("time_samples must be >= 1");
  const auto times = linspace(-T, T, time_samples);
  ConjugacyDefect d;
  for (double theta0 : thetas) {
    if (dyn::angle_0_2pi(theta0 - cover.cut) == 0.0) {
      throw ValidationError("large-time conjugacy: base point on the cut");
    }
    d.sup = std::max(d.sup, lift_defect_along(theta0, times, substeps, cover));
    d.evaluations += times.size();
  }
  return d;
}

ConjugacyDefect check_discrete_conjugacy(const std::vector<double>& thetas,
                                         std::size_t iterations, double dt,
                                         std::size_t substeps,
                                         const dyn::CoveringChart& cover) {
  if (iterations < 1) throw ValidationError("discrete conjugacy needs N >= 1");
  if (!(dt > 0.0)) throw ValidationError("discrete conjugacy needs dt > 0");
  auto lifted = [&](Ext phi) { return dyn::lifted_field(cover, phi); };
  ConjugacyDefect d;
  for (double theta0 : thetas) {
    ExtVec2 x = cover.project(Ext(theta0));
    Ext phi = cover.section(x);
    d.sup = std::max(d.sup, gap(cover, phi, x));
    for (std::size_t n = 1; n <= iterations; ++n) {
      x = dyn::reference_flow(ambient, x, dt, substeps);
      phi = dyn::reference_flow(lifted, phi, dt, substeps);
      d.sup = std::max(d.sup, gap(cover, phi, x));
    }
    d.evaluations += iterations + 1;
  }
  return d;
}

double deck_equivariance_defect(const std::vector<double>& thetas, double dt,
                                std::size_t substeps,
                                const dyn::CoveringChart& cover) {
  auto lifted = [&](Ext phi) { return dyn::lifted_field(cover, phi); };
  constexpr Ext tau = 2 * std::numbers::pi_v<Ext>;
  double sup = 0.0;
  for (double theta0 : thetas) {
    const Ext phi = cover.section(cover.project(Ext(theta0)));
    const Ext g0 = dyn::reference_flow(lifted, phi, dt, substeps);
    const Ext g1 = dyn::reference_flow(lifted, phi + tau, dt, substeps);
    sup = std::max(sup, double(std::abs(g1 - g0 - tau)));
  }
  return sup;
}

std::vector<double> base_grid(std::size_t count, const dyn::CoveringChart& cover) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = cover.cut + dyn::two_pi * (double(i) + 0.5) / double(count);
  }
  return v;
}

std::vector<double> chart_grid(const ChartInterval& chart, std::size_t count) {
  chart.validate();
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = chart.a + (chart.b - chart.a) * (double(i) + 0.5) / double(count);
  }
  return v;
}

}  // namespace latentdyn::theory
