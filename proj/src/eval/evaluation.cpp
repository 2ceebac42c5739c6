#include "latentdyn/eval/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "latentdyn/data/dataset.hpp"
#include "latentdyn/dynamics/dynamics.hpp"
#include "latentdyn/errors.hpp"

namespace latentdyn::eval {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void require_grid(std::size_t K, std::size_t minimum, const char* what) {
  if (K < minimum) {
    throw ValidationError(std::string(what) + ": grid size must be >= " +
                          std::to_string(minimum));
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> encoder_values(const CircleMaps& maps, std::size_t K) {
  std::vector<double> phi(K);
  for (std::size_t k = 0; k < K; ++k) phi[k] = maps.encode(on_circle(grid_angle(k, K)));
  return phi;
}

std::size_t largest_jump(const std::vector<double>& phi) {
  const std::size_t K = phi.size();
  std::size_t best = 0;
  double jump = -1.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double d = std::abs(phi[(k + 1) % K] - phi[k]);
    if (d > jump) {
      jump = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("no column '" + name + "'");
  const auto j = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    out << (j ? "," : "") << table.columns[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? "," : "") << format_double(row[j]);
    }
    out << '\n';
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

double grid_angle(std::size_t k, std::size_t K) {
  return dyn::two_pi * double(k) / double(K);
}

Vec2 on_circle(double theta) { return {std::cos(theta), std::sin(theta)}; }

Table encoder_curve(const CircleMaps& maps, std::size_t K) {
  require_grid(K, 2, "encoder_curve");
  Table t{{"theta", "phi"}, {}, false};
  const auto phi = encoder_values(maps, K);
  for (std::size_t k = 0; k < K; ++k) t.rows.push_back({grid_angle(k, K), phi[k]});
  return t;
}

Window latent_window(const Table& curve) {
  const auto phi = curve.column("phi");
  if (phi.empty()) throw ValidationError("latent_window: empty encoder curve");
  const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
  const double pad = 0.05 * (*hi - *lo);
  return {*lo - pad, *hi + pad};
}

Table latent_field(const CircleMaps& maps, Window window, std::size_t K) {
  require_grid(K, 2, "latent_field");
  Table t{{"phi", "h"}, {}, false};
  for (std::size_t k = 0; k < K; ++k) {
    const double phi =
        window.lo + (window.hi - window.lo) * double(k) / double(K - 1);
    t.rows.push_back({phi, maps.field(phi)});
  }
  return t;
}

Table pullback_field(const CircleMaps& maps, std::size_t K) {
  require_grid(K, 3, "pullback_field");
  Table t{{"theta", "true_vf", "pulled_vf", "dphi_dtheta", "flag"}, {}, false};
  const auto phi = encoder_values(maps, K);
  const double step = dyn::two_pi / double(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double theta = grid_angle(k, K);
    const double d = (phi[(k + 1) % K] - phi[(k + K - 1) % K]) / (2.0 * step);
    const bool flag = !(std::abs(d) >= 1e-8);
    const double pulled = flag ? nan : maps.field(phi[k]) / d;
    t.rows.push_back({theta, dyn::restricted_field(theta), pulled, d, flag ? 1.0 : 0.0});
  }
  return t;
}

Table decoder_image(const CircleMaps& maps, Window window, std::size_t K) {
  require_grid(K, 2, "decoder_image");
  Table t{{"phi", "x1", "x2", "radius", "angle"}, {}, false};
  for (std::size_t k = 0; k < K; ++k) {
    const double phi =
        window.lo + (window.hi - window.lo) * double(k) / double(K - 1);
    const Vec2 x = maps.decode(phi);
    const double r = x.norm();
    t.rows.push_back({phi, x[0], x[1], r, r == 0.0 ? nan : dyn::polar_angle(x)});
  }
  return t;
}

Table rollout(const CircleMaps& maps, const Vec2& x0, std::size_t steps,
              double dt) {
  if (steps < 1) throw ValidationError("rollout: steps must be >= 1");
  Table t{{"t", "phi", "x1", "x2", "theta_roll"}, {}, false};
  double phi = maps.encode(x0);
  for (std::size_t n = 0; n < steps; ++n) {
    const Vec2 x = maps.decode(phi);
    if (!std::isfinite(phi) || !x.allFinite()) {
      t.truncated = true;
      break;
    }
    t.rows.push_back({double(n) * dt, phi, x[0], x[1], dyn::polar_angle(x)});
    if (n + 1 == steps) break;
    try {
      phi = dyn::rk4_step(maps.field, phi, dt);
    } catch (const NumericalError&) {
      t.truncated = true;
      break;
    }
  }
  return t;
}

Table timeseries(char tag, const CircleMaps& maps, std::size_t steps,
                 double dt) {
  const double theta0 = data::labeled_angle(tag);
  const Table roll = rollout(maps, on_circle(theta0), steps, dt);
  Table t{{"t", "theta_true", "theta_decoded", "theta_rollout"}, {}, roll.truncated};
  double theta = theta0;
  for (std::size_t n = 0; n < steps; ++n) {
    if (n > 0) theta = dyn::euler_step(theta, dt);
    const Vec2 decoded = maps.decode(maps.encode(on_circle(theta)));
    const double rolled = n < roll.rows.size() ? roll.rows[n][4] : nan;
    t.rows.push_back({double(n) * dt, dyn::wrap_angle(theta),
                      dyn::polar_angle(decoded), rolled});
  }
  return t;
}

double roundtrip_error(const CircleMaps& maps, double theta) {
  const Vec2 x = on_circle(theta);
  return (maps.decode(maps.encode(x)) - x).norm();
}

RoundtripProfile roundtrip_profile(const CircleMaps& maps, std::size_t K,
                                   double tol) {
  require_grid(K, 16, "roundtrip_profile");
  if (!(tol > 0.0)) throw ValidationError("roundtrip_profile: tol must be > 0");
  RoundtripProfile prof;
  std::vector<std::pair<double, double>> samples;
  std::vector<double> err(K);
  for (std::size_t k = 0; k < K; ++k) {
    err[k] = roundtrip_error(maps, grid_angle(k, K));
    samples.emplace_back(grid_angle(k, K), err[k]);
  }
  auto record = [&](double theta, double e) {
    samples.emplace_back(dyn::angle_0_2pi(theta), e);
    if (e > prof.max_err) {
      prof.max_err = e;
      prof.argmax_theta = dyn::angle_0_2pi(theta);
    }
  };
  const auto top = std::max_element(err.begin(), err.end());
  prof.max_err = *top;
  prof.argmax_theta = grid_angle(std::size_t(top - err.begin()), K);
  prof.max_by_depth.push_back(prof.max_err);

  const double h = dyn::two_pi / double(K);
  std::vector<std::pair<double, double>> brackets;
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + 3, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return err[a] > err[b] || (err[a] == err[b] && a < b);
                    });
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = grid_angle(order[i], K);
    brackets.emplace_back(c - h, c + h);
  }
  const std::size_t jump = largest_jump(encoder_values(maps, K));
  brackets.emplace_back(grid_angle(jump, K) - h, grid_angle(jump, K) + 2.0 * h);

  // Each depth samples 7 points per bracket and keeps the third centred on
  // the best one.
  constexpr int points = 7;
  bool open = true;
  while (open) {
    open = false;
    for (auto& [a, b] : brackets) {
      const double w = b - a;
      if (w <= tol) continue;
      double best_theta = a, best = -1.0;
      for (int i = 0; i < points; ++i) {
        const double theta = a + w * double(i) / double(points - 1);
        const double e = roundtrip_error(maps, theta);
        record(theta, e);
        if (e > best) {
          best = e;
          best_theta = theta;
        }
      }
      double lo = best_theta - w / 6.0, hi = best_theta + w / 6.0;
      if (lo < a) {
        hi += a - lo;
        lo = a;
      }
      if (hi > b) {
        lo -= hi - b;
        hi = b;
      }
      a = lo;
      b = hi;
      if (b - a > tol) open = true;
    }
    prof.max_by_depth.push_back(prof.max_err);
  }

  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [](const auto& x, const auto& y) { return x.first == y.first; }),
                samples.end());
  prof.table.columns = {"theta", "err"};
  for (const auto& [theta, e] : samples) prof.table.rows.push_back({theta, e});
  return prof;
}

double lp_error(const CircleMaps& maps, double p, std::size_t K) {
  require_grid(K, 16, "lp_error");
  if (!(p > 0.0)) throw ValidationError("lp_error: exponent must be > 0");
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    sum += std::pow(roundtrip_error(maps, grid_angle(k, K)), p);
  }
  return sum / double(K);
}

double encoder_cut_angle(const CircleMaps& maps, std::size_t K) {
  require_grid(K, 2, "encoder_cut_angle");
  const std::size_t k = largest_jump(encoder_values(maps, K));
  return dyn::angle_0_2pi(grid_angle(k, K) + 0.5 * dyn::two_pi / double(K));
}

std::map<char, double> tag_radii(const CircleMaps& maps) {
  std::map<char, double> radii;
  for (const auto& p : data::labeled_points()) {
    radii[p.tag] = maps.decode(maps.encode(on_circle(p.theta))).norm();
  }
  return radii;
}

EvalBundle evaluate(const CircleMaps& maps, const EvalOptions& options) {
  EvalBundle b;
  Table curve = encoder_curve(maps, options.grid);
  const Window window = latent_window(curve);
  b.tables["latent_vf"] = latent_field(maps, window, options.grid);
  b.tables["decoder_image"] = decoder_image(maps, window, options.grid);
  b.tables["pullback"] = pullback_field(maps, options.grid);
  b.tables["phi_of_theta"] = std::move(curve);
  for (const auto& p : data::labeled_points()) {
    const std::string tag(1, p.tag);
    b.tables["rollout_" + tag] =
        rollout(maps, on_circle(p.theta), options.steps, options.dt);
    b.tables["timeseries_" + tag] =
        timeseries(p.tag, maps, options.steps, options.dt);
  }
  b.roundtrip = roundtrip_profile(maps, options.roundtrip_grid, options.refine_tol);
  b.tables["roundtrip"] = b.roundtrip.table;
  b.lp_p = options.lp_p;
  b.lp = lp_error(maps, options.lp_p, options.lp_grid);
  b.radii = tag_radii(maps);
  return b;
}

void write_bundle(const EvalBundle& bundle, const std::filesystem::path& dir,
                  const std::string& meta_json) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, table] : bundle.tables) write_csv(table, dir / (name + ".csv"));

  nlohmann::ordered_json summary;
  summary["max_roundtrip_err"] = bundle.roundtrip.max_err;
  summary["argmax_theta"] = bundle.roundtrip.argmax_theta;
  // l2_error is the mean of err^p; for p = 2 that is the squared L2 norm
  // under the normalized measure.
  summary["l2_error"] = bundle.lp;
  summary["lp_exponent"] = bundle.lp_p;
  nlohmann::ordered_json radii = nlohmann::ordered_json::object();
  for (const auto& [tag, r] : bundle.radii) radii[std::string(1, tag)] = r;
  summary["tag_radii"] = radii;
  nlohmann::ordered_json truncated = nlohmann::ordered_json::array();
  for (const auto& [name, table] : bundle.tables) {
    if (table.truncated) truncated.push_back(name);
  }
  summary["truncated_tables"] = truncated;
  summary["meta"] = nlohmann::ordered_json::parse(meta_json);
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw ValidationError("cannot write " + (dir / "summary.json").string());
  out << summary.dump(2) << '\n';
}

}  // namespace latentdyn::eval
