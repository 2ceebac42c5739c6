#include "latentdyn/theory/borsuk_ulam.hpp"

#include <gsl/gsl_multimin.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "latentdyn/errors.hpp"
#include "latentdyn/nn/mlp.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn::theory {
namespace {

Eigen::VectorXd odd_part(const SphereMaps& maps, const Vec3& z) {
  return maps.encode(z) - maps.encode(-z);
}

BoundWitness measure(const SphereMaps& maps, const Vec3& z) {
  BoundWitness w;
  w.z = z;
  const Eigen::VectorXd ep = maps.encode(z), em = maps.encode(-z);
  w.residual = (ep - em).norm();
  const Vec3 dp = maps.decode(ep), dm = maps.decode(em);
  w.decoded_gap = (dp - dm).norm();
  w.err_plus = (dp - z).norm();
  w.err_minus = (dm + z).norm();
  w.certified = w.max_err() >= w.bound * (1.0 - 1e-3);
  w.triangle = w.err_plus + w.err_minus >= 2.0 * w.bound - w.decoded_gap;
  return w;
}

void require_latent(const SphereMaps& maps, std::size_t dim) {
  if (maps.latent_dim != dim || !maps.encode || !maps.decode) {
    throw ValidationError("Borsuk-Ulam probe expects latent dimension " +
                          std::to_string(dim));
  }
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-8);
  return v.normalized();
}

struct SimplexTarget {
  const SphereMaps* maps;
};

double simplex_objective(const gsl_vector* y, void* params) {
  const auto* target = static_cast<const SimplexTarget*>(params);
  Vec3 v(gsl_vector_get(y, 0), gsl_vector_get(y, 1), gsl_vector_get(y, 2));
  const double n = v.norm();
  if (n < 1e-12) return 1e300;
  return odd_part(*target->maps, v / n).squaredNorm();
}

}  // namespace

BoundWitness borsuk_ulam_circle(const SphereMaps& maps, const GreatCircle& circle,
                                std::size_t scan, double tol) {
  require_latent(maps, 1);
  if (scan < 1) throw ValidationError("borsuk_ulam_circle: scan must be >= 1");
  // The half circle from u to -u; the far end is -u exactly, so g there is
  // exactly -g(0).
  auto point = [&](double s) {
    return s >= std::numbers::pi ? Vec3(-circle.u) : circle.at(s);
  };
  auto g = [&](double s) { return odd_part(maps, point(s))[0]; };

  double lo = 0.0, g_lo = g(0.0);
  double hi = std::numbers::pi;
  bool bracketed = false;
  if (g_lo == 0.0) {
    hi = lo;
    bracketed = true;
  }
  for (std::size_t i = 1; i <= scan && !bracketed; ++i) {
    const double s = std::numbers::pi * double(i) / double(scan);
    const double gs = g(s);
    if (gs == 0.0 || std::signbit(gs) != std::signbit(g_lo)) {
      hi = s;
      bracketed = true;
    } else {
      lo = s;
      g_lo = gs;
    }
  }
  if (!bracketed) {
    // Only possible with non-finite encoder output.
    throw NumericalError("borsuk_ulam_circle: no sign change of the odd map");
  }

  double best = std::abs(g_lo) <= std::abs(g(hi)) ? lo : hi;
  while (std::abs(g(best)) > tol && hi - lo > 1e-17) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0 || std::signbit(gm) != std::signbit(g_lo)) {
      hi = mid;
    } else {
      lo = mid;
      g_lo = gm;
    }
    best = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
  }
  BoundWitness w = measure(maps, point(best));
  w.found = w.residual <= tol;
  return w;
}

BoundWitness borsuk_ulam_sphere(const SphereMaps& maps, std::size_t starts,
                                std::uint64_t seed, double tol) {
  require_latent(maps, 2);
  Rng rng = make_rng(seed, "borsuk-ulam-starts");
  SimplexTarget target{&maps};
  gsl_multimin_function fn{&simplex_objective, 3, &target};

  using Minimizer = std::unique_ptr<gsl_multimin_fminimizer,
                                    decltype(&gsl_multimin_fminimizer_free)>;
  using Vector = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  Minimizer m(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3),
              &gsl_multimin_fminimizer_free);
  Vector x(gsl_vector_alloc(3), &gsl_vector_free);
  Vector step(gsl_vector_alloc(3), &gsl_vector_free);

  BoundWitness best;
  best.residual = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < starts; ++k) {
    const Vec3 start = random_unit(rng);
    for (int i = 0; i < 3; ++i) gsl_vector_set(x.get(), i, start[i]);
    gsl_vector_set_all(step.get(), 0.2);
    gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get());
    for (int iter = 0; iter < 5000; ++iter) {
      if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
      if (std::sqrt(m->fval) <= 0.01 * tol) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), 1e-14) ==
          GSL_SUCCESS) {
        break;
      }
    }
    const gsl_vector* y = gsl_multimin_fminimizer_x(m.get());
    Vec3 z(gsl_vector_get(y, 0), gsl_vector_get(y, 1), gsl_vector_get(y, 2));
    if (z.norm() < 1e-12) continue;
    BoundWitness w = measure(maps, z.normalized());
    if (w.residual < best.residual) best = w;
    if (best.residual <= tol) break;
  }
  best.found = best.residual <= tol;
  return best;
}

double odd_map_asymmetry(const SphereMaps& maps, std::size_t samples,
                         std::uint64_t seed) {
  Rng rng = make_rng(seed, "borsuk-ulam-odd");
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 z = random_unit(rng);
    worst = std::max(worst, (odd_part(maps, z) + odd_part(maps, -z)).norm());
  }
  return worst;
}

SphereMaps random_sphere_maps(std::size_t latent_dim, std::uint64_t seed,
                              std::size_t hidden) {
  Rng re = make_rng(seed, "borsuk-ulam-E");
  Rng rd = make_rng(seed, "borsuk-ulam-D");
  auto enc = std::make_shared<nn::MlpEvaluator>(
      nn::init_params(nn::MlpSpec{{3, hidden, hidden, latent_dim}}, re));
  auto dec = std::make_shared<nn::MlpEvaluator>(
      nn::init_params(nn::MlpSpec{{latent_dim, hidden, hidden, 3}}, rd));
  SphereMaps maps;
  maps.latent_dim = latent_dim;
  maps.encode = [enc](const Vec3& y) {
    const auto out = (*enc)(std::span<const double>(y.data(), 3));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(out.data(), Eigen::Index(out.size())));
  };
  maps.decode = [dec](const Eigen::VectorXd& phi) {
    const auto out = (*dec)(std::span<const double>(phi.data(), std::size_t(phi.size())));
    return Vec3(out[0], out[1], out[2]);
  };
  return maps;
}

SphereMaps linear_projection_maps() {
  SphereMaps maps;
  maps.latent_dim = 1;
  maps.encode = [](const Vec3& y) { return Eigen::VectorXd::Constant(1, y[0]); };
  maps.decode = [](const Eigen::VectorXd& phi) { return Vec3(phi[0], 0.0, 0.0); };
  return maps;
}

SphereMaps from_circle_maps(const CircleMaps& circle) {
  SphereMaps maps;
  maps.latent_dim = 1;
  maps.encode = [circle](const Vec3& y) {
    return Eigen::VectorXd::Constant(1, circle.encode(Vec2(y[0], y[1])));
  };
  maps.decode = [circle](const Eigen::VectorXd& phi) {
    const Vec2 x = circle.decode(phi[0]);
    return Vec3(x[0], x[1], 0.0);
  };
  return maps;
}

}  // namespace latentdyn::theory
