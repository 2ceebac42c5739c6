#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <numbers>

#include "common.hpp"
#include "latentdyn/dynamics/dynamics.hpp"
#include "latentdyn/eval/evaluation.hpp"

using namespace latentdyn;
using namespace latentdyn::eval;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

double max_abs_diff_away_from(const Table& t, const std::string& a, const std::string& b,
                              double cut, double arc) {
  const auto th = t.column("theta"), x = t.column(a), y = t.column(b);
  double worst = 0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    if (std::abs(dyn::wrap_angle(th[i] - cut)) < arc / 2) continue;
    worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("encoder curve of the exact chart is the identity") {
    const auto t = encoder_curve(dyn::exact_chart_maps());
    REQUIRE(t.rows.size() == 720);
    CHECK(t.columns == std::vector<std::string>{"theta", "phi"});
    for (std::size_t k = 1; k < 720; ++k) {
      CHECK(std::abs(t.rows[k][1] - grid_angle(k, 720)) <= 1e-12);
    }
    CHECK(encoder_curve(dyn::exact_chart_maps(), 37).rows.size() == 37);
  }

  TEST_CASE("latent window pads the encoder range by 5 percent") {
    Table curve{{"theta", "phi"}, {{0, -1.0}, {1, 3.0}}, false};
    const Window w = latent_window(curve);
    CHECK(w.lo == doctest::Approx(-1.2));
    CHECK(w.hi == doctest::Approx(3.2));
    const auto lf = latent_field(dyn::exact_chart_maps(), w, 11);
    REQUIRE(lf.rows.size() == 11);
    CHECK(lf.rows.front()[0] == doctest::Approx(-1.2));
    CHECK(lf.rows.back()[0] == doctest::Approx(3.2));
    CHECK(lf.rows[3][1] == doctest::Approx(std::sin(2 * lf.rows[3][0])));
  }

  TEST_CASE("pullback of the exact pair matches sin 2 theta away from the cut") {
    const auto t = pullback_field(dyn::exact_chart_maps(), 720);
    CHECK(max_abs_diff_away_from(t, "pulled_vf", "true_vf", 0.0, 0.2) <= 1e-4);
    CHECK(t.columns ==
          std::vector<std::string>{"theta", "true_vf", "pulled_vf", "dphi_dtheta", "flag"});
  }

  TEST_CASE("pullback error falls like K^-2") {
    // A warped chart g(theta) = theta + 0.3 sin theta with the matching latent
    // field, so the only error left is the central difference of g.
    auto g = [](double th) { return th + 0.3 * std::sin(th); };
    auto g_inv = [&](double phi) {
      double th = phi;
      for (int i = 0; i < 60; ++i) th -= (g(th) - phi) / (1 + 0.3 * std::cos(th));
      return th;
    };
    CircleMaps warped = dyn::exact_chart_maps();
    warped.encode = [g](const Vec2& x) { return g(dyn::angle_0_2pi(dyn::polar_angle(x))); };
    warped.field = [g_inv](double phi) {
      const double th = g_inv(phi);
      return (1 + 0.3 * std::cos(th)) * std::sin(2 * th);
    };
    std::vector<double> errs;
    for (std::size_t K : {180, 360, 720}) {
      errs.push_back(max_abs_diff_away_from(pullback_field(warped, K), "pulled_vf", "true_vf",
                                            0.0, 0.2));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
  }

  TEST_CASE("pullback with a zero field and with a flat encoder") {
    CircleMaps still = dyn::exact_chart_maps();
    still.field = [](double) { return 0.0; };
    const auto t = pullback_field(still, 90);
    for (const auto& r : t.rows) {
      if (r[4] == 0) CHECK(r[2] == 0.0);
    }
    CircleMaps flat = dyn::exact_chart_maps();
    flat.encode = [](const Vec2&) { return 0.25; };
    const auto f = pullback_field(flat, 90);
    for (const auto& r : f.rows) {
      CHECK(r[4] == 1.0);
      CHECK(std::isnan(r[2]));
    }
  }

  TEST_CASE("decoder image") {
    const auto t = decoder_image(dyn::exact_chart_maps(), {-1.0, 7.0}, 50);
    for (const auto& r : t.rows) {
      CHECK(r[3] == doctest::Approx(1.0));
      CHECK(std::abs(dyn::wrap_angle(r[4] - r[0])) <= 1e-12);
    }
    CircleMaps zero = dyn::exact_chart_maps();
    zero.decode = [](double) { return Vec2(0, 0); };
    const auto z = decoder_image(zero, {0, 1}, 5);
    for (const auto& r : z.rows) {
      CHECK(r[3] == 0.0);
      CHECK(std::isnan(r[4]));
    }
  }

  TEST_CASE("rollout") {
    const auto maps = dyn::exact_chart_maps();
    const auto still = rollout(maps, Vec2(0, 1), 96, 0.04);
    REQUIRE(still.rows.size() == 96);
    for (const auto& r : still.rows) CHECK(r[4] == doctest::Approx(pi / 2));

    const auto t = rollout(maps, on_circle(pi / 4), 96, 0.04);
    CHECK_FALSE(t.truncated);
    for (const auto& r : t.rows) {
      CHECK(std::abs(r[4] - dyn::restricted_flow_exact(pi / 4, r[0])) <= 1e-3);
    }

    CircleMaps blowup = maps;
    blowup.field = [](double p) { return 1e200 * (1 + p * p); };
    const auto b = rollout(blowup, on_circle(1.0), 96, 0.04);
    CHECK(b.truncated);
    CHECK(b.rows.size() < 96);
  }

  TEST_CASE("timeseries") {
    const auto maps = dyn::exact_chart_maps();
    const auto f = timeseries('F', maps, 96, 0.04);
    for (const auto& r : f.rows) {
      CHECK(r[1] == doctest::Approx(pi));
      CHECK(r[2] == doctest::Approx(pi));
      CHECK(r[3] == doctest::Approx(pi));
    }
    CHECK(dyn::wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
    const auto b = timeseries('B', maps, 96, 0.04);
    REQUIRE(b.rows.size() == 96);
    for (const auto& r : b.rows) {
      CHECK(std::abs(r[1] - r[2]) <= 2e-2);
      CHECK(std::abs(r[1] - r[3]) <= 2e-2);
    }
  }

  TEST_CASE("roundtrip of the exact pair") {
    const auto p = roundtrip_profile(dyn::exact_chart_maps(dyn::CoveringChart{0.5}));
    CHECK(p.max_err <= 1e-9);
  }

  TEST_CASE("refinement recovers an off-grid peak and is monotone in depth") {
    CircleMaps bumped = dyn::exact_chart_maps();
    const double peak = 1.00123;
    bumped.decode = [peak](double phi) -> Vec2 {
      const double g = std::exp(-std::pow((phi - peak) / 0.004, 2));
      return Vec2(std::cos(phi), std::sin(phi)) * (1 + 0.5 * g);
    };
    const auto p = roundtrip_profile(bumped, 720, 1e-7);
    CHECK(p.max_err == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p.argmax_theta == doctest::Approx(peak).epsilon(1e-6));
    for (std::size_t i = 1; i < p.max_by_depth.size(); ++i) {
      CHECK(p.max_by_depth[i] >= p.max_by_depth[i - 1]);
    }
    const auto th = p.table.column("theta");
    CHECK(std::is_sorted(th.begin(), th.end()));
    CHECK(th.size() > 720);
  }

  TEST_CASE("lp error") {
    CHECK(lp_error(dyn::exact_chart_maps(), 2.0, 4096) <= 1e-8);
    CircleMaps scaled = dyn::exact_chart_maps();
    scaled.decode = [](double phi) -> Vec2 { return 1.5 * Vec2(std::cos(phi), std::sin(phi)); };
    CHECK(lp_error(scaled, 2.0, 256) == doctest::Approx(0.25));
    CHECK(lp_error(scaled, 3.0, 256) == doctest::Approx(0.125));
  }

  TEST_CASE("cut angle and tag radii") {
    CHECK(std::abs(dyn::wrap_angle(encoder_cut_angle(dyn::exact_chart_maps(dyn::CoveringChart{2.0})) -
                                   2.0)) <= 2 * pi / 720);
    for (const auto& [tag, r] : tag_radii(dyn::exact_chart_maps())) {
      CHECK(r == doctest::Approx(1.0));
    }
  }

  TEST_CASE("bundle files and summary") {
    const auto dir = testing::scratch_dir("eval_bundle");
    EvalOptions o;
    o.grid = 90;
    o.roundtrip_grid = 90;
    o.lp_grid = 256;
    o.steps = 10;
    const auto bundle = evaluate(dyn::exact_chart_maps(), o);
    write_bundle(bundle, dir, R"({"checkpoint":"oracle"})");
    CHECK(first_line(dir / "phi_of_theta.csv") == "theta,phi");
    CHECK(first_line(dir / "latent_vf.csv") == "phi,h");
    CHECK(first_line(dir / "decoder_image.csv") == "phi,x1,x2,radius,angle");
    CHECK(first_line(dir / "pullback.csv") == "theta,true_vf,pulled_vf,dphi_dtheta,flag");
    CHECK(first_line(dir / "roundtrip.csv") == "theta,err");
    for (char tag = 'A'; tag <= 'H'; ++tag) {
      CHECK(first_line(dir / (std::string("rollout_") + tag + ".csv")) ==
            "t,phi,x1,x2,theta_roll");
      CHECK(first_line(dir / (std::string("timeseries_") + tag + ".csv")) ==
            "t,theta_true,theta_decoded,theta_rollout");
    }
    std::ifstream in(dir / "summary.json");
    const auto j = nlohmann::json::parse(in);
    for (const char* key : {"max_roundtrip_err", "argmax_theta", "l2_error", "tag_radii"}) {
      CHECK(j.contains(key));
    }
    CHECK(j["tag_radii"].size() == 8);
    CHECK(j["meta"]["checkpoint"] == "oracle");
  }

  TEST_CASE("csv writes nan for undefined entries") {
    const auto dir = testing::scratch_dir("eval_csv");
    write_csv(Table{{"a", "b"}, {{0.1, std::nan("")}}, false}, dir / "t.csv");
    std::ifstream in(dir / "t.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row == "0.1,nan");
  }
}
