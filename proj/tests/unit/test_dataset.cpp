#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numbers>

#include "common.hpp"
#include "latentdyn/data/dataset.hpp"
#include "latentdyn/dynamics/dynamics.hpp"
#include "latentdyn/errors.hpp"

using namespace latentdyn;
using namespace latentdyn::data;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("labeled angles") {
    const double pi = std::numbers::pi;
    const std::vector<double> want{0, pi / 6, pi / 5, pi / 4, 3 * pi / 4, pi, 5 * pi / 4,
                                   4 * pi / 3};
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(labeled_points()[i].tag == char('A' + i));
      CHECK(labeled_points()[i].theta == want[i]);
      CHECK(labeled_angle(char('A' + i)) == want[i]);
    }
    CHECK_THROWS_AS(labeled_angle('Z'), ValidationError);
  }

  TEST_CASE("default sizes and determinism") {
    const auto a = generate(512, 96, 0.04, 3);
    CHECK(a.point_count() == 49152);
    CHECK(a.pair_count() == 48640);
    const auto b = generate(512, 96, 0.04, 3);
    CHECK(a == b);
    CHECK_FALSE(a == generate(512, 96, 0.04, 4));
    CHECK_NOTHROW(a.validate());
  }

  TEST_CASE("rows follow the float32 Euler recurrence exactly") {
    const auto ds = generate(64, 96, 0.04, 8);
    const float dt = 0.04f;
    for (std::size_t i = 0; i < 64; ++i) {
      for (std::size_t t = 0; t + 1 < 96; ++t) {
        const float th = ds.theta(i, t);
        const float next = th + dt * std::sin(2.0f * th);
        REQUIRE(ds.theta(i, t + 1) == next);
      }
      for (std::size_t t = 0; t < 96; ++t) {
        const std::size_t k = i * 96 + t;
        const double r = std::hypot(double(ds.points[2 * k]), double(ds.points[2 * k + 1]));
        REQUIRE(std::abs(r - 1.0) <= 1e-6);
        REQUIRE(ds.points[2 * k] == doctest::Approx(std::cos(double(ds.thetas[k]))).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("equilibrium start gives a constant row") {
    const float half_pi = static_cast<float>(std::numbers::pi / 2);
    const auto ds = generate_from(std::vector<float>{half_pi, 1.0f}, 96, 0.04);
    for (std::size_t t = 0; t < 96; ++t) CHECK(ds.theta(0, t) == half_pi);
  }

  TEST_CASE("initial angles are roughly uniform") {
    const auto ds = generate(512, 2, 0.04, 11);
    std::array<int, 8> bins{};
    for (std::size_t i = 0; i < 512; ++i) {
      const double th = ds.theta(i, 0);
      REQUIRE(th >= 0.0);
      REQUIRE(th < dyn::two_pi);
      ++bins[std::min<std::size_t>(7, std::size_t(th / dyn::two_pi * 8))];
    }
    const double sigma = std::sqrt(512 * (1.0 / 8) * (7.0 / 8));
    for (int c : bins) CHECK(std::abs(c - 64) <= 5 * sigma);
  }

  TEST_CASE("save and load round trip bitwise") {
    const auto dir = testing::scratch_dir("dataset_rt");
    const auto ds = generate(20, 7, 0.04, 5);
    save_dataset(ds, dir / "d.csv");
    CHECK(fs::exists(sidecar_path(dir / "d.csv")));
    CHECK(read_file(dir / "d.csv").rfind("traj,t,theta,x1,x2\n", 0) == 0);
    const auto back = load_dataset(dir / "d.csv");
    CHECK(back == ds);

    Rng r1 = make_rng(1, "shuffle"), r2 = make_rng(1, "shuffle");
    CHECK(minibatches(ds, 16, Stream::pairs, r1) == minibatches(back, 16, Stream::pairs, r2));
  }

  TEST_CASE("truncated file names the last good line") {
    const auto dir = testing::scratch_dir("dataset_trunc");
    save_dataset(generate(3, 4, 0.04, 5), dir / "d.csv");
    const std::string text = read_file(dir / "d.csv");
    // keep the header and five rows, then half of the sixth
    std::size_t cut = 0;
    for (int n = 0; n < 6; ++n) cut = text.find('\n', cut) + 1;
    write_file(dir / "d.csv", text.substr(0, cut + 6));
    try {
      load_dataset(dir / "d.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("last good line 6") != std::string::npos);
    }
    write_file(dir / "d.csv", text.substr(0, cut));
    CHECK_THROWS_AS(load_dataset(dir / "d.csv"), ParseError);
  }

  TEST_CASE("non-unit points are rejected") {
    const auto dir = testing::scratch_dir("dataset_nonunit");
    write_file(dir / "d.csv", "traj,t,theta,x1,x2\n0,0,0.7853982,1,1\n0,1,0.8253982,1,1\n");
    write_file(dir / "d.json", R"({"N":1,"T":2,"dt":0.04,"seed":0,"format_version":1})");
    try {
      load_dataset(dir / "d.csv");
      FAIL("expected a validation error");
    } catch (const ParseError&) {
      FAIL("wrong error kind");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("unit circle") != std::string::npos);
    }
  }

  TEST_CASE("minibatch counts") {
    Rng rng = make_rng(0, "shuffle");
    const auto ds = generate(512, 96, 0.04, 1);
    const auto pts = minibatches(ds, 4096, Stream::points, rng);
    CHECK(pts.size() == 12);
    for (const auto& b : pts) CHECK(b.size() == 4096);
    const auto pairs = minibatches(ds, 4096, Stream::pairs, rng);
    CHECK(pairs.size() == 12);
    CHECK(pairs.back().size() == 3584);
    const auto whole = minibatches(ds, 100000, Stream::points, rng);
    CHECK(whole.size() == 1);
    CHECK(whole[0].size() == 49152);
    CHECK_THROWS_AS(minibatches(10, 0, rng), ValidationError);
  }

  TEST_CASE("one epoch covers the stream exactly once") {
    Rng rng = make_rng(2, "shuffle");
    const auto batches = minibatches(1000, 64, rng);
    std::vector<std::size_t> all;
    for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == 1000);
    for (std::size_t i = 0; i < 1000; ++i) CHECK(all[i] == i);
  }

  TEST_CASE("pair gathering picks consecutive states") {
    const auto ds = generate(4, 5, 0.04, 2);
    const std::vector<std::size_t> ids{0, 3, 4, 15};
    const auto pb = gather_pairs(ds, ids);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto [a, b] = ds.pair_indices(ids[j]);
      CHECK(b == a + 1);
      CHECK(a / 5 == b / 5);
      CHECK(pb.current.at(j, 0) == ds.points[2 * a]);
      CHECK(pb.next.at(j, 1) == ds.points[2 * b + 1]);
    }
  }
}
