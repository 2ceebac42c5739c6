#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>

#include "common.hpp"
#include "latentdyn/errors.hpp"
#include "latentdyn/nn/model.hpp"

using namespace latentdyn;
using namespace latentdyn::nn;
using ad::Tensor;

namespace {

std::vector<double> eval(const MlpParams& p, std::vector<double> x) {
  return MlpEvaluator(p)(x);
}

double operator_norm(const Tensor& w) {
  Eigen::MatrixXd m(w.shape()[0], w.shape()[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = w.at(r, c);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("spec validation") {
    CHECK_NOTHROW(MlpSpec::encoder().validate());
    CHECK(MlpSpec::encoder().dims == std::vector<std::size_t>{2, 128, 128, 128, 1});
    CHECK(MlpSpec::decoder().dims == std::vector<std::size_t>{1, 128, 128, 2});
    CHECK(MlpSpec::latent().dims == std::vector<std::size_t>{1, 64, 64, 1});
    CHECK_THROWS_AS(MlpSpec{{3}}.validate(), ValidationError);
    CHECK_THROWS_AS((MlpSpec{{2, 0, 1}}.validate()), ValidationError);
  }

  TEST_CASE("init is deterministic and bounded") {
    const MlpSpec spec{{1, 8, 128, 3}};
    Rng a = make_rng(42, "init-test"), b = make_rng(42, "init-test");
    const MlpParams pa = init_params(spec, a), pb = init_params(spec, b);
    for (std::size_t k = 0; k < pa.layers.size(); ++k) {
      const auto wa = pa.layers[k].weight.values(), wb = pb.layers[k].weight.values();
      CHECK(std::memcmp(wa.data(), wb.data(), wa.size_bytes()) == 0);
      const double bound = 1.0 / std::sqrt(double(spec.dims[k]));
      for (float v : wa) CHECK(std::abs(v) <= bound);
      for (float v : pa.layers[k].bias.values()) CHECK(std::abs(v) <= bound);
    }
  }

  TEST_CASE("init sample mean and variance for fan_in 128") {
    const MlpSpec spec{{128, 800, 1}};
    Rng rng = make_rng(9, "init-stats");
    const MlpParams p = init_params(spec, rng);
    const auto w = p.layers[0].weight.values();
    const std::vector<double> all(w.begin(), w.end());
    REQUIRE(all.size() >= 100000);
    const double a = 1.0 / std::sqrt(128.0);
    const double sigma = a / std::sqrt(3.0);  // uniform on [-a, a]
    double mean = 0, var = 0;
    for (double v : all) mean += v;
    mean /= double(all.size());
    for (double v : all) var += (v - mean) * (v - mean);
    var /= double(all.size() - 1);
    CHECK(std::abs(mean) <= 3 * sigma / std::sqrt(double(all.size())));
    CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.02));
  }

  TEST_CASE("forward examples") {
    const MlpParams zero = zero_params(MlpSpec{{2, 5, 3}});
    const Tensor y = mlp_forward(zero, Tensor::vector({0.3f, -7.0f}));
    for (float v : y.values()) CHECK(v == 0.0f);

    MlpParams lin;
    lin.spec = MlpSpec{{2, 1}};
    lin.layers.push_back({Tensor::matrix(1, 2, {1, 1}), Tensor::vector({0})});
    CHECK(mlp_forward(lin, Tensor::vector({2, 3}))[0] == 5.0f);
    CHECK_THROWS_AS(mlp_forward(lin, Tensor::vector({2, 3, 4})), ValidationError);
  }

  TEST_CASE("batched forward equals stacked single forwards bitwise") {
    Rng rng = make_rng(1, "batch-test");
    const MlpParams p = init_params(MlpSpec::encoder(), rng);
    const auto xs = testing::uniform_floats(rng, 2 * 37, -1.5, 1.5);
    const Tensor batch = mlp_forward(p, Tensor({37, 2}, xs));
    REQUIRE(batch.shape() == ad::Shape{37, 1});
    for (std::size_t i = 0; i < 37; ++i) {
      const Tensor single = mlp_forward(p, Tensor({1, 2}, {xs[2 * i], xs[2 * i + 1]}));
      const float a = batch[i], b = single[0];
      CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
  }

  TEST_CASE("float64 evaluator agrees with the float32 forward") {
    Rng rng = make_rng(2, "eval-test");
    const MlpParams p = init_params(MlpSpec::decoder(), rng);
    for (float phi : {-2.0f, 0.1f, 3.0f}) {
      const Tensor y = mlp_forward(p, Tensor({1, 1}, {phi}));
      const auto z = eval(p, {phi});
      CHECK(y[0] == doctest::Approx(z[0]).epsilon(1e-5));
      CHECK(y[1] == doctest::Approx(z[1]).epsilon(1e-5));
    }
  }

  TEST_CASE("decoder Jacobian examples") {
    ad::Tape tape;
    const MlpParams zero = zero_params(MlpSpec::decoder());
    const auto zl = bind(zero, tape);
    const Tensor j0 = decoder_jacobian(zl, Tensor({2, 1}, {0.5f, -1.0f}), tape);
    for (float v : j0.values()) CHECK(v == 0.0f);

    MlpParams lin;
    lin.spec = MlpSpec{{1, 2}};
    lin.layers.push_back({Tensor::matrix(2, 1, {2, -1}), Tensor::vector({0, 0})});
    const auto ll = bind(lin, tape);
    const Tensor j1 = decoder_jacobian(ll, Tensor({3, 1}, {-4.0f, 0.0f, 9.0f}), tape);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(j1.at(i, 0) == doctest::Approx(2.0));
      CHECK(j1.at(i, 1) == doctest::Approx(-1.0));
    }
  }

  TEST_CASE("decoder Jacobian matches finite differences on random nets") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng = make_rng(seed, "jac-test");
      const MlpParams p = init_params(MlpSpec::decoder(), rng);
      const auto phis = testing::uniform_floats(rng, 10, -3, 3);
      ad::Tape tape;
      const auto layers = bind(p, tape);
      const Tensor j = decoder_jacobian(layers, Tensor({10, 1}, phis), tape);
      std::vector<double> ad_j, fd_j;
      for (std::size_t i = 0; i < 10; ++i) {
        const auto up = eval(p, {phis[i] + 1e-3}), dn = eval(p, {phis[i] - 1e-3});
        for (std::size_t c = 0; c < 2; ++c) {
          ad_j.push_back(j.at(i, c));
          fd_j.push_back((up[c] - dn[c]) / 2e-3);
        }
      }
      CHECK(testing::rel_error(ad_j, fd_j) <= 1e-3);
    }
  }

  TEST_CASE("evaluator tangent agrees with finite differences") {
    Rng rng = make_rng(4, "tangent-eval");
    const MlpParams p = init_params(MlpSpec::encoder(), rng);
    const MlpEvaluator e(p);
    const std::vector<double> x{0.4, -0.9}, dx{0.6, 0.8};
    const auto [y, dy] = e.with_tangent(x, dx);
    const auto up = eval(p, {x[0] + 1e-5 * dx[0], x[1] + 1e-5 * dx[1]});
    const auto dn = eval(p, {x[0] - 1e-5 * dx[0], x[1] - 1e-5 * dx[1]});
    CHECK(dy[0] == doctest::Approx((up[0] - dn[0]) / 2e-5).epsilon(1e-6));
  }

  TEST_CASE("output moves by at most the product of operator norms") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng = make_rng(seed, "lipschitz");
      const MlpParams p = init_params(MlpSpec{{2, 32, 32, 2}}, rng);
      double lip = 1;
      for (const auto& l : p.layers) lip *= operator_norm(l.weight);
      std::normal_distribution<double> n(0, 1);
      for (int rep = 0; rep < 200; ++rep) {
        const std::vector<double> x{n(rng), n(rng)};
        const std::vector<double> d{1e-2 * n(rng), 1e-2 * n(rng)};
        const auto a = eval(p, x);
        const auto b = eval(p, {x[0] + d[0], x[1] + d[1]});
        const double dist = std::hypot(a[0] - b[0], a[1] - b[1]);
        CHECK(dist <= lip * std::hypot(d[0], d[1]) * (1 + 1e-9));
      }
    }
  }

  TEST_CASE("model init uses separate streams per net") {
    const Model a = init_model(ModelSpecs{}, 1), b = init_model(ModelSpecs{}, 1);
    const Model c = init_model(ModelSpecs{}, 2);
    const auto va = a.decoder.layers[0].weight.values();
    const auto vb = b.decoder.layers[0].weight.values();
    const auto vc = c.decoder.layers[0].weight.values();
    CHECK(std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0);
    CHECK(std::memcmp(va.data(), vc.data(), va.size_bytes()) != 0);
    CHECK(a.encoder.layers[0].bias[0] != a.latent.layers[0].bias[0]);
  }
}
