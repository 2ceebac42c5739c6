#pragma once

// Loss gradients on a miniature model: tape reverse mode against central
// differences of the float64 reference losses, which evaluate the nets
// through MlpEvaluator and never touch a tape.

#include <array>
#include <cmath>
#include <string>

#include "common.hpp"
#include "latentdyn/data/dataset.hpp"
#include "latentdyn/training/losses.hpp"
#include "latentdyn/training/trainer.hpp"

namespace testing {

struct LossGradErrors {
  double rec = 0, conj = 0, lat1 = 0, total = 0;
  double worst() const { return std::max({rec, conj, lat1, total}); }
};

inline latentdyn::nn::ModelSpecs tiny_specs() {
  return {{{2, 4, 4, 1}}, {{1, 4, 2}}, {{1, 3, 1}}};
}

inline LossGradErrors loss_gradient_errors(std::uint64_t seed, double h = 1e-3) {
  using namespace latentdyn;
  namespace ad = latentdyn::ad;
  const nn::Model model = nn::init_model(tiny_specs(), seed);
  Rng rng = make_rng(seed, "gradcheck-batch");
  const auto angles = uniform_floats(rng, 6, 0.0, 6.28);
  const auto ds = data::generate_from(angles, 2, 0.04);
  std::vector<Vec2> x, x_next;
  std::vector<float> xf, nf;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const std::size_t a = 2 * i, b = 2 * i + 1;
    x.emplace_back(ds.points[2 * a], ds.points[2 * a + 1]);
    x_next.emplace_back(ds.points[2 * b], ds.points[2 * b + 1]);
    xf.insert(xf.end(), {ds.points[2 * a], ds.points[2 * a + 1]});
    nf.insert(nf.end(), {ds.points[2 * b], ds.points[2 * b + 1]});
  }
  const ad::Tensor xt({angles.size(), 2}, xf), nt({angles.size(), 2}, nf);
  const train::LossWeights w{1.5, 0.7, 2.0};
  const double dt = 0.04;

  // kind: 0 rec, 1 conj, 2 lat1, 3 total
  auto tape_grad = [&](int kind) {
    ad::Tape tape;
    const auto bm = train::bind(model, tape);
    train::LossParts parts;
    if (kind == 0 || kind == 3) parts.rec = train::loss_rec(bm.encoder, bm.decoder, xt);
    if (kind == 1 || kind == 3) {
      parts.conj = train::loss_conj(bm.encoder, bm.decoder, bm.latent, xt, tape);
    }
    if (kind == 2 || kind == 3) parts.lat1 = train::loss_lat1(bm.encoder, bm.latent, xt, nt, dt);
    const ad::Tensor root = kind == 0   ? *parts.rec
                            : kind == 1 ? *parts.conj
                            : kind == 2 ? *parts.lat1
                                        : train::total_loss(w, parts);
    const auto g = tape.backward(root);
    std::vector<double> out;
    for (const auto* net : {&bm.encoder, &bm.decoder, &bm.latent}) {
      for (const auto& l : *net) {
        for (const ad::Tensor* t : {&l.weight, &l.bias}) {
          for (float v : g.at(*t->node_id()).values()) out.push_back(v);
        }
      }
    }
    return out;
  };
  auto reference = [&](const nn::Model& m, int kind) {
    const CircleMaps maps = nn::circle_maps(m);
    const double r = train::reference_loss_rec(maps, x);
    const double c = train::reference_loss_conj(maps, x);
    const double l = train::reference_loss_lat1(maps, x, x_next, dt);
    switch (kind) {
      case 0: return r;
      case 1: return c;
      case 2: return l;
      default: return w.rec * r + w.conj * c + w.lat1 * l;
    }
  };
  auto fd_grad = [&](int kind) {
    const auto params = train::flatten(model);
    std::vector<double> out;
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p].size(); ++i) {
        auto moved = [&](double step) {
          std::vector<ad::Tensor> ps = params;
          std::vector<float> v(ps[p].values().begin(), ps[p].values().end());
          v[i] = static_cast<float>(double(v[i]) + step);
          const float at = v[i];
          ps[p] = ad::Tensor(ps[p].shape(), std::move(v));
          nn::Model m = model;
          train::assign(m, ps);
          return std::pair{reference(m, kind), double(at)};
        };
        const auto [up, xu] = moved(h);
        const auto [dn, xd] = moved(-h);
        out.push_back((up - dn) / (xu - xd));
      }
    }
    return out;
  };
  LossGradErrors e;
  e.rec = rel_error(tape_grad(0), fd_grad(0));
  e.conj = rel_error(tape_grad(1), fd_grad(1));
  e.lat1 = rel_error(tape_grad(2), fd_grad(2));
  e.total = rel_error(tape_grad(3), fd_grad(3));
  return e;
}

}  // namespace testing
