#include "latentdyn/training/trainer.hpp"

#include <algorithm>
#include <limits>

#include "latentdyn/errors.hpp"

namespace latentdyn::train {
namespace {

constexpr double not_evaluated = std::numeric_limits<double>::quiet_NaN();

void collect(const std::vector<nn::Layer>& layers, std::vector<ad::Tensor>& out) {
  for (const nn::Layer& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
}

struct StepResult {
  double rec = not_evaluated;
  double conj = not_evaluated;
  double lat1 = not_evaluated;
  double total = 0.0;
};

StepResult train_step(nn::Model& model, OptimState& state, const Phase& phase,
                      const AdamWConfig& opt, const data::TrajectoryDataset& ds,
                      const data::Batch* rec_batch, const data::Batch* conj_batch,
                      const data::Batch* pair_batch) {
  ad::Tape tape;
  const BoundModel bound = bind(model, tape);
  LossParts parts;
  StepResult r;
  if (rec_batch != nullptr) {
    parts.rec = loss_rec(bound.encoder, bound.decoder,
                         data::gather_points(ds, *rec_batch));
    r.rec = parts.rec->item();
  }
  if (conj_batch != nullptr) {
    parts.conj = loss_conj(bound.encoder, bound.decoder, bound.latent,
                           data::gather_points(ds, *conj_batch), tape);
    r.conj = parts.conj->item();
  }
  if (pair_batch != nullptr) {
    const auto pairs = data::gather_pairs(ds, *pair_batch);
    parts.lat1 = loss_lat1(bound.encoder, bound.latent, pairs.current,
                           pairs.next, ds.meta.dt);
    r.lat1 = parts.lat1->item();
  }
  const ad::Tensor total = total_loss(phase.weights, parts);
  r.total = total.item();

  std::vector<ad::Tensor> bound_flat;
  collect(bound.encoder, bound_flat);
  collect(bound.decoder, bound_flat);
  collect(bound.latent, bound_flat);

  std::vector<ad::Tensor> grads;
  grads.reserve(bound_flat.size());
  if (total.tracked()) {
    const ad::GradientMap g = tape.backward(total);
    for (const ad::Tensor& p : bound_flat) grads.push_back(g.at(*p.node_id()));
  } else {
    for (const ad::Tensor& p : bound_flat) grads.push_back(ad::Tensor::zeros(p.shape()));
  }

  std::vector<ad::Tensor> params = flatten(model);
  adamw_step(params, grads, state, phase.lr, opt);
  assign(model, params);
  return r;
}

}  // namespace

PhaseSchedule default_schedule() {
  return {
      {500, {15.0, 0.0, 0.0}, 2e-3},
      {250, {10.0, 0.5, 0.2}, 1.5e-3},
      {250, {7.0, 1.0, 0.5}, 1e-3},
      {250, {5.0, 2.0, 0.8}, 1e-3},
  };
}

std::vector<ad::Tensor> flatten(const nn::Model& model) {
  std::vector<ad::Tensor> out;
  collect(model.encoder.layers, out);
  collect(model.decoder.layers, out);
  collect(model.latent.layers, out);
  return out;
}

void assign(nn::Model& model, std::span<const ad::Tensor> params) {
  std::size_t k = 0;
  for (nn::MlpParams* net : {&model.encoder, &model.decoder, &model.latent}) {
    for (nn::Layer& l : net->layers) {
      if (k + 2 > params.size()) throw ValidationError("assign: too few tensors");
      l.weight = params[k++].detached();
      l.bias = params[k++].detached();
    }
  }
  if (k != params.size()) throw ValidationError("assign: too many tensors");
}

TrainResult train(const TrainConfig& config, const data::TrajectoryDataset& ds,
                  nn::Model initial, const TrainCallbacks& callbacks) {
  initial.validate();
  if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  for (const Phase& p : config.schedule) {
    const LossWeights& w = p.weights;
    if (w.rec < 0 || w.conj < 0 || w.lat1 < 0) {
      throw ValidationError("loss weights must be >= 0");
    }
    if (!(p.lr > 0.0)) throw ValidationError("learning rates must be > 0");
  }
  if (ds.meta.steps < 2) {
    for (const Phase& p : config.schedule) {
      if (p.weights.lat1 > 0 && p.epochs > 0) {
        throw ValidationError("one-step loss needs T >= 2");
      }
    }
  }

  Rng shuffle = make_rng(config.seed, "shuffle");
  TrainResult result;
  nn::Model model = std::move(initial);

  auto emit = [&](Snapshot s) {
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(s);
    result.checkpoints.push_back(std::move(s));
  };

  for (std::size_t pi = 0; pi < config.schedule.size(); ++pi) {
    const Phase& phase = config.schedule[pi];
    OptimState state = make_optim_state(flatten(model));
    const bool use_rec = phase.weights.rec > 0;
    const bool use_conj = phase.weights.conj > 0;
    const bool use_lat1 = phase.weights.lat1 > 0;

    for (std::size_t epoch = 1; epoch <= phase.epochs; ++epoch) {
      std::vector<data::Batch> rec, conj, pairs;
      if (use_rec) rec = data::minibatches(ds, config.batch_size, data::Stream::points, shuffle);
      if (use_conj) conj = data::minibatches(ds, config.batch_size, data::Stream::points, shuffle);
      if (use_lat1) pairs = data::minibatches(ds, config.batch_size, data::Stream::pairs, shuffle);
      const std::size_t steps =
          std::max({rec.size(), conj.size(), pairs.size(), std::size_t{1}});

      EpochLog row{pi + 1, epoch, 0.0, 0.0, 0.0, 0.0};
      for (std::size_t s = 0; s < steps; ++s) {
        auto pick = [s](const std::vector<data::Batch>& b) {
          return b.empty() ? nullptr : &b[s % b.size()];
        };
        StepResult r;
        try {
          r = train_step(model, state, phase, config.optimizer, ds, pick(rec),
                         pick(conj), pick(pairs));
        } catch (const NumericalError& e) {
          emit({"last_good", pi + 1, epoch, model});
          throw NumericalError("phase " + std::to_string(pi + 1) + ", epoch " +
                               std::to_string(epoch) + ": " + e.what());
        }
        row.rec += r.rec;
        row.conj += r.conj;
        row.lat1 += r.lat1;
        row.total += r.total;
      }
      row.rec /= double(steps);
      row.conj /= double(steps);
      row.lat1 /= double(steps);
      row.total /= double(steps);
      if (callbacks.on_epoch) callbacks.on_epoch(row);
      result.log.push_back(row);
    }
    emit({"phase" + std::to_string(pi + 1), pi + 1, phase.epochs, model});
  }
  const std::size_t last_phase = config.schedule.size();
  const std::size_t last_epoch =
      config.schedule.empty() ? 0 : config.schedule.back().epochs;
  emit({"final", last_phase, last_epoch, model});
  return result;
}

}  // namespace latentdyn::train
