#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latentdyn/data/dataset.hpp"
#include "latentdyn/nn/model.hpp"
#include "latentdyn/training/adamw.hpp"
#include "latentdyn/training/losses.hpp"

namespace latentdyn::train {

struct Phase {
  std::size_t epochs = 0;
  LossWeights weights;
  double lr = 1e-3;

  friend bool operator==(const Phase&, const Phase&) = default;
};

using PhaseSchedule = std::vector<Phase>;

/// Reconstruction-only pretraining, then three phases that shift weight
/// towards the conjugacy and one-step losses.
PhaseSchedule default_schedule();

struct TrainConfig {
  PhaseSchedule schedule = default_schedule();
  std::size_t batch_size = 4096;
  AdamWConfig optimizer;
  std::uint64_t seed = 0;  // shuffle stream is derived from it
};

/// Per-epoch means over the epoch's steps. A part whose weight is zero in
/// the phase is not evaluated and is logged as NaN.
struct EpochLog {
  std::size_t phase = 0;  // 1-based
  std::size_t epoch = 0;  // 1-based within the phase
  double rec = 0.0;
  double conj = 0.0;
  double lat1 = 0.0;
  double total = 0.0;
};

struct Snapshot {
  std::string label;  // "phase<k>", "final" or "last_good"
  std::size_t phase = 0;
  std::size_t epoch = 0;
  nn::Model model;
};

struct TrainCallbacks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const Snapshot&)> on_checkpoint;
};

struct TrainResult {
  std::vector<Snapshot> checkpoints;
  std::vector<EpochLog> log;

  const nn::Model& final_model() const { return checkpoints.back().model; }
};

/// Flat parameter list: encoder, decoder, latent; weight then bias per layer.
std::vector<ad::Tensor> flatten(const nn::Model& model);
void assign(nn::Model& model, std::span<const ad::Tensor> params);

/// Runs the schedule phase by phase. Optimizer moments are reset at every
/// phase boundary. Each epoch takes one shuffled pass over the point stream
/// for reconstruction, an independent pass for conjugacy and a pass over
/// iterate pairs for the one-step loss; step s uses batch s of each stream
/// (wrapping the shorter streams).
///
/// On a NumericalError the parameters from before the failing step are
/// emitted as a "last_good" checkpoint and the error is rethrown.
TrainResult train(const TrainConfig& config, const data::TrajectoryDataset& ds,
                  nn::Model initial, const TrainCallbacks& callbacks = {});

}  // namespace latentdyn::train
