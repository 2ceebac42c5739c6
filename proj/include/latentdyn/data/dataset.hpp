#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "latentdyn/autodiff/tensor.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn::data {

inline constexpr int dataset_format_version = 1;

struct DatasetMeta {
  std::size_t trajectories = 512;  // N
  std::size_t steps = 96;          // T, states per trajectory
  double dt = 0.04;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// Euler trajectories of d(theta)/dt = sin(2 theta) and their embedding in
/// the plane. Row-major [N x T] angles and [N x T x 2] points, float32.
struct TrajectoryDataset {
  DatasetMeta meta;
  std::vector<float> thetas;
  std::vector<float> points;

  std::size_t point_count() const { return meta.trajectories * meta.steps; }
  std::size_t pair_count() const {
    return meta.trajectories * (meta.steps - 1);
  }
  float theta(std::size_t i, std::size_t t) const {
    return thetas[i * meta.steps + t];
  }
  /// Flat point indices of (x_t, x_{t+1}) for iterate pair k.
  std::pair<std::size_t, std::size_t> pair_indices(std::size_t k) const;

  /// Shape and unit-norm invariants; throws ValidationError naming the row.
  void validate() const;

  friend bool operator==(const TrajectoryDataset&,
                         const TrajectoryDataset&) = default;
};

struct LabeledPoint {
  char tag;
  double theta;
};

/// A..H = 0, pi/6, pi/5, pi/4, 3pi/4, pi, 5pi/4, 4pi/3.
const std::array<LabeledPoint, 8>& labeled_points();
double labeled_angle(char tag);

TrajectoryDataset generate(std::size_t trajectories, std::size_t steps,
                           double dt, std::uint64_t seed);
/// Trajectories from given float32 initial angles.
TrajectoryDataset generate_from(std::span<const float> initial_angles,
                                std::size_t steps, double dt,
                                std::uint64_t seed = 0);

/// CSV `traj,t,theta,x1,x2` plus a JSON sidecar next to it (same stem,
/// .json) holding {N, T, dt, seed, format_version}.
void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& csv);
TrajectoryDataset load_dataset(const std::filesystem::path& csv);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

enum class Stream { points, pairs };

using Batch = std::vector<std::size_t>;

/// One epoch: a shuffled pass over [0, stream_size) cut into batches, the
/// final short batch kept.
std::vector<Batch> minibatches(std::size_t stream_size, std::size_t batch_size,
                               Rng& rng);
std::vector<Batch> minibatches(const TrajectoryDataset& ds,
                               std::size_t batch_size, Stream stream, Rng& rng);

/// [B x 2] points for flat point indices.
ad::Tensor gather_points(const TrajectoryDataset& ds,
                         std::span<const std::size_t> indices);

struct PairBatch {
  ad::Tensor current;  // [B x 2]
  ad::Tensor next;     // [B x 2]
};
PairBatch gather_pairs(const TrajectoryDataset& ds,
                       std::span<const std::size_t> pair_ids);

}  // namespace latentdyn::data
