#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "latentdyn/data/dataset.hpp"
#include "latentdyn/eval/evaluation.hpp"
#include "latentdyn/nn/model.hpp"
#include "latentdyn/theory/report.hpp"
#include "latentdyn/training/trainer.hpp"

namespace latentdyn::app {

struct DataConfig {
  std::size_t trajectories = 512;
  std::size_t steps = 96;
  double dt = 0.04;
};

struct EvalConfig {
  std::size_t grid = 720;
  double refine_tol = 1e-7;
  double lp_p = 2.0;
};

struct TheoryRunConfig {
  double horizon = 10.0;
  std::size_t substeps = 1000;
  std::size_t iterations = 50;
};

/// Every field has a default; a JSON config only lists what it changes.
struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  nn::ModelSpecs nets;
  train::PhaseSchedule schedule = train::default_schedule();
  std::size_t batch_size = 4096;
  train::AdamWConfig optimizer;
  EvalConfig eval;
  TheoryRunConfig theory;

  /// Counts >= 1, dt > 0, weights >= 0, rates > 0, nets shaped for the
  /// circle example.
  void validate() const;

  train::TrainConfig train_config() const;
  eval::EvalOptions eval_options() const;
  theory::TheoryConfig theory_config() const;
};

/// Strict: unknown keys and wrong types are errors (ParseError), values
/// are then validated (ValidationError).
RunConfig parse_config(const std::string& json_text, const std::string& origin = "config");

/// A missing file raises MissingFileError naming the path.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the fully resolved config.
std::string to_json(const RunConfig& config);

/// Hex FNV-1a 64 digest of the canonical JSON.
std::string config_digest(const RunConfig& config);

/// Seed precedence: explicit flag, then LATENTDYN_SEED, then the config.
void apply_seed_override(RunConfig& config, std::optional<std::uint64_t> flag);

}  // namespace latentdyn::app
