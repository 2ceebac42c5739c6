#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "latentdyn/nn/model.hpp"

namespace latentdyn::app {

inline constexpr int checkpoint_format_version = 1;

struct CheckpointMeta {
  int format_version = checkpoint_format_version;
  std::uint64_t seed = 0;
  std::size_t phase = 0;
  std::size_t epoch = 0;
  std::string config_digest;
  std::string label;  // "phase<k>", "final", "last_good" or "init"
};

struct Checkpoint {
  CheckpointMeta meta;
  nn::Model model;
};

/// JSON; each weight is written as the shortest decimal that reads back to
/// the same float32 (at most 9 significant digits).
std::string checkpoint_json(const Checkpoint& c);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);

/// Malformed numbers raise ParseError naming the net and layer. With
/// `expected` given, net dims must match it exactly.
Checkpoint parse_checkpoint(const std::string& text,
                            const std::optional<nn::ModelSpecs>& expected = {});
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<nn::ModelSpecs>& expected = {});

}  // namespace latentdyn::app
