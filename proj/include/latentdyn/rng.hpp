#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace latentdyn {

using Rng = std::mt19937_64;

/// Sub-seed for one purpose ("data", "init-E", "shuffle", ...) derived from
/// the run's master seed. Distinct labels give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

}  // namespace latentdyn
