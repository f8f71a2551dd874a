#pragma once

#include <cstdint>
#include <random>

namespace hfcov {

// Independent draw families within one repetition.
enum class StreamPurpose : std::uint64_t {
  kappa_driver = 1,  // W0 of the correlation factor
  price = 2,         // B, shared by prices, W_kappa and the leverage terms
  vol_u1 = 3,
  vol_u2 = 4,
  noise = 5,
  desync = 6,
  permutation = 7,
  random_matrix = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed derived from (master seed, repetition, purpose, asset). Distinct
/// coordinates give unrelated streams, so any evaluation order reproduces
/// the same draws.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repetition, StreamPurpose purpose, std::uint64_t asset);

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t repetition, StreamPurpose purpose,
                                   std::uint64_t asset = 0) {
  return std::mt19937_64(derive_seed(master, repetition, purpose, asset));
}

}  // namespace hfcov
