#include "hfcov/rng.hpp"

namespace hfcov {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repetition, StreamPurpose purpose, std::uint64_t asset) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ repetition);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ asset);
  return h;
}

}  // namespace hfcov
