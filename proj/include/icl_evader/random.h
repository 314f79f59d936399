#ifndef ICL_EVADER_RANDOM_H_
#define ICL_EVADER_RANDOM_H_

// Portable, seed-reproducible randomness.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions and std::shuffle do not, so every bounded draw in the library
// goes through the helpers below. Outputs are identical across compilers and
// standard libraries for a given seed.

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "icl_evader/error.h"

namespace icl_evader {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection sampling on the raw 64-bit output.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  if (n == 0) throw InvalidArgument("UniformIndex: empty range");
  // 2^64 mod n; draws below it would bias the low residues.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// Fisher-Yates, iterating from the back.
template <typename T>
void Shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(UniformIndex(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

// k distinct indices from [0, n) in draw order (partial Fisher-Yates from the
// front).
inline std::vector<std::size_t> SampleWithoutReplacement(Rng& rng,
                                                         std::size_t n,
                                                         std::size_t k) {
  if (k > n) {
    throw PoolExhausted("cannot draw " + std::to_string(k) +
                        " distinct items from a pool of " + std::to_string(n));
  }
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(UniformIndex(rng, n - i));
    std::swap(index[i], index[j]);
  }
  index.resize(k);
  return index;
}

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable child seed for (parent, stream). Used for per-sample and per-cell
// seeds so scheduling order never perturbs randomness.
inline std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t stream) {
  return SplitMix64(SplitMix64(parent) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// FNV-1a, for deriving seeds from textual stream names.
inline std::uint64_t HashName(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view name) {
  return DeriveSeed(parent, HashName(name));
}

}  // namespace icl_evader

#endif  // ICL_EVADER_RANDOM_H_
