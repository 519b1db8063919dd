#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace gspplan {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) { return Rng(derive_seed(base, stream)); }

// Uniform double in [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// Inverse-CDF draw from an unnormalized-free probability vector: returns the
// first index i with u < cumsum[0..i]. Falls back to the last index with
// positive mass when rounding leaves u above the total.
int sample_discrete(std::span<const double> probs, Rng& rng);

std::string rng_state_string(const Rng& rng);
Rng rng_from_state_string(const std::string& s);

}  // namespace gspplan
