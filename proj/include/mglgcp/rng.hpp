#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mglgcp {

// All randomness derives from one 64-bit seed. A stream is identified by a
// label (hashed with FNV-1a) and an index, and mixed through splitmix64.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

}  // namespace mglgcp
