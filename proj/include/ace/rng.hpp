#pragma once

#include <cstdint>

#include <ATen/CPUGeneratorImpl.h>
#include <ATen/core/Generator.h>

namespace ace {

/// Seeded CPU generator; every random draw in the library goes through one of these.
inline at::Generator make_rng(uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

/// SplitMix64 finalizer over (seed, stream). Used to give each training step,
/// epoch and loader worker its own reproducible stream.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ace
