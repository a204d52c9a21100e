#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

namespace ace {

struct SyntheticDomains {
  std::filesystem::path domain_a;
  std::filesystem::path domain_b;
  /// Mean RGB of everything written to each domain, in [-1, 1] units.
  std::array<double, 3> mean_rgb_a{};
  std::array<double, 3> mean_rgb_b{};
};

inline constexpr int kSyntheticResolution = 64;

/// Writes `n_per_domain` 64x64 PNGs to out_dir/domain_a and out_dir/domain_b.
///
/// Both domains draw shape geometry (type, position, size, count) from the
/// same distribution; they differ only in palette and background texture.
/// Output is a pure function of (n_per_domain, seed).
SyntheticDomains generate_synthetic_domains(const std::filesystem::path& out_dir, int n_per_domain,
                                            uint64_t seed);

}  // namespace ace
