#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <ATen/core/Generator.h>
#include <torch/torch.h>

#include "ace/rng.hpp"

namespace ace {

class AceGeneratorImpl;

enum class AugmentationMode { kLatent, kImage };

std::string to_string(AugmentationMode mode);
/// Throws std::invalid_argument for anything other than "latent" / "image".
AugmentationMode parse_augmentation_mode(std::string_view text);

/// Standard-normal AdaIN parameters for one augmentation draw.
struct NoiseDraw {
  torch::Tensor gamma;  // [batch, channels]
  torch::Tensor beta;   // [batch, channels]
};

/// Draws gamma then beta, each [batch, channels] ~ N(0, 1), advancing `rng`.
NoiseDraw sample_noise(int64_t channels, at::Generator& rng, int64_t batch = 1);

/// Adaptive instance augmentation on a feature map: adain(z, gamma, beta)
/// with a fresh per-sample, per-channel draw.
torch::Tensor augment_latent(const torch::Tensor& z, at::Generator& rng);

/// Image-space variant: decode the content code of `x` with randomized
/// AdaIN parameters for every decoder layer. Runs without autograd.
torch::Tensor augment_image(const torch::Tensor& x, AceGeneratorImpl& model, at::Generator& rng);

}  // namespace ace
