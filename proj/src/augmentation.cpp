#include "ace/augmentation.hpp"

#include <stdexcept>

#include "ace/decoder.hpp"
#include "ace/model.hpp"

namespace ace {

std::string to_string(AugmentationMode mode) {
  return mode == AugmentationMode::kLatent ? "latent" : "image";
}

AugmentationMode parse_augmentation_mode(std::string_view text) {
  if (text == "latent") return AugmentationMode::kLatent;
  if (text == "image") return AugmentationMode::kImage;
  throw std::invalid_argument("augmentation mode must be 'latent' or 'image', got '" +
                              std::string(text) + "'");
}

NoiseDraw sample_noise(int64_t channels, at::Generator& rng, int64_t batch) {
  if (channels < 1 || batch < 1) throw std::invalid_argument("sample_noise needs channels >= 1");
  auto gamma = torch::empty({batch, channels}).normal_(0.0, 1.0, rng);
  auto beta = torch::empty({batch, channels}).normal_(0.0, 1.0, rng);
  return {gamma, beta};
}

torch::Tensor augment_latent(const torch::Tensor& z, at::Generator& rng) {
  auto draw = sample_noise(z.size(1), rng, z.size(0));
  return adain(z, draw.gamma, draw.beta);
}

torch::Tensor augment_image(const torch::Tensor& x, AceGeneratorImpl& model, at::Generator& rng) {
  torch::NoGradGuard no_grad;
  auto c = model.content_code(model.encoder->forward(x), Grad::kFrozen);
  AdaInParams params;
  for (auto channels : model.decoder->adain_layer_channels()) {
    auto draw = sample_noise(channels, rng, x.size(0));
    params.push_back({draw.gamma, draw.beta});
  }
  return model.decoder->forward(c, params);
}

}  // namespace ace
