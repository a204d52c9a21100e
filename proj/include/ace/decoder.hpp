#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace ace {

/// Lower bound applied to per-channel instance standard deviations.
inline constexpr double kAdaInEpsilon = 1e-5;

/// Per-sample, per-channel population mean over spatial positions: [B, C].
torch::Tensor instance_mean(const torch::Tensor& z);
/// Per-sample, per-channel population std over spatial positions, floored at
/// kAdaInEpsilon: [B, C].
torch::Tensor instance_std(const torch::Tensor& z);

/// gamma * (z - mu(z)) / sigma(z) + beta on a [B, C, H, W] map.
///
/// `gamma` and `beta` are either [C] (shared by the batch) or [B, C].
torch::Tensor adain(const torch::Tensor& z, const torch::Tensor& gamma, const torch::Tensor& beta);

struct AdaInLayerParams {
  torch::Tensor gamma;  // [B, C]
  torch::Tensor beta;   // [B, C]
};

/// One entry per AdaIN layer of the decoder, in forward order.
using AdaInParams = std::vector<AdaInLayerParams>;

/// Maps a style code to the AdaIN parameters of every decoder layer.
/// Shared trunk, one linear head per layer.
class StyleMlpImpl : public torch::nn::Module {
 public:
  StyleMlpImpl(int64_t style_dim, std::vector<int64_t> layer_channels, int64_t hidden = 256);

  AdaInParams forward(const torch::Tensor& style);

  const std::vector<int64_t>& layer_channels() const { return layer_channels_; }

 private:
  std::vector<int64_t> layer_channels_;
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
  std::vector<torch::nn::Linear> heads_;
};
TORCH_MODULE(StyleMlp);

/// conv-AdaIN-ReLU-conv-AdaIN with an identity skip; the inner activation
/// has `hidden` channels (default channels / 2).
class AdaInResidualBlockImpl : public torch::nn::Module {
 public:
  explicit AdaInResidualBlockImpl(int64_t channels, int64_t hidden = 0);

  int64_t hidden() const { return hidden_; }

  torch::Tensor forward(const torch::Tensor& x, const AdaInLayerParams& first,
                        const AdaInLayerParams& second);

 private:
  int64_t hidden_;
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(AdaInResidualBlock);

/// AdaIN residual blocks followed by two nearest-neighbour 2x upsampling
/// stages and a tanh output convolution. No batch or instance norm layers.
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(int64_t content_channels = 128, int64_t num_blocks = 4);

  torch::Tensor forward(const torch::Tensor& content, const AdaInParams& params);

  /// Channel count of each AdaIN layer, in the order forward() consumes them.
  std::vector<int64_t> adain_layer_channels() const;

 private:
  int64_t content_channels_;
  std::vector<AdaInResidualBlock> blocks_;
  torch::nn::Conv2d up1_{nullptr};
  torch::nn::Conv2d up2_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(Decoder);

}  // namespace ace
