#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace ace {

/// Total downsampling factor of the shared feature encoder.
inline constexpr int64_t kEncoderStride = 4;

/// How a content-side forward treats its parameters.
///
/// `kTrack` is the ordinary autograd path. `kFrozen` detaches every weight and
/// normalizes with the running statistics, so the pass is a fixed function of
/// its input: gradients still reach the input tensor, never the parameters,
/// and no running statistic is touched.
enum class Grad { kTrack, kFrozen };

/// Throws std::invalid_argument unless `x` is a [B, 3, H, W] batch whose
/// spatial sides are multiples of kEncoderStride.
void check_image_batch(const torch::Tensor& x);

/// Shared convolutional trunk: three conv blocks, two of them stride 2.
class FeatureEncoderImpl : public torch::nn::Module {
 public:
  explicit FeatureEncoderImpl(int64_t feature_channels = 128);

  torch::Tensor forward(const torch::Tensor& x);

  int64_t channels() const { return channels_; }

 private:
  int64_t channels_;
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
  torch::nn::Conv2d conv3_{nullptr};
};
TORCH_MODULE(FeatureEncoder);

/// conv-BN-ReLU-conv-BN with an identity skip. Stride 1 throughout; the
/// inner activation has `hidden` channels (default channels / 2).
class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int64_t channels, int64_t hidden = 0);

  torch::Tensor forward(const torch::Tensor& x, Grad grad = Grad::kTrack);

 private:
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr};
  torch::nn::BatchNorm2d bn2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// Residual stack producing the raw (pre-predictor) content code.
class ContentEncoderImpl : public torch::nn::Module {
 public:
  ContentEncoderImpl(int64_t feature_channels = 128, int64_t content_channels = 128,
                     int64_t num_blocks = 4);

  torch::Tensor forward(const torch::Tensor& z, Grad grad = Grad::kTrack);

  int64_t channels() const { return content_channels_; }

 private:
  int64_t feature_channels_;
  int64_t content_channels_;
  torch::nn::Conv2d project_{nullptr};  // only when feature and content widths differ
  std::vector<ResidualBlock> blocks_;
};
TORCH_MODULE(ContentEncoder);

/// Bottleneck MLP applied independently at every spatial location
/// (two 1x1 convolutions). BatchNorm on the hidden layer only.
class PredictorImpl : public torch::nn::Module {
 public:
  explicit PredictorImpl(int64_t content_channels = 128);

  torch::Tensor forward(const torch::Tensor& c, Grad grad = Grad::kTrack);

  int64_t hidden_channels() const { return hidden_; }

 private:
  int64_t hidden_;
  torch::nn::Conv2d fc1_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
  torch::nn::Conv2d fc2_{nullptr};
};
TORCH_MODULE(Predictor);

/// One conv layer, global average pooling, one fully connected layer.
class StyleEncoderImpl : public torch::nn::Module {
 public:
  StyleEncoderImpl(int64_t feature_channels = 128, int64_t style_dim = 8,
                   int64_t hidden_channels = 64);

  torch::Tensor forward(const torch::Tensor& z);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(StyleEncoder);

/// Learnable style vector shared by every sample of the pretraining domain.
class DomainStyleCodeImpl : public torch::nn::Module {
 public:
  explicit DomainStyleCodeImpl(int64_t style_dim = 8);

  const torch::Tensor& code() const { return code_; }

 private:
  torch::Tensor code_;
};
TORCH_MODULE(DomainStyleCode);

/// Elementwise sum of per-sample style codes [B, S] (or [S]) and the domain
/// code [S]. Throws std::invalid_argument on a dimension mismatch.
torch::Tensor combine_style(const torch::Tensor& individual, const torch::Tensor& domain);

}  // namespace ace
