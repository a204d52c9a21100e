#include "ace/decoder.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace ace {

namespace nn = torch::nn;

namespace {

torch::Tensor as_channel_view(const torch::Tensor& p, const torch::Tensor& z, const char* what) {
  const auto channels = z.size(1);
  if (p.dim() == 1 && p.size(0) == channels) return p.view({1, channels, 1, 1});
  if (p.dim() == 2 && (p.size(0) == z.size(0) || p.size(0) == 1) && p.size(1) == channels) {
    return p.view({p.size(0), channels, 1, 1});
  }
  throw std::invalid_argument(std::string("adain: ") + what + " shape does not match " +
                              std::to_string(channels) + " channels");
}

}  // namespace

torch::Tensor instance_mean(const torch::Tensor& z) { return z.mean({2, 3}); }

torch::Tensor instance_std(const torch::Tensor& z) {
  auto centered = z - z.mean({2, 3}, /*keepdim=*/true);
  return centered.square().mean({2, 3}).clamp_min(kAdaInEpsilon * kAdaInEpsilon).sqrt();
}

torch::Tensor adain(const torch::Tensor& z, const torch::Tensor& gamma, const torch::Tensor& beta) {
  if (z.dim() != 4) throw std::invalid_argument("adain expects a [B, C, H, W] tensor");
  auto g = as_channel_view(gamma, z, "gamma");
  auto b = as_channel_view(beta, z, "beta");
  auto mu = z.mean({2, 3}, /*keepdim=*/true);
  auto centered = z - mu;
  auto sigma =
      centered.square().mean({2, 3}, /*keepdim=*/true).clamp_min(kAdaInEpsilon * kAdaInEpsilon).sqrt();
  return g * (centered / sigma) + b;
}

StyleMlpImpl::StyleMlpImpl(int64_t style_dim, std::vector<int64_t> layer_channels, int64_t hidden)
    : layer_channels_(std::move(layer_channels)) {
  fc1_ = register_module("fc1", nn::Linear(style_dim, hidden));
  fc2_ = register_module("fc2", nn::Linear(hidden, hidden));
  for (size_t i = 0; i < layer_channels_.size(); ++i) {
    auto head = register_module("head" + std::to_string(i), nn::Linear(hidden, 2 * layer_channels_[i]));
    // gamma half starts at 1 so the untrained decoder sees unit-scale activations
    torch::NoGradGuard no_grad;
    head->bias.zero_();
    head->bias.narrow(0, 0, layer_channels_[i]).fill_(1.0);
    heads_.push_back(head);
  }
}

AdaInParams StyleMlpImpl::forward(const torch::Tensor& style) {
  auto s = style.dim() == 1 ? style.unsqueeze(0) : style;
  auto h = torch::relu(fc1_->forward(s));
  h = torch::relu(fc2_->forward(h));
  AdaInParams params;
  params.reserve(heads_.size());
  for (size_t i = 0; i < heads_.size(); ++i) {
    auto out = heads_[i]->forward(h);
    const auto c = layer_channels_[i];
    params.push_back({out.narrow(1, 0, c), out.narrow(1, c, c)});
  }
  return params;
}

AdaInResidualBlockImpl::AdaInResidualBlockImpl(int64_t channels, int64_t hidden)
    : hidden_(hidden > 0 ? hidden : std::max<int64_t>(1, channels / 2)) {
  conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(channels, hidden_, 3).padding(1)));
  conv2_ = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(hidden_, channels, 3).padding(1)));
}

torch::Tensor AdaInResidualBlockImpl::forward(const torch::Tensor& x, const AdaInLayerParams& first,
                                              const AdaInLayerParams& second) {
  auto h = torch::relu(adain(conv1_->forward(x), first.gamma, first.beta));
  h = adain(conv2_->forward(h), second.gamma, second.beta);
  return x + h;
}

DecoderImpl::DecoderImpl(int64_t content_channels, int64_t num_blocks)
    : content_channels_(content_channels) {
  for (int64_t i = 0; i < num_blocks; ++i) {
    blocks_.push_back(
        register_module("block" + std::to_string(i), AdaInResidualBlock(content_channels)));
  }
  const auto mid = content_channels / 2;
  const auto low = content_channels / 4;
  up1_ = register_module("up1", nn::Conv2d(nn::Conv2dOptions(content_channels, mid, 3).padding(1)));
  up2_ = register_module("up2", nn::Conv2d(nn::Conv2dOptions(mid, low, 3).padding(1)));
  out_ = register_module("out", nn::Conv2d(nn::Conv2dOptions(low, 3, 7).padding(3)));
}

std::vector<int64_t> DecoderImpl::adain_layer_channels() const {
  std::vector<int64_t> channels;
  for (const auto& block : blocks_) {
    channels.push_back(block->hidden());
    channels.push_back(content_channels_);
  }
  return channels;
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& content, const AdaInParams& params) {
  if (params.size() != 2 * blocks_.size()) {
    throw std::invalid_argument("decoder expects " + std::to_string(2 * blocks_.size()) +
                                " AdaIN layers, got " + std::to_string(params.size()));
  }
  if (content.dim() != 4 || content.size(1) != content_channels_) {
    throw std::invalid_argument("decoder expects " + std::to_string(content_channels_) +
                                " content channels");
  }
  auto h = content;
  for (size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i]->forward(h, params[2 * i], params[2 * i + 1]);
  }
  const auto up = torch::nn::functional::InterpolateFuncOptions()
                      .scale_factor(std::vector<double>{2.0, 2.0})
                      .mode(torch::kNearest);
  h = torch::relu(up1_->forward(torch::nn::functional::interpolate(h, up)));
  h = torch::relu(up2_->forward(torch::nn::functional::interpolate(h, up)));
  return torch::tanh(out_->forward(h));
}

}  // namespace ace
