#include "ace/encoders.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ace {

namespace nn = torch::nn;

namespace {

nn::Conv2dOptions conv_options(int64_t in, int64_t out, int64_t kernel, int64_t stride,
                               int64_t padding) {
  return nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding);
}

torch::Tensor maybe_detach(const torch::Tensor& t) {
  return t.defined() ? t.detach() : t;
}

torch::Tensor apply_conv(nn::Conv2d& conv, const torch::Tensor& x, Grad grad) {
  if (grad == Grad::kTrack) return conv->forward(x);
  const auto& opts = conv->options;
  const auto& padding = std::get<torch::ExpandingArray<2>>(opts.padding());
  return torch::conv2d(x, conv->weight.detach(), maybe_detach(conv->bias), *opts.stride(),
                       *padding, *opts.dilation(), opts.groups());
}

torch::Tensor apply_bn(nn::BatchNorm2d& bn, const torch::Tensor& x, Grad grad) {
  if (grad == Grad::kTrack) return bn->forward(x);
  const auto& opts = bn->options;
  return torch::batch_norm(x, maybe_detach(bn->weight), maybe_detach(bn->bias),
                           bn->running_mean, bn->running_var, /*training=*/false,
                           opts.momentum().value_or(0.1), opts.eps(), /*cudnn_enabled=*/false);
}

}  // namespace

void check_image_batch(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw std::invalid_argument("expected an image batch of shape [B, 3, H, W], got " +
                                std::to_string(x.dim()) + "-d tensor");
  }
  if (x.size(2) % kEncoderStride != 0 || x.size(3) % kEncoderStride != 0) {
    throw std::invalid_argument("image side " + std::to_string(x.size(2)) + "x" +
                                std::to_string(x.size(3)) + " is not a multiple of " +
                                std::to_string(kEncoderStride));
  }
}

FeatureEncoderImpl::FeatureEncoderImpl(int64_t feature_channels) : channels_(feature_channels) {
  conv1_ = register_module("conv1", nn::Conv2d(conv_options(3, 32, 7, 1, 3)));
  conv2_ = register_module("conv2", nn::Conv2d(conv_options(32, 64, 4, 2, 1)));
  conv3_ = register_module("conv3", nn::Conv2d(conv_options(64, feature_channels, 4, 2, 1)));
}

torch::Tensor FeatureEncoderImpl::forward(const torch::Tensor& x) {
  check_image_batch(x);
  auto h = torch::relu(conv1_->forward(x));
  h = torch::relu(conv2_->forward(h));
  return torch::relu(conv3_->forward(h));
}

ResidualBlockImpl::ResidualBlockImpl(int64_t channels, int64_t hidden) {
  if (hidden <= 0) hidden = std::max<int64_t>(1, channels / 2);
  conv1_ = register_module("conv1", nn::Conv2d(conv_options(channels, hidden, 3, 1, 1)));
  bn1_ = register_module("bn1", nn::BatchNorm2d(hidden));
  conv2_ = register_module("conv2", nn::Conv2d(conv_options(hidden, channels, 3, 1, 1)));
  bn2_ = register_module("bn2", nn::BatchNorm2d(channels));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x, Grad grad) {
  auto h = torch::relu(apply_bn(bn1_, apply_conv(conv1_, x, grad), grad));
  h = apply_bn(bn2_, apply_conv(conv2_, h, grad), grad);
  return x + h;
}

ContentEncoderImpl::ContentEncoderImpl(int64_t feature_channels, int64_t content_channels,
                                       int64_t num_blocks)
    : feature_channels_(feature_channels), content_channels_(content_channels) {
  if (feature_channels != content_channels) {
    project_ = register_module(
        "project", nn::Conv2d(conv_options(feature_channels, content_channels, 1, 1, 0)));
  }
  for (int64_t i = 0; i < num_blocks; ++i) {
    blocks_.push_back(
        register_module("block" + std::to_string(i), ResidualBlock(content_channels)));
  }
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& z, Grad grad) {
  if (z.dim() != 4 || z.size(1) != feature_channels_) {
    throw std::invalid_argument("content encoder expects " + std::to_string(feature_channels_) +
                                " feature channels");
  }
  auto h = project_ ? apply_conv(project_, z, grad) : z;
  for (auto& block : blocks_) h = block->forward(h, grad);
  return h;
}

PredictorImpl::PredictorImpl(int64_t content_channels) : hidden_(content_channels / 4) {
  if (hidden_ < 1) throw std::invalid_argument("predictor needs at least 4 content channels");
  fc1_ = register_module("fc1", nn::Conv2d(conv_options(content_channels, hidden_, 1, 1, 0)));
  bn_ = register_module("bn", nn::BatchNorm2d(hidden_));
  fc2_ = register_module("fc2", nn::Conv2d(conv_options(hidden_, content_channels, 1, 1, 0)));
}

torch::Tensor PredictorImpl::forward(const torch::Tensor& c, Grad grad) {
  auto h = torch::relu(apply_bn(bn_, apply_conv(fc1_, c, grad), grad));
  return apply_conv(fc2_, h, grad);
}

StyleEncoderImpl::StyleEncoderImpl(int64_t feature_channels, int64_t style_dim,
                                   int64_t hidden_channels) {
  conv_ = register_module("conv", nn::Conv2d(conv_options(feature_channels, hidden_channels, 3, 1, 1)));
  fc_ = register_module("fc", nn::Linear(hidden_channels, style_dim));
}

torch::Tensor StyleEncoderImpl::forward(const torch::Tensor& z) {
  auto h = torch::relu(conv_->forward(z));
  h = torch::adaptive_avg_pool2d(h, {1, 1}).flatten(1);
  return fc_->forward(h);
}

DomainStyleCodeImpl::DomainStyleCodeImpl(int64_t style_dim) {
  code_ = register_parameter("code", torch::zeros({style_dim}));
}

torch::Tensor combine_style(const torch::Tensor& individual, const torch::Tensor& domain) {
  if (domain.dim() != 1 || individual.dim() < 1 || individual.size(-1) != domain.size(0)) {
    throw std::invalid_argument("style code dimension mismatch: " +
                                std::to_string(individual.size(-1)) + " vs " +
                                std::to_string(domain.numel()));
  }
  return individual + domain;
}

}  // namespace ace
