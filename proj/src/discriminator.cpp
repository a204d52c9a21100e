#include "ace/discriminator.hpp"

#include <cmath>
#include <string>

#include "ace/rng.hpp"

namespace ace {

namespace F = torch::nn::functional;

namespace {

torch::Tensor unit(const torch::Tensor& v) {
  return F::normalize(v, F::NormalizeFuncOptions().dim(0).eps(kSpectralEpsilon));
}

}  // namespace

SpectralState init_spectral_state(int64_t rows, at::Generator& rng) {
  auto u = torch::empty({rows}).normal_(0.0, 1.0, rng);
  return {unit(u)};
}

SpectralResult spectral_normalize(const torch::Tensor& weight, const SpectralState& state) {
  auto mat = weight.reshape({weight.size(0), -1});
  torch::Tensor u;
  torch::Tensor v;
  {
    torch::NoGradGuard no_grad;
    auto fixed = mat.detach();
    v = unit(torch::mv(fixed.t(), state.u));
    auto wv = torch::mv(fixed, v);
    // a zero matrix has no direction to refine toward; keep the old estimate
    u = wv.norm().item<double>() > kSpectralEpsilon ? unit(wv) : state.u.clone();
  }
  auto sigma = torch::dot(u, torch::mv(mat, v)).clamp_min(kSpectralEpsilon);
  return {weight / sigma, sigma, {u}};
}

SpectralConv2dImpl::SpectralConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride,
                                       int64_t padding, at::Generator& rng)
    : stride_(stride), padding_(padding) {
  // same bounds as the default Conv2d initializer
  const double fan_in = static_cast<double>(in * kernel * kernel);
  const double bound = 1.0 / std::sqrt(fan_in);
  weight = register_parameter("weight", torch::empty({out, in, kernel, kernel}).uniform_(-bound, bound, rng));
  bias = register_parameter("bias", torch::empty({out}).uniform_(-bound, bound, rng));
  u_ = register_buffer("u", init_spectral_state(out, rng).u);
}

torch::Tensor SpectralConv2dImpl::forward(const torch::Tensor& x, bool update_state) {
  auto result = spectral_normalize(weight, {u_});
  if (update_state) {
    torch::NoGradGuard no_grad;
    u_.copy_(result.state.u);
  }
  return torch::conv2d(x, result.weight, bias, {stride_, stride_}, {padding_, padding_});
}

torch::Tensor SpectralConv2dImpl::normalized_weight() const {
  return spectral_normalize(weight, {u_}).weight;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(uint64_t seed, int64_t base_channels) {
  auto rng = make_rng(seed);
  const int64_t widths[] = {3, base_channels, base_channels * 2, base_channels * 4};
  for (int i = 0; i < 3; ++i) {
    layers_.push_back(register_module("conv" + std::to_string(i),
                                      SpectralConv2d(widths[i], widths[i + 1], 4, 2, 1, rng)));
  }
  layers_.push_back(register_module("head", SpectralConv2d(widths[3], 1, 3, 1, 1, rng)));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x, bool update_state) {
  auto h = x;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = F::leaky_relu(layers_[i]->forward(h, update_state), F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return layers_.back()->forward(h, update_state);
}

}  // namespace ace
