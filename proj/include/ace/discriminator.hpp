#pragma once

#include <cstdint>
#include <vector>

#include <ATen/core/Generator.h>
#include <torch/torch.h>

namespace ace {

inline constexpr double kSpectralEpsilon = 1e-12;

/// Running estimate of the leading left singular vector of a weight matrix.
struct SpectralState {
  torch::Tensor u;  // [rows], unit norm
};

/// Random unit vector of length `rows`.
SpectralState init_spectral_state(int64_t rows, at::Generator& rng);

struct SpectralResult {
  torch::Tensor weight;  // W / sigma, same shape as the input
  torch::Tensor sigma;   // scalar estimate, differentiable w.r.t. W
  SpectralState state;   // updated u
};

/// One power-iteration step followed by normalization:
///   v = W^T u / |W^T u|,  u' = W v / |W v|,  sigma = u'^T W v,  W_sn = W / sigma.
/// Kernels of rank > 2 are flattened to [out, rest]. u and v carry no gradient;
/// sigma is guarded below by kSpectralEpsilon.
SpectralResult spectral_normalize(const torch::Tensor& weight, const SpectralState& state);

/// Conv2d whose kernel is spectrally normalized on every forward pass.
class SpectralConv2dImpl : public torch::nn::Module {
 public:
  SpectralConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding,
                     at::Generator& rng);

  /// With `update_state` the refined u is persisted; otherwise the pass is
  /// read-only with respect to the module state.
  torch::Tensor forward(const torch::Tensor& x, bool update_state);

  torch::Tensor normalized_weight() const;

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  int64_t stride_;
  int64_t padding_;
  torch::Tensor u_;
};
TORCH_MODULE(SpectralConv2d);

/// Patch scorer: three stride-2 convolutions and a stride-1 head, leaky ReLU
/// 0.2, every layer spectrally normalized. Outputs unbounded [B, 1, H/8, W/8].
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(uint64_t seed, int64_t base_channels = 64);

  torch::Tensor forward(const torch::Tensor& x, bool update_state = false);

  const std::vector<SpectralConv2d>& layers() const { return layers_; }

 private:
  std::vector<SpectralConv2d> layers_;
};
TORCH_MODULE(PatchDiscriminator);

}  // namespace ace
