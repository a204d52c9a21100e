#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "ace/model.hpp"

namespace ace {

// All functions here run the model in evaluation mode without autograd and
// restore the previous training flag afterwards. Images may be [3, H, W] or
// batched [B, 3, H, W]; outputs keep the input's rank.

/// Zero-shot translation: content of `x_content`, style of `x_style`.
/// Output resolution follows `x_content`.
torch::Tensor translate(AceGeneratorImpl& model, const torch::Tensor& x_content, const torch::Tensor& x_style);

/// The training-time reconstruction path G(sg(E_c(x)), E_s(x)).
torch::Tensor reconstruct(AceGeneratorImpl& model, const torch::Tensor& x);

/// Mean L1 between `images` [N, 3, H, W] and their reconstructions.
double mean_reconstruction_l1(AceGeneratorImpl& model, const torch::Tensor& images, int64_t batch_size = 8);

/// Decoder-facing content codes of `images`, [N, C, h, w].
torch::Tensor content_codes(AceGeneratorImpl& model, const torch::Tensor& images, int64_t batch_size = 8);

enum class ChannelPolicy { kMaxVariance };

/// Index of the channel of `code` [C, h, w] picked by `policy`. Channels
/// with zero spatial variance are never picked unless every channel is flat.
int64_t select_content_channel(const torch::Tensor& code, ChannelPolicy policy = ChannelPolicy::kMaxVariance);

struct Heatmap {
  torch::Tensor map;      // [H, W] in [0, 1]
  torch::Tensor overlay;  // [3, H, W] in [-1, 1]
  int64_t channel = 0;
};

/// Min-max normalizes one content channel, upsamples it bilinearly to
/// the input size H x W and alpha-blends a colour ramp of it over `x` at 0.5.
Heatmap heatmap_from_code(const torch::Tensor& code, const torch::Tensor& x,
                          ChannelPolicy policy = ChannelPolicy::kMaxVariance);

Heatmap visualize_content(AceGeneratorImpl& model, const torch::Tensor& x,
                          ChannelPolicy policy = ChannelPolicy::kMaxVariance);

/// Mean of l2-normalized content codes' per-channel std across the batch and
/// spatial positions. Near zero means the codes collapsed to a constant.
double content_code_spread(const torch::Tensor& codes);

}  // namespace ace
