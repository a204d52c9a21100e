#pragma once

#include <torch/torch.h>

namespace ace {

inline constexpr double kCosineEpsilon = 1e-8;

/// Relative weights of the training objectives. All must be finite and >= 0.
struct LossWeights {
  double contrast = 1.0;
  double content_consist = 1.0;
  double style_consist = 1.0;
  double recon = 10.0;
  double gan = 1.0;

  /// Throws std::invalid_argument naming the offending weight.
  void validate() const;
};

/// Scalar loss tensors of one generator update. An undefined tensor marks a
/// term that is not part of the objective (e.g. contrast during fine-tuning).
struct LossTerms {
  torch::Tensor contrast;
  torch::Tensor content_consist;
  torch::Tensor style_consist;
  torch::Tensor recon;
  torch::Tensor gan;
};

/// Negative cosine similarity between `prediction` and `target` along the
/// channel axis, averaged over every sample and spatial location. The target
/// is detached. Accepts [B, C, H, W] or [B, C].
torch::Tensor negative_cosine(const torch::Tensor& prediction, const torch::Tensor& target);

/// Symmetrized SimSiam objective on raw content codes c1, c2 and their
/// predictor outputs p1, p2:  0.5 D(p1, sg(c2)) + 0.5 D(p2, sg(c1)).
torch::Tensor contrastive_loss(const torch::Tensor& p1, const torch::Tensor& p2,
                               const torch::Tensor& c1, const torch::Tensor& c2);

/// Mean absolute difference. Shape mismatch throws std::invalid_argument.
torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b);

inline torch::Tensor content_consistency(const torch::Tensor& original, const torch::Tensor& recon) {
  return l1_distance(original, recon);
}
inline torch::Tensor style_consistency(const torch::Tensor& original, const torch::Tensor& recon) {
  return l1_distance(original, recon);
}
inline torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_recon) {
  return l1_distance(x, x_recon);
}

/// Least-squares discriminator loss: mean((D(x) - 1)^2) + mean(D(x')^2).
torch::Tensor gan_loss_discriminator(const torch::Tensor& score_real, const torch::Tensor& score_fake);

/// Least-squares generator loss: mean((D(x') - 1)^2).
torch::Tensor gan_loss_generator(const torch::Tensor& score_fake);

/// Weighted sum of the defined terms.
torch::Tensor total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace ace
