#include "ace/losses.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ace {

namespace F = torch::nn::functional;

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    std::ostringstream msg;
    msg << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw std::invalid_argument(msg.str());
  }
}

void check_weight(double w, const char* name) {
  if (!std::isfinite(w) || w < 0.0) {
    throw std::invalid_argument(std::string("loss weight '") + name + "' must be finite and >= 0");
  }
}

}  // namespace

void LossWeights::validate() const {
  check_weight(contrast, "contrast");
  check_weight(content_consist, "content_consist");
  check_weight(style_consist, "style_consist");
  check_weight(recon, "recon");
  check_weight(gan, "gan");
}

torch::Tensor negative_cosine(const torch::Tensor& prediction, const torch::Tensor& target) {
  require_same_shape(prediction, target, "negative_cosine");
  const auto opts = F::NormalizeFuncOptions().dim(1).eps(kCosineEpsilon);
  auto p = F::normalize(prediction, opts);
  auto t = F::normalize(target.detach(), opts);
  return -(p * t).sum(1).mean();
}

torch::Tensor contrastive_loss(const torch::Tensor& p1, const torch::Tensor& p2,
                               const torch::Tensor& c1, const torch::Tensor& c2) {
  require_same_shape(c1, c2, "contrastive_loss");
  return 0.5 * negative_cosine(p1, c2) + 0.5 * negative_cosine(p2, c1);
}

torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "l1_distance");
  return (a - b).abs().mean();
}

torch::Tensor gan_loss_discriminator(const torch::Tensor& score_real, const torch::Tensor& score_fake) {
  return (score_real - 1.0).square().mean() + score_fake.square().mean();
}

torch::Tensor gan_loss_generator(const torch::Tensor& score_fake) {
  return (score_fake - 1.0).square().mean();
}

torch::Tensor total_loss(const LossTerms& terms, const LossWeights& weights) {
  auto total = torch::zeros({});
  auto add = [&total](const torch::Tensor& term, double w) {
    if (term.defined() && w != 0.0) total = total + w * term;
  };
  add(terms.contrast, weights.contrast);
  add(terms.content_consist, weights.content_consist);
  add(terms.style_consist, weights.style_consist);
  add(terms.recon, weights.recon);
  add(terms.gan, weights.gan);
  return total;
}

}  // namespace ace
