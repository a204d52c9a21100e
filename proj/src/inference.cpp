#include "ace/inference.hpp"

#include <stdexcept>
#include <vector>

#include "ace/encoders.hpp"
#include "ace/losses.hpp"

namespace ace {

namespace F = torch::nn::functional;

namespace {

class EvalScope {
 public:
  explicit EvalScope(torch::nn::Module& module) : module_(module), was_training_(module.is_training()) {
    module_.eval();
  }
  ~EvalScope() { module_.train(was_training_); }
  EvalScope(const EvalScope&) = delete;
  EvalScope& operator=(const EvalScope&) = delete;

 private:
  torch::nn::Module& module_;
  bool was_training_;
  torch::NoGradGuard no_grad_;
};

torch::Tensor batched(const torch::Tensor& x) { return x.dim() == 3 ? x.unsqueeze(0) : x; }

}  // namespace

torch::Tensor translate(AceGeneratorImpl& model, const torch::Tensor& x_content, const torch::Tensor& x_style) {
  EvalScope scope(model);
  auto out = model.translate(batched(x_content), batched(x_style));
  return x_content.dim() == 3 ? out.squeeze(0) : out;
}

torch::Tensor reconstruct(AceGeneratorImpl& model, const torch::Tensor& x) {
  EvalScope scope(model);
  auto out = model.reconstruct(batched(x));
  return x.dim() == 3 ? out.squeeze(0) : out;
}

double mean_reconstruction_l1(AceGeneratorImpl& model, const torch::Tensor& images, int64_t batch_size) {
  EvalScope scope(model);
  double total = 0.0;
  const int64_t n = images.size(0);
  for (int64_t i = 0; i < n; i += batch_size) {
    auto chunk = images.narrow(0, i, std::min(batch_size, n - i));
    total += (model.reconstruct(chunk) - chunk).abs().sum().item<double>();
  }
  return total / static_cast<double>(images.numel());
}

torch::Tensor content_codes(AceGeneratorImpl& model, const torch::Tensor& images, int64_t batch_size) {
  EvalScope scope(model);
  std::vector<torch::Tensor> parts;
  const int64_t n = images.size(0);
  for (int64_t i = 0; i < n; i += batch_size) {
    auto chunk = images.narrow(0, i, std::min(batch_size, n - i));
    parts.push_back(model.content_code(model.encoder->forward(chunk), Grad::kFrozen));
  }
  return torch::cat(parts);
}

int64_t select_content_channel(const torch::Tensor& code, ChannelPolicy policy) {
  if (code.dim() != 3) throw std::invalid_argument("select_content_channel expects [C, h, w]");
  switch (policy) {
    case ChannelPolicy::kMaxVariance: {
      auto flat = code.flatten(1);
      auto var = (flat - flat.mean(1, /*keepdim=*/true)).square().mean(1);
      return var.argmax().item<int64_t>();
    }
  }
  throw std::invalid_argument("unknown channel policy");
}

Heatmap heatmap_from_code(const torch::Tensor& code, const torch::Tensor& x, ChannelPolicy policy) {
  if (x.dim() != 3 || x.size(0) != 3) throw std::invalid_argument("heatmap_from_code expects a [3, H, W] image");
  Heatmap out;
  out.channel = select_content_channel(code, policy);
  auto channel = code[out.channel].to(torch::kFloat);
  const auto lo = channel.min();
  const auto range = channel.max() - lo;
  auto unit = range.item<double>() > 0.0 ? (channel - lo) / range : torch::zeros_like(channel);
  auto up = F::interpolate(unit.view({1, 1, unit.size(0), unit.size(1)}),
                           F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{x.size(1), x.size(2)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
  out.map = up.view({x.size(1), x.size(2)}).clamp(0.0, 1.0);
  // jet-like ramp, blue (0) -> red (1), mapped to image units
  auto ramp = [&](double centre) { return (1.5 - (4.0 * out.map - centre).abs()).clamp(0.0, 1.0); };
  auto colour = torch::stack({ramp(3.0), ramp(2.0), ramp(1.0)}) * 2.0 - 1.0;
  out.overlay = 0.5 * x + 0.5 * colour;
  return out;
}

Heatmap visualize_content(AceGeneratorImpl& model, const torch::Tensor& x, ChannelPolicy policy) {
  torch::Tensor code;
  {
    EvalScope scope(model);
    code = model.content_code(model.encoder->forward(batched(x)), Grad::kFrozen)[0];
  }
  return heatmap_from_code(code, x.dim() == 4 ? x[0] : x, policy);
}

double content_code_spread(const torch::Tensor& codes) {
  auto unit = F::normalize(codes, F::NormalizeFuncOptions().dim(1).eps(kCosineEpsilon));
  auto rows = unit.permute({0, 2, 3, 1}).reshape({-1, codes.size(1)});
  auto var = (rows - rows.mean(0, /*keepdim=*/true)).square().mean(0);
  return var.sqrt().mean().item<double>();
}

}  // namespace ace
