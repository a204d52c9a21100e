#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "ace/decoder.hpp"
#include "ace/encoders.hpp"

namespace ace {

struct ModelDims {
  int64_t feature_channels = 128;
  int64_t content_channels = 128;
  int64_t style_dim = 8;
  int64_t content_blocks = 4;
  int64_t decoder_blocks = 4;
  int64_t style_hidden = 64;
  int64_t mlp_hidden = 256;
};

/// Everything on the generator side of the adversarial game: shared
/// encoder, content encoder and predictor, style encoder, domain style code,
/// style MLP and AdaIN decoder.
class AceGeneratorImpl : public torch::nn::Module {
 public:
  explicit AceGeneratorImpl(const ModelDims& dims = {});

  /// Decoder-facing content code: predictor(content_encoder(z)).
  torch::Tensor content_code(const torch::Tensor& z, Grad grad = Grad::kTrack);

  /// Individual style code plus the domain style code.
  torch::Tensor style_code(const torch::Tensor& z);

  torch::Tensor decode(const torch::Tensor& content, const torch::Tensor& style);

  /// decode(content_code(E(x_content)), style_code(E(x_style))).
  torch::Tensor translate(const torch::Tensor& x_content, const torch::Tensor& x_style);

  /// The reconstruction path used in training: shares one feature pass for
  /// both branches, with the content branch frozen.
  torch::Tensor reconstruct(const torch::Tensor& x);

  /// Content encoder and predictor parameters; trained only by the contrastive term.
  std::vector<torch::Tensor> contrastive_parameters();

  const ModelDims& dims() const { return dims_; }

  FeatureEncoder encoder{nullptr};
  ContentEncoder content{nullptr};
  Predictor predictor{nullptr};
  StyleEncoder style{nullptr};
  DomainStyleCode domain{nullptr};
  StyleMlp mlp{nullptr};
  Decoder decoder{nullptr};

 private:
  ModelDims dims_;
};
TORCH_MODULE(AceGenerator);

}  // namespace ace
