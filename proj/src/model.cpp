#include "ace/model.hpp"

namespace ace {

AceGeneratorImpl::AceGeneratorImpl(const ModelDims& dims) : dims_(dims) {
  encoder = register_module("encoder", FeatureEncoder(dims.feature_channels));
  content = register_module(
      "content", ContentEncoder(dims.feature_channels, dims.content_channels, dims.content_blocks));
  predictor = register_module("predictor", Predictor(dims.content_channels));
  style = register_module("style", StyleEncoder(dims.feature_channels, dims.style_dim, dims.style_hidden));
  domain = register_module("domain", DomainStyleCode(dims.style_dim));
  decoder = register_module("decoder", Decoder(dims.content_channels, dims.decoder_blocks));
  mlp = register_module("mlp", StyleMlp(dims.style_dim, decoder->adain_layer_channels(), dims.mlp_hidden));
}

torch::Tensor AceGeneratorImpl::content_code(const torch::Tensor& z, Grad grad) {
  return predictor->forward(content->forward(z, grad), grad);
}

torch::Tensor AceGeneratorImpl::style_code(const torch::Tensor& z) {
  return combine_style(style->forward(z), domain->code());
}

torch::Tensor AceGeneratorImpl::decode(const torch::Tensor& content_code, const torch::Tensor& style_code) {
  return decoder->forward(content_code, mlp->forward(style_code));
}

torch::Tensor AceGeneratorImpl::translate(const torch::Tensor& x_content, const torch::Tensor& x_style) {
  auto c = content_code(encoder->forward(x_content), Grad::kFrozen);
  auto s = style_code(encoder->forward(x_style));
  return decode(c, s);
}

torch::Tensor AceGeneratorImpl::reconstruct(const torch::Tensor& x) {
  auto z = encoder->forward(x);
  return decode(content_code(z, Grad::kFrozen).detach(), style_code(z));
}

std::vector<torch::Tensor> AceGeneratorImpl::contrastive_parameters() {
  auto params = content->parameters();
  for (auto& p : predictor->parameters()) params.push_back(p);
  return params;
}

}  // namespace ace
