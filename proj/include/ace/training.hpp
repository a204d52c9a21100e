#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <ATen/core/Generator.h>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ace/checkpoint.hpp"
#include "ace/config.hpp"
#include "ace/discriminator.hpp"
#include "ace/losses.hpp"
#include "ace/model.hpp"

namespace ace {

/// Losses of one training step. Terms that are not part of the current
/// protocol (contrast and reconstruction while fine-tuning) are empty.
struct StepMetrics {
  int64_t step = 0;
  double loss_total = 0.0;
  std::optional<double> loss_recon;
  std::optional<double> loss_contrast;
  double loss_ccons = 0.0;
  double loss_scons = 0.0;
  double loss_gan_g = 0.0;
  double loss_gan_d = 0.0;

  /// One metrics-log record. Absent terms are omitted.
  nlohmann::json to_json() const;
  static StepMetrics from_json(const nlohmann::json& record);
  /// Names of the generator-side objective terms that were active.
  std::vector<std::string> active_terms() const;
};

/// Raised before any parameter update when a loss term is NaN or infinite.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::string term, double value);
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// Models, optimizers and step counter of a run. Owned by one training thread.
struct TrainingState {
  TrainingState(const TrainConfig& config, TrainMode mode, const ModelDims& dims = {});

  /// Fresh discriminator and discriminator optimizer.
  void reset_discriminator(uint64_t seed);

  TrainConfig config;
  TrainMode mode;
  ModelDims dims;
  AceGenerator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
  std::unique_ptr<torch::optim::Adam> generator_optimizer;
  std::unique_ptr<torch::optim::Adam> discriminator_optimizer;
  /// Number of completed steps.
  int64_t step = 0;
};

/// Generator-side forward pass of one step.
struct GeneratorPass {
  LossTerms terms;
  torch::Tensor real;  // what the discriminator treats as real
  torch::Tensor fake;  // generated images, attached to the generator graph
};

/// Pretraining forward: shared features, two augmented views through the
/// content encoder for the contrastive term, and the stop-gradient
/// reconstruction x' = G(sg(c), s) with its consistency terms. The GAN term
/// is left empty; it is filled in after the discriminator update.
GeneratorPass pretrain_forward(const torch::Tensor& batch, TrainingState& state, at::Generator& rng);

/// Fine-tuning forward: x12 = G(sg(c(x1)), s(x2)) with content and style
/// consistency only. Target-domain images are the discriminator's reals.
GeneratorPass finetune_forward(const torch::Tensor& content_batch, const torch::Tensor& style_batch,
                               TrainingState& state);

/// One least-squares discriminator step on (real, fake.detach()). Returns the loss.
double discriminator_update(TrainingState& state, const torch::Tensor& real, const torch::Tensor& fake);

/// Least-squares generator term against the current discriminator; gradients
/// reach the generator only.
torch::Tensor generator_adversarial_term(TrainingState& state, const torch::Tensor& fake);

/// Backpropagates the weighted objective and steps the generator optimizer.
/// Returns the total.
double generator_update(TrainingState& state, const LossTerms& terms);

StepMetrics pretrain_step(const torch::Tensor& batch, TrainingState& state, at::Generator& rng);
StepMetrics finetune_step(const torch::Tensor& content_batch, const torch::Tensor& style_batch,
                          TrainingState& state, at::Generator& rng);

/// Sum of squared gradient entries over `params`; undefined grads count as zero.
double squared_grad_norm(const std::vector<torch::Tensor>& params);

/// Every tensor, optimizer moment and the run metadata.
CheckpointData capture_state(const TrainingState& state);

/// Rebuilds a state from a checkpoint (weights, optimizer state, step).
TrainingState restore_state(const CheckpointData& data);

/// New fine-tuning state initialized from pretrained weights; the
/// discriminator is fresh unless config.carry_discriminator is set.
TrainingState finetune_state_from(const CheckpointData& pretrained, const TrainConfig& config);

/// Only the generator weights, for inference.
AceGenerator load_generator(const std::filesystem::path& checkpoint);

struct TrainingResult {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_log;
  std::vector<StepMetrics> metrics;  // steps run by this call
};

using StepCallback = std::function<void(const StepMetrics&)>;

/// Runs steps (state.step, config.steps], appending one JSON line per step
/// to out_dir/metrics.jsonl and writing out_dir/step_<n>.ace every
/// checkpoint_interval steps plus out_dir/final.ace at the end.
TrainingResult run_training(const RunConfig& config, const StepCallback& on_step = {});

}  // namespace ace
