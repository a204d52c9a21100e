#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ace/augmentation.hpp"
#include "ace/losses.hpp"

namespace ace {

enum class TrainMode { kPretrain, kFinetune };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  int64_t resolution = 64;
  int64_t batch_size = 8;
  int64_t steps = 1000;
  double lr_generator = 1e-4;
  double lr_discriminator = 4e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  LossWeights loss;
  AugmentationMode augmentation = AugmentationMode::kLatent;
  uint64_t seed = 0;
  /// Steps between intermediate checkpoints; 0 keeps only the final one.
  int64_t checkpoint_interval = 500;
  /// Fine-tuning starts from the pretrained discriminator instead of a fresh one.
  bool carry_discriminator = false;
  std::filesystem::path data;
  std::filesystem::path data_style;

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

struct RunConfig {
  TrainConfig train;
  TrainMode mode = TrainMode::kPretrain;
  std::filesystem::path out_dir = "runs/ace";
  /// Weights to start a fine-tuning run from.
  std::filesystem::path init_checkpoint;
  /// Continue an interrupted run of the same mode.
  std::filesystem::path resume_checkpoint;

  void validate() const;
};

/// Serialized form of TrainConfig. Stored in every checkpoint manifest.
nlohmann::json to_json(const TrainConfig& config);

/// Parses a config document on top of `base`. Absent keys keep the base
/// value; unknown keys and ill-typed values throw std::invalid_argument.
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig base = {});

/// Reads a JSON file and parses it as above.
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace ace
