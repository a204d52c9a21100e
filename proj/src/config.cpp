#include "ace/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "ace/encoders.hpp"

namespace ace {

using nlohmann::json;

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kPretrain ? "pretrain" : "finetune";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "pretrain") return TrainMode::kPretrain;
  if (text == "finetune") return TrainMode::kFinetune;
  throw std::invalid_argument("unknown training mode '" + text + "'");
}

void TrainConfig::validate() const {
  if (resolution <= 0 || resolution % kEncoderStride != 0) {
    throw std::invalid_argument("resolution must be a positive multiple of " +
                                std::to_string(kEncoderStride));
  }
  if (resolution % 8 != 0) {
    throw std::invalid_argument("resolution must be a multiple of 8 for the patch discriminator");
  }
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  loss.validate();
}

void RunConfig::validate() const {
  train.validate();
  if (train.data.empty()) throw std::invalid_argument("a data directory is required");
  if (mode == TrainMode::kFinetune) {
    if (train.data_style.empty()) throw std::invalid_argument("fine-tuning needs a style-domain directory");
    if (init_checkpoint.empty() && resume_checkpoint.empty()) {
      throw std::invalid_argument("fine-tuning needs a pretrained checkpoint");
    }
  }
}

json to_json(const TrainConfig& c) {
  return json{
      {"resolution", c.resolution},
      {"batch_size", c.batch_size},
      {"steps", c.steps},
      {"lr_generator", c.lr_generator},
      {"lr_discriminator", c.lr_discriminator},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"seed", c.seed},
      {"checkpoint_interval", c.checkpoint_interval},
      {"data", c.data.string()},
      {"data_style", c.data_style.string()},
      {"loss",
       {{"contrast", c.loss.contrast},
        {"content_consist", c.loss.content_consist},
        {"style_consist", c.loss.style_consist},
        {"recon", c.loss.recon},
        {"gan", c.loss.gan}}},
      {"augmentation", {{"mode", to_string(c.augmentation)}}},
      {"finetune", {{"carry_discriminator", c.carry_discriminator}}},
  };
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& scope) {
  if (!obj.is_object()) throw std::invalid_argument("config: '" + scope + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument("config: unknown key '" + scope + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& scope = "") {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + scope + key + "': " + e.what());
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out) {
  std::string s = out.string();
  read(obj, key, s);
  out = s;
}

}  // namespace

TrainConfig train_config_from_json(const json& doc, TrainConfig c) {
  reject_unknown(doc,
                 {"resolution", "batch_size", "steps", "lr_generator", "lr_discriminator", "adam_beta1",
                  "adam_beta2", "seed", "checkpoint_interval", "data", "data_style", "loss",
                  "augmentation", "finetune"},
                 "");
  read(doc, "resolution", c.resolution);
  read(doc, "batch_size", c.batch_size);
  read(doc, "steps", c.steps);
  read(doc, "lr_generator", c.lr_generator);
  read(doc, "lr_discriminator", c.lr_discriminator);
  read(doc, "adam_beta1", c.adam_beta1);
  read(doc, "adam_beta2", c.adam_beta2);
  read(doc, "seed", c.seed);
  read(doc, "checkpoint_interval", c.checkpoint_interval);
  read_path(doc, "data", c.data);
  read_path(doc, "data_style", c.data_style);
  if (doc.contains("loss")) {
    const auto& l = doc.at("loss");
    reject_unknown(l, {"contrast", "content_consist", "style_consist", "recon", "gan"}, "loss.");
    read(l, "contrast", c.loss.contrast, "loss.");
    read(l, "content_consist", c.loss.content_consist, "loss.");
    read(l, "style_consist", c.loss.style_consist, "loss.");
    read(l, "recon", c.loss.recon, "loss.");
    read(l, "gan", c.loss.gan, "loss.");
  }
  if (doc.contains("augmentation")) {
    const auto& a = doc.at("augmentation");
    reject_unknown(a, {"mode"}, "augmentation.");
    std::string mode = to_string(c.augmentation);
    read(a, "mode", mode, "augmentation.");
    c.augmentation = parse_augmentation_mode(mode);
  }
  if (doc.contains("finetune")) {
    const auto& f = doc.at("finetune");
    reject_unknown(f, {"carry_discriminator"}, "finetune.");
    read(f, "carry_discriminator", c.carry_discriminator, "finetune.");
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return train_config_from_json(doc, std::move(base));
}

}  // namespace ace
