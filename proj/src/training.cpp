#include "ace/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ace/augmentation.hpp"
#include "ace/dataset.hpp"
#include "ace/rng.hpp"

namespace ace {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// stream ids for derive_seed
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kDiscriminatorStream = 2;
constexpr uint64_t kDataStream = 3;
constexpr uint64_t kStyleDataStream = 4;
constexpr uint64_t kStepSalt = 0x5EED57E9ULL;

double checked(const char* term, const torch::Tensor& value) {
  const double v = value.item<double>();
  if (!std::isfinite(v)) throw NonFiniteLossError(term, v);
  return v;
}

void check_terms(const LossTerms& t) {
  if (t.contrast.defined()) checked("loss_contrast", t.contrast);
  if (t.recon.defined()) checked("loss_recon", t.recon);
  if (t.content_consist.defined()) checked("loss_ccons", t.content_consist);
  if (t.style_consist.defined()) checked("loss_scons", t.style_consist);
  if (t.gan.defined()) checked("loss_gan_g", t.gan);
}

std::optional<double> value_of(const torch::Tensor& t) {
  if (!t.defined()) return std::nullopt;
  return t.item<double>();
}

/// Disables parameter gradients of a module for the lifetime of the guard.
class FreezeParameters {
 public:
  explicit FreezeParameters(torch::nn::Module& module) : params_(module.parameters()) {
    for (auto& p : params_) p.requires_grad_(false);
  }
  ~FreezeParameters() {
    for (auto& p : params_) p.requires_grad_(true);
  }
  FreezeParameters(const FreezeParameters&) = delete;
  FreezeParameters& operator=(const FreezeParameters&) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

json dims_to_json(const ModelDims& d) {
  return {{"feature_channels", d.feature_channels}, {"content_channels", d.content_channels},
          {"style_dim", d.style_dim},               {"content_blocks", d.content_blocks},
          {"decoder_blocks", d.decoder_blocks},     {"style_hidden", d.style_hidden},
          {"mlp_hidden", d.mlp_hidden}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.feature_channels = j.at("feature_channels").get<int64_t>();
  d.content_channels = j.at("content_channels").get<int64_t>();
  d.style_dim = j.at("style_dim").get<int64_t>();
  d.content_blocks = j.at("content_blocks").get<int64_t>();
  d.decoder_blocks = j.at("decoder_blocks").get<int64_t>();
  d.style_hidden = j.at("style_hidden").get<int64_t>();
  d.mlp_hidden = j.at("mlp_hidden").get<int64_t>();
  return d;
}

std::unique_ptr<torch::optim::Adam> make_adam(std::vector<torch::Tensor> params, double lr, const TrainConfig& c) {
  return std::make_unique<torch::optim::Adam>(
      std::move(params), torch::optim::AdamOptions(lr).betas(std::make_tuple(c.adam_beta1, c.adam_beta2)));
}

void capture_module(const torch::nn::Module& module, const std::string& prefix, CheckpointData& out) {
  for (const auto& item : module.named_parameters()) out.tensors.push_back({prefix + item.key(), item.value()});
  for (const auto& item : module.named_buffers()) out.tensors.push_back({prefix + item.key(), item.value()});
}

void capture_optimizer(const torch::nn::Module& module, torch::optim::Adam& opt, const std::string& prefix,
                       CheckpointData& out) {
  auto& states = opt.state();
  for (const auto& item : module.named_parameters()) {
    auto it = states.find(item.value().unsafeGetTensorImpl());
    if (it == states.end()) continue;
    const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
    out.tensors.push_back({prefix + item.key() + ".exp_avg", st.exp_avg()});
    out.tensors.push_back({prefix + item.key() + ".exp_avg_sq", st.exp_avg_sq()});
    out.tensors.push_back({prefix + item.key() + ".step", torch::tensor(st.step(), torch::kLong)});
  }
}

const torch::Tensor& require(const CheckpointData& data, const std::string& name, const torch::Tensor& like) {
  const auto* t = data.find(name);
  if (t == nullptr) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  if (t->sizes() != like.sizes() || t->scalar_type() != like.scalar_type()) {
    throw CheckpointError("checkpoint tensor '" + name + "' does not match the model layout");
  }
  return *t;
}

void restore_module(torch::nn::Module& module, const std::string& prefix, const CheckpointData& data) {
  torch::NoGradGuard no_grad;
  for (auto& item : module.named_parameters()) item.value().copy_(require(data, prefix + item.key(), item.value()));
  for (auto& item : module.named_buffers()) item.value().copy_(require(data, prefix + item.key(), item.value()));
}

void restore_optimizer(torch::nn::Module& module, torch::optim::Adam& opt, const std::string& prefix,
                       const CheckpointData& data) {
  auto& states = opt.state();
  states.clear();
  for (auto& item : module.named_parameters()) {
    const auto base = prefix + item.key();
    const auto* step = data.find(base + ".step");
    if (step == nullptr) continue;
    auto st = std::make_unique<torch::optim::AdamParamState>();
    st->step(step->item<int64_t>());
    st->exp_avg(require(data, base + ".exp_avg", item.value()).clone());
    st->exp_avg_sq(require(data, base + ".exp_avg_sq", item.value()).clone());
    states[item.value().unsafeGetTensorImpl()] = std::move(st);
  }
}

/// Fields whose change would make a resumed run diverge from an uninterrupted one.
json trajectory_fields(const TrainConfig& c) {
  auto j = to_json(c);
  for (const char* k : {"steps", "checkpoint_interval", "data", "data_style"}) j.erase(k);
  return j;
}

}  // namespace

NonFiniteLossError::NonFiniteLossError(std::string term, double value)
    : std::runtime_error("non-finite " + term + " (" + std::to_string(value) + "); step aborted"),
      term_(std::move(term)) {}

json StepMetrics::to_json() const {
  json j;
  j["step"] = step;
  j["loss_total"] = loss_total;
  if (loss_recon) j["loss_recon"] = *loss_recon;
  if (loss_contrast) j["loss_contrast"] = *loss_contrast;
  j["loss_ccons"] = loss_ccons;
  j["loss_scons"] = loss_scons;
  j["loss_gan_g"] = loss_gan_g;
  j["loss_gan_d"] = loss_gan_d;
  return j;
}

StepMetrics StepMetrics::from_json(const json& r) {
  StepMetrics m;
  m.step = r.at("step").get<int64_t>();
  m.loss_total = r.at("loss_total").get<double>();
  if (r.contains("loss_recon")) m.loss_recon = r.at("loss_recon").get<double>();
  if (r.contains("loss_contrast")) m.loss_contrast = r.at("loss_contrast").get<double>();
  m.loss_ccons = r.at("loss_ccons").get<double>();
  m.loss_scons = r.at("loss_scons").get<double>();
  m.loss_gan_g = r.at("loss_gan_g").get<double>();
  m.loss_gan_d = r.at("loss_gan_d").get<double>();
  return m;
}

std::vector<std::string> StepMetrics::active_terms() const {
  std::vector<std::string> out;
  if (loss_contrast) out.emplace_back("contrast");
  if (loss_recon) out.emplace_back("recon");
  out.emplace_back("ccons");
  out.emplace_back("scons");
  out.emplace_back("gan");
  return out;
}

TrainingState::TrainingState(const TrainConfig& cfg, TrainMode m, const ModelDims& d)
    : config(cfg), mode(m), dims(d) {
  config.validate();
  // default module initializers draw from the global generator
  torch::manual_seed(derive_seed(config.seed, kInitStream));
  generator = AceGenerator(dims);
  generator_optimizer = make_adam(generator->parameters(), config.lr_generator, config);
  reset_discriminator(derive_seed(config.seed, kDiscriminatorStream));
}

void TrainingState::reset_discriminator(uint64_t seed) {
  discriminator = PatchDiscriminator(seed);
  discriminator_optimizer = make_adam(discriminator->parameters(), config.lr_discriminator, config);
}

GeneratorPass pretrain_forward(const torch::Tensor& batch, TrainingState& state, at::Generator& rng) {
  check_image_batch(batch);
  if (batch.size(0) < 2) throw std::invalid_argument("pretraining needs a batch of at least 2 images");
  auto& g = *state.generator;
  g.train();

  GeneratorPass pass;
  pass.real = batch;
  auto z = g.encoder->forward(batch);

  // contrastive branch: two style-perturbed views of the same content
  torch::Tensor z1;
  torch::Tensor z2;
  if (state.config.augmentation == AugmentationMode::kLatent) {
    z1 = augment_latent(z, rng);
    z2 = augment_latent(z, rng);
  } else {
    z1 = g.encoder->forward(augment_image(batch, g, rng));
    z2 = g.encoder->forward(augment_image(batch, g, rng));
  }
  auto c1 = g.content->forward(z1);
  auto c2 = g.content->forward(z2);
  pass.terms.contrast = contrastive_loss(g.predictor->forward(c1), g.predictor->forward(c2), c1, c2);

  // autoencoder branch: x' = G(sg(c), s)
  torch::Tensor c;
  {
    torch::NoGradGuard no_grad;
    c = g.content_code(z, Grad::kFrozen);
  }
  auto s = g.style->forward(z);
  pass.fake = g.decode(c, combine_style(s, g.domain->code()));

  auto z_fake = g.encoder->forward(pass.fake);
  pass.terms.content_consist = content_consistency(c, g.content_code(z_fake, Grad::kFrozen));
  pass.terms.style_consist = style_consistency(s.detach(), g.style->forward(z_fake));
  pass.terms.recon = reconstruction_loss(batch, pass.fake);
  return pass;
}

GeneratorPass finetune_forward(const torch::Tensor& content_batch, const torch::Tensor& style_batch,
                               TrainingState& state) {
  check_image_batch(content_batch);
  check_image_batch(style_batch);
  if (content_batch.size(0) != style_batch.size(0)) {
    throw std::invalid_argument("content and style batches must have the same size");
  }
  auto& g = *state.generator;
  g.train();

  GeneratorPass pass;
  pass.real = style_batch;
  torch::Tensor c;
  {
    torch::NoGradGuard no_grad;
    c = g.content_code(g.encoder->forward(content_batch), Grad::kFrozen);
  }
  auto s = g.style->forward(g.encoder->forward(style_batch));
  pass.fake = g.decode(c, combine_style(s, g.domain->code()));

  auto z_fake = g.encoder->forward(pass.fake);
  pass.terms.content_consist = content_consistency(c, g.content_code(z_fake, Grad::kFrozen));
  pass.terms.style_consist = style_consistency(s.detach(), g.style->forward(z_fake));
  return pass;
}

double discriminator_update(TrainingState& state, const torch::Tensor& real, const torch::Tensor& fake) {
  auto& d = *state.discriminator;
  d.train();
  const auto n = real.size(0);
  auto scores = d.forward(torch::cat({real, fake.detach()}), /*update_state=*/true);
  auto loss = gan_loss_discriminator(scores.narrow(0, 0, n), scores.narrow(0, n, fake.size(0)));
  const double value = checked("loss_gan_d", loss);
  state.discriminator_optimizer->zero_grad();
  loss.backward();
  state.discriminator_optimizer->step();
  return value;
}

torch::Tensor generator_adversarial_term(TrainingState& state, const torch::Tensor& fake) {
  FreezeParameters frozen(*state.discriminator);
  return gan_loss_generator(state.discriminator->forward(fake, /*update_state=*/false));
}

double generator_update(TrainingState& state, const LossTerms& terms) {
  check_terms(terms);
  auto total = total_loss(terms, state.config.loss);
  const double value = checked("loss_total", total);
  state.generator_optimizer->zero_grad();
  if (total.requires_grad()) total.backward();
  state.generator_optimizer->step();
  return value;
}

namespace {

StepMetrics finish_step(TrainingState& state, GeneratorPass& pass) {
  check_terms(pass.terms);
  StepMetrics m;
  m.loss_gan_d = discriminator_update(state, pass.real, pass.fake);
  pass.terms.gan = generator_adversarial_term(state, pass.fake);
  m.loss_total = generator_update(state, pass.terms);
  m.loss_contrast = value_of(pass.terms.contrast);
  m.loss_recon = value_of(pass.terms.recon);
  m.loss_ccons = pass.terms.content_consist.item<double>();
  m.loss_scons = pass.terms.style_consist.item<double>();
  m.loss_gan_g = pass.terms.gan.item<double>();
  m.step = ++state.step;
  return m;
}

}  // namespace

StepMetrics pretrain_step(const torch::Tensor& batch, TrainingState& state, at::Generator& rng) {
  auto pass = pretrain_forward(batch, state, rng);
  return finish_step(state, pass);
}

StepMetrics finetune_step(const torch::Tensor& content_batch, const torch::Tensor& style_batch,
                          TrainingState& state, at::Generator& /*rng*/) {
  // nothing in the fine-tuning protocol samples
  auto pass = finetune_forward(content_batch, style_batch, state);
  return finish_step(state, pass);
}

double squared_grad_norm(const std::vector<torch::Tensor>& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) total += p.grad().square().sum().item<double>();
  }
  return total;
}

CheckpointData capture_state(const TrainingState& state) {
  CheckpointData out;
  out.meta = {{"step", state.step},
              {"mode", to_string(state.mode)},
              {"config", to_json(state.config)},
              {"dims", dims_to_json(state.dims)}};
  capture_module(*state.generator, "generator.", out);
  capture_module(*state.discriminator, "discriminator.", out);
  capture_optimizer(*state.generator, *state.generator_optimizer, "optim.generator.", out);
  capture_optimizer(*state.discriminator, *state.discriminator_optimizer, "optim.discriminator.", out);
  return out;
}

namespace {

struct CheckpointHeader {
  TrainConfig config;
  TrainMode mode;
  ModelDims dims;
  int64_t step;
};

CheckpointHeader read_header(const CheckpointData& data) {
  try {
    return {train_config_from_json(data.meta.at("config")), parse_train_mode(data.meta.at("mode").get<std::string>()),
            dims_from_json(data.meta.at("dims")), data.meta.at("step").get<int64_t>()};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata is incomplete: ") + e.what());
  }
}

}  // namespace

TrainingState restore_state(const CheckpointData& data) {
  const auto header = read_header(data);
  TrainingState state(header.config, header.mode, header.dims);
  restore_module(*state.generator, "generator.", data);
  restore_module(*state.discriminator, "discriminator.", data);
  restore_optimizer(*state.generator, *state.generator_optimizer, "optim.generator.", data);
  restore_optimizer(*state.discriminator, *state.discriminator_optimizer, "optim.discriminator.", data);
  state.step = header.step;
  return state;
}

TrainingState finetune_state_from(const CheckpointData& pretrained, const TrainConfig& config) {
  const auto header = read_header(pretrained);
  TrainingState state(config, TrainMode::kFinetune, header.dims);
  restore_module(*state.generator, "generator.", pretrained);
  if (config.carry_discriminator) restore_module(*state.discriminator, "discriminator.", pretrained);
  return state;
}

AceGenerator load_generator(const fs::path& checkpoint) {
  const auto data = load_checkpoint(checkpoint);
  const auto header = read_header(data);
  AceGenerator g(header.dims);
  restore_module(*g, "generator.", data);
  g->eval();
  return g;
}

TrainingResult run_training(const RunConfig& run, const StepCallback& on_step) {
  run.validate();
  const auto& cfg = run.train;
  const auto data = load_domain_dataset(cfg.data, cfg.resolution, derive_seed(cfg.seed, kDataStream));
  std::optional<DomainDataset> style_data;
  if (run.mode == TrainMode::kFinetune) {
    style_data = load_domain_dataset(cfg.data_style, cfg.resolution, derive_seed(cfg.seed, kStyleDataStream));
  }

  const bool resuming = !run.resume_checkpoint.empty();
  std::unique_ptr<TrainingState> state;
  if (resuming) {
    state = std::make_unique<TrainingState>(restore_state(load_checkpoint(run.resume_checkpoint)));
    if (state->mode != run.mode) {
      throw std::invalid_argument("cannot resume a " + to_string(state->mode) + " checkpoint as " +
                                  to_string(run.mode));
    }
    if (trajectory_fields(state->config) != trajectory_fields(cfg)) {
      throw std::invalid_argument("resume config differs from the checkpoint's recorded config");
    }
    state->config = cfg;
  } else if (run.mode == TrainMode::kFinetune) {
    state = std::make_unique<TrainingState>(finetune_state_from(load_checkpoint(run.init_checkpoint), cfg));
  } else {
    state = std::make_unique<TrainingState>(cfg, TrainMode::kPretrain);
  }

  fs::create_directories(run.out_dir);
  TrainingResult result;
  result.metrics_log = run.out_dir / "metrics.jsonl";
  std::ofstream log(result.metrics_log, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open metrics log " + result.metrics_log.string());

  for (int64_t step = state->step + 1; step <= cfg.steps; ++step) {
    auto rng = make_rng(derive_seed(cfg.seed ^ kStepSalt, static_cast<uint64_t>(step)));
    auto batch = data.batch(step - 1, cfg.batch_size);
    auto m = run.mode == TrainMode::kPretrain
                 ? pretrain_step(batch, *state, rng)
                 : finetune_step(batch, style_data->batch(step - 1, cfg.batch_size), *state, rng);
    log << m.to_json().dump() << '\n';
    log.flush();
    if (on_step) on_step(m);
    result.metrics.push_back(m);
    if (cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0 && step != cfg.steps) {
      std::ostringstream name;
      name << "step_" << std::setw(6) << std::setfill('0') << step << ".ace";
      save_checkpoint(run.out_dir / name.str(), capture_state(*state));
    }
  }
  result.checkpoint = run.out_dir / "final.ace";
  save_checkpoint(result.checkpoint, capture_state(*state));
  return result;
}

}  // namespace ace
