#include "ace/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "ace/config.hpp"
#include "ace/dataset.hpp"
#include "ace/inference.hpp"
#include "ace/synthetic.hpp"
#include "ace/training.hpp"

namespace ace {

namespace fs = std::filesystem;

namespace {

struct TrainFlags {
  std::string data;
  std::string data_style;
  std::string ckpt;
  std::string resume;
  std::string out;
  std::string config;
  std::optional<int64_t> steps;
  std::optional<int64_t> batch;
  std::optional<int64_t> res;
  std::optional<uint64_t> seed;
  std::optional<int64_t> checkpoint_interval;
  std::optional<std::string> aug_mode;
  bool carry_discriminator = false;
};

void add_train_flags(CLI::App& cmd, TrainFlags& f, bool finetune) {
  cmd.add_option("--data", f.data, finetune ? "Source-domain image directory (content)" : "Image directory")
      ->required();
  if (finetune) {
    cmd.add_option("--data-style", f.data_style, "Target-domain image directory (style)")->required();
    cmd.add_option("--ckpt", f.ckpt, "Pretrained checkpoint to start from");
    cmd.add_flag("--carry-discriminator", f.carry_discriminator, "Keep the pretrained discriminator");
  }
  cmd.add_option("--resume", f.resume, "Continue from a checkpoint of this mode");
  cmd.add_option("--out", f.out, "Output directory for checkpoints and metrics.jsonl");
  cmd.add_option("--config", f.config, "JSON config file");
  cmd.add_option("--steps", f.steps, "Total number of steps");
  cmd.add_option("--batch", f.batch, "Batch size (default 8)");
  cmd.add_option("--res", f.res, "Image resolution (default 64)");
  cmd.add_option("--seed", f.seed, "Random seed");
  cmd.add_option("--checkpoint-interval", f.checkpoint_interval, "Steps between checkpoints (0: final only)");
  cmd.add_option("--aug-mode", f.aug_mode, "Augmentation: latent or image")->check(CLI::IsMember({"latent", "image"}));
}

RunConfig build_run_config(const TrainFlags& f, TrainMode mode) {
  RunConfig run;
  run.mode = mode;
  if (!f.config.empty()) run.train = load_train_config(f.config);
  auto& t = run.train;
  t.data = f.data;
  if (!f.data_style.empty()) t.data_style = f.data_style;
  if (f.steps) t.steps = *f.steps;
  if (f.batch) t.batch_size = *f.batch;
  if (f.res) t.resolution = *f.res;
  if (f.seed) t.seed = *f.seed;
  if (f.checkpoint_interval) t.checkpoint_interval = *f.checkpoint_interval;
  if (f.aug_mode) t.augmentation = parse_augmentation_mode(*f.aug_mode);
  if (f.carry_discriminator) t.carry_discriminator = true;
  run.out_dir = f.out.empty() ? fs::path("runs") / to_string(mode) : fs::path(f.out);
  run.init_checkpoint = f.ckpt;
  run.resume_checkpoint = f.resume;
  for (const auto& p : {run.init_checkpoint, run.resume_checkpoint}) {
    if (!p.empty() && !fs::exists(p)) throw std::runtime_error("checkpoint not found: " + p.string());
  }
  run.validate();
  return run;
}

int run_train(const TrainFlags& f, TrainMode mode, std::ostream& out) {
  const auto run = build_run_config(f, mode);
  out << to_string(mode) << ": " << run.train.steps << " steps, batch " << run.train.batch_size << ", writing to "
      << run.out_dir.string() << "\n";
  const auto every = std::max<int64_t>(1, run.train.steps / 20);
  auto result = run_training(run, [&](const StepMetrics& m) {
    if (m.step % every == 0 || m.step == run.train.steps) out << m.to_json().dump() << "\n" << std::flush;
  });
  out << "checkpoint: " << result.checkpoint.string() << "\n";
  return kExitOk;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw std::runtime_error(std::string(what) + " not found: " + p.string());
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Auto-contrastive encoder: zero-shot image-to-image translation", "ace"};
  app.require_subcommand(1);

  TrainFlags pre;
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain on a single image domain");
  add_train_flags(*pretrain, pre, false);

  TrainFlags fine;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune a pretrained model on a source/target pair");
  add_train_flags(*finetune, fine, true);

  std::string ckpt;
  std::string content;
  std::string style;
  std::string out_path;
  auto* translate_cmd = app.add_subcommand("translate", "Translate a content image into the style of another");
  translate_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  translate_cmd->add_option("--content", content, "Content image")->required();
  translate_cmd->add_option("--style", style, "Style image")->required();
  translate_cmd->add_option("--out", out_path, "Output PNG")->required();

  std::string image;
  std::string map_out;
  auto* visualize = app.add_subcommand("visualize", "Overlay the most varying content-code channel on an image");
  visualize->add_option("--ckpt", ckpt, "Checkpoint")->required();
  visualize->add_option("--content,--image", image, "Input image")->required();
  visualize->add_option("--out", out_path, "Overlay PNG")->required();
  visualize->add_option("--map-out", map_out, "Optional grayscale heatmap PNG");

  int n_per_domain = 500;
  uint64_t gen_seed = 7;
  auto* gen = app.add_subcommand("gen-data", "Write the two synthetic shape domains");
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--n", n_per_domain, "Images per domain")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();

  std::string data;
  int64_t res = 64;
  auto* eval = app.add_subcommand("eval-recon", "Mean reconstruction L1 over a directory");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--data", data, "Image directory")->required();
  eval->add_option("--res", res, "Image resolution")->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (pretrain->parsed()) return run_train(pre, TrainMode::kPretrain, out);
    if (finetune->parsed()) return run_train(fine, TrainMode::kFinetune, out);
    if (translate_cmd->parsed()) {
      require_file(ckpt, "checkpoint");
      auto model = load_generator(ckpt);
      auto x_content = read_image(content);
      auto x_style = read_image(style);
      write_png(out_path, ace::translate(*model, x_content, x_style));
      out << "wrote " << out_path << "\n";
      return kExitOk;
    }
    if (visualize->parsed()) {
      require_file(ckpt, "checkpoint");
      auto model = load_generator(ckpt);
      auto heat = visualize_content(*model, read_image(image));
      write_png(out_path, heat.overlay);
      if (!map_out.empty()) write_png(map_out, (heat.map * 2.0 - 1.0).unsqueeze(0).expand({3, -1, -1}));
      out << "wrote " << out_path << " (content channel " << heat.channel << ")\n";
      return kExitOk;
    }
    if (gen->parsed()) {
      auto domains = generate_synthetic_domains(out_path, n_per_domain, gen_seed);
      out << "wrote " << n_per_domain << " images to " << domains.domain_a.string() << " and "
          << domains.domain_b.string() << "\n";
      return kExitOk;
    }
    if (eval->parsed()) {
      require_file(ckpt, "checkpoint");
      auto model = load_generator(ckpt);
      auto dataset = load_domain_dataset(data, res);
      out << std::setprecision(6) << mean_reconstruction_l1(*model, dataset.images()) << "\n";
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ace
