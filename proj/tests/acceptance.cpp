// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 3 4      run a subset
//
// Criteria 5-8 share one pretraining run; selecting any of them trains it.
// Scratch files go to $ACE_ACCEPTANCE_DIR (default: <tmp>/ace_acceptance).

#include <Eigen/Dense>
#include <opencv2/imgcodecs.hpp>
#include <torch/torch.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ace/checkpoint.hpp"
#include "ace/dataset.hpp"
#include "ace/decoder.hpp"
#include "ace/discriminator.hpp"
#include "ace/inference.hpp"
#include "ace/losses.hpp"
#include "ace/rng.hpp"
#include "ace/synthetic.hpp"
#include "ace/training.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

fs::path scratch_root() {
  if (const char* env = std::getenv("ACE_ACCEPTANCE_DIR")) return env;
  return fs::temp_directory_path() / "ace_acceptance";
}

// ---------------------------------------------------------------------------
// Independent oracles

// Population mean and std of a contiguous double range.
std::pair<double, double> moments(const double* v, int64_t n) {
  double mean = 0.0;
  for (int64_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (int64_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

double top_singular_value(const torch::Tensor& w) {
  auto m = w.to(torch::kDouble).contiguous();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(
      m.data_ptr<double>(), m.size(0), m.size(1));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(mat).singularValues()(0);
}

using Rgb = std::array<double, 3>;

// Mean RGB in [-1, 1] units, decoded straight from PNG files on disk.
Rgb png_mean_rgb(const std::vector<fs::path>& files) {
  Rgb sum{};
  double count = 0.0;
  for (const auto& f : files) {
    cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw std::runtime_error("oracle cannot read " + f.string());
    for (int y = 0; y < img.rows; ++y) {
      const auto* row = img.ptr<cv::Vec3b>(y);
      for (int x = 0; x < img.cols; ++x) {
        for (int c = 0; c < 3; ++c) sum[c] += row[x][2 - c] / 127.5 - 1.0;
      }
    }
    count += img.rows * img.cols;
  }
  for (auto& s : sum) s /= count;
  return sum;
}

std::vector<fs::path> pngs_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double distance(const Rgb& a, const Rgb& b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) d += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(d);
}

Rgb tensor_mean_rgb(const torch::Tensor& image) {
  auto m = image.to(torch::kDouble).mean({1, 2});
  return {m[0].item<double>(), m[1].item<double>(), m[2].item<double>()};
}

// ---------------------------------------------------------------------------
// 1. AdaIN moments and identity

Verdict adain_suite() {
  const auto t0 = Clock::now();
  auto rng = ace::make_rng(101);
  double worst_moment = 0.0;
  double worst_identity = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto z = torch::empty({4, 8, 16, 16}).normal_(0.0, 1.0, rng) * (1.0 + trial % 5) + (trial % 7 - 3.0);
    auto gamma = torch::empty({4, 8}).uniform_(0.05, 4.0, rng);
    auto beta = torch::empty({4, 8}).normal_(0.0, 2.0, rng);
    auto out = ace::adain(z, gamma, beta).to(torch::kDouble).contiguous();
    const auto* data = out.data_ptr<double>();
    for (int64_t b = 0; b < 4; ++b) {
      for (int64_t c = 0; c < 8; ++c) {
        auto [mean, std] = moments(data + (b * 8 + c) * 256, 256);
        worst_moment = std::max(worst_moment, std::abs(mean - beta[b][c].item<double>()));
        worst_moment = std::max(worst_moment, std::abs(std - gamma[b][c].item<double>()));
      }
    }
    auto identity = ace::adain(z, ace::instance_std(z), ace::instance_mean(z));
    worst_identity = std::max(worst_identity, (identity - z).abs().max().item<double>());
  }
  const double elapsed = seconds_since(t0);
  return {worst_moment <= 1e-4 && worst_identity <= 1e-5 && elapsed < 5.0,
          "max moment err " + fmt(worst_moment) + " (<=1e-4), identity err " + fmt(worst_identity) +
              " (<=1e-5), " + fmt(elapsed, 3) + " s (<5)"};
}

// ---------------------------------------------------------------------------
// 2. Stop-gradient

torch::Tensor synthetic_batch(int64_t n) {
  auto rng = ace::make_rng(202);
  return torch::empty({n, 3, 64, 64}).uniform_(-1.0, 1.0, rng);
}

Verdict stop_gradient_suite() {
  const auto t0 = Clock::now();
  auto x = synthetic_batch(8);

  ace::TrainConfig no_contrast;
  no_contrast.seed = 2;
  no_contrast.loss.contrast = 0.0;
  ace::TrainingState frozen(no_contrast, ace::TrainMode::kPretrain);
  auto rng = ace::make_rng(1);
  ace::pretrain_step(x, frozen, rng);
  const double frozen_norm = ace::squared_grad_norm(frozen.generator->contrastive_parameters());

  ace::TrainConfig only_contrast;
  only_contrast.seed = 2;
  only_contrast.loss = {1.0, 0.0, 0.0, 0.0, 0.0};
  ace::TrainingState active(only_contrast, ace::TrainMode::kPretrain);
  auto rng2 = ace::make_rng(1);
  ace::pretrain_step(x, active, rng2);
  const double active_norm = ace::squared_grad_norm(active.generator->contrastive_parameters());

  const double elapsed = seconds_since(t0);
  return {frozen_norm == 0.0 && active_norm > 0.0 && elapsed < 30.0,
          "|grad|^2 without contrast " + fmt(frozen_norm) + " (==0), contrast only " + fmt(active_norm) +
              " (>0), " + fmt(elapsed, 3) + " s (<30)"};
}

// ---------------------------------------------------------------------------
// 3. Contrastive bounds and symmetry

Verdict contrastive_suite() {
  torch::manual_seed(303);
  ace::Predictor predictor(128);
  predictor->eval();
  torch::NoGradGuard no_grad;
  auto rng = ace::make_rng(303);
  double lo = 1.0;
  double hi = -1.0;
  double worst_swap = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto c1 = torch::empty({2, 128, 8, 8}).normal_(0.0, 1.0, rng);
    auto c2 = i % 2 ? c1 + 0.3 * torch::empty_like(c1).normal_(0.0, 1.0, rng)
                    : torch::empty_like(c1).normal_(0.0, 1.0 + i % 3, rng);
    auto p1 = predictor->forward(c1);
    auto p2 = predictor->forward(c2);
    const double l = ace::contrastive_loss(p1, p2, c1, c2).item<double>();
    const double swapped = ace::contrastive_loss(p2, p1, c2, c1).item<double>();
    lo = std::min(lo, l);
    hi = std::max(hi, l);
    worst_swap = std::max(worst_swap, std::abs(l - swapped));
  }

  auto c1 = torch::empty({2, 16, 4, 4}, torch::kDouble).normal_(0.0, 1.0, rng);
  auto c2 = torch::empty({2, 16, 4, 4}, torch::kDouble).normal_(0.0, 1.0, rng);
  const double aligned = ace::contrastive_loss(2.0 * c2, 0.5 * c1, c1, c2).item<double>();
  const double opposed = ace::contrastive_loss(-c2, -3.0 * c1, c1, c2).item<double>();
  auto mask = torch::zeros({1, 16, 1, 1}, torch::kDouble);
  mask.narrow(1, 0, 8).fill_(1.0);
  const double orthogonal =
      ace::contrastive_loss(c1 * mask, c2 * mask, c1 * (1.0 - mask), c2 * (1.0 - mask)).item<double>();

  const double case_err =
      std::max({std::abs(aligned + 1.0), std::abs(orthogonal), std::abs(opposed - 1.0)});
  const bool pass = lo >= -1.0 && hi <= 1.0 && worst_swap < 1e-6 && case_err < 1e-6;
  return {pass, "range [" + fmt(lo) + ", " + fmt(hi) + "], swap diff " + fmt(worst_swap) +
                    " (<1e-6), constructed -1/0/+1 err " + fmt(case_err) + " (<1e-6)"};
}

// ---------------------------------------------------------------------------
// 4. Spectral norm against an SVD oracle

// Random 16x16 Gaussians can have sigma_2 / sigma_1 above 0.99, so 1e-3 needs
// a few hundred steps of the one-step-per-call iteration.
constexpr int kPowerIterations = 500;

Verdict spectral_suite() {
  auto rng = ace::make_rng(404);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto w = torch::empty({16, 16}, torch::kDouble).normal_(0.0, 1.0 + i % 4, rng);
    ace::SpectralState state = ace::init_spectral_state(16, rng);
    state.u = state.u.to(torch::kDouble);
    ace::SpectralResult r;
    for (int it = 0; it < kPowerIterations; ++it) {
      r = ace::spectral_normalize(w, state);
      state = r.state;
    }
    worst = std::max(worst, std::abs(top_singular_value(r.weight) - 1.0));
  }
  return {worst <= 1e-3, "100 matrices, " + std::to_string(kPowerIterations) + " power iterations, max |sigma_1(W_sn) - 1| = " + fmt(worst) +
                             " (<=1e-3)"};
}

// ---------------------------------------------------------------------------
// Shared pretraining fixture for 5-8

constexpr uint64_t kDataSeed = 7;
constexpr uint64_t kHoldoutSeed = 1007;
constexpr uint64_t kTrainSeed = 7;
constexpr int kDomainSize = 500;
constexpr int kHoldoutSize = 32;
constexpr int64_t kPretrainSteps = 1000;
constexpr int64_t kFinetuneSteps = 300;

struct Fixture {
  fs::path root;
  ace::SyntheticDomains train;
  ace::SyntheticDomains holdout;
  fs::path step1_checkpoint;
  fs::path final_checkpoint;
  fs::path metrics_log;
  double l1_step1 = 0.0;
  double l1_final = 0.0;
  double code_spread = 0.0;
  double train_seconds = 0.0;
  bool finished = false;
  std::string error;
};

torch::Tensor load_all(const fs::path& dir) { return ace::load_domain_dataset(dir, 64).images(); }

ace::RunConfig pretrain_run(const Fixture& f, int64_t steps, const fs::path& out) {
  ace::RunConfig run;
  run.mode = ace::TrainMode::kPretrain;
  run.train.seed = kTrainSeed;
  run.train.batch_size = 8;
  run.train.resolution = 64;
  run.train.steps = steps;
  run.train.checkpoint_interval = 0;
  run.train.data = f.train.domain_a;
  run.out_dir = out;
  return run;
}

Fixture& fixture() {
  static Fixture f = [] {
    Fixture f;
    f.root = scratch_root();
    try {
      fs::remove_all(f.root);
      f.train = ace::generate_synthetic_domains(f.root / "data", kDomainSize, kDataSeed);
      f.holdout = ace::generate_synthetic_domains(f.root / "holdout", kHoldoutSize, kHoldoutSeed);
      const auto holdout_a = load_all(f.holdout.domain_a);

      const auto out = f.root / "pretrain";
      const auto t0 = Clock::now();
      auto first = ace::run_training(pretrain_run(f, 1, out));
      f.train_seconds += seconds_since(t0);
      f.step1_checkpoint = f.root / "pretrain_step1.ace";
      fs::copy_file(first.checkpoint, f.step1_checkpoint, fs::copy_options::overwrite_existing);
      {
        auto model = ace::load_generator(f.step1_checkpoint);
        f.l1_step1 = ace::mean_reconstruction_l1(*model, holdout_a);
      }

      auto rest = pretrain_run(f, kPretrainSteps, out);
      rest.resume_checkpoint = f.step1_checkpoint;
      const auto t1 = Clock::now();
      std::cout << "  pretraining " << kPretrainSteps << " steps ..." << std::flush;
      auto result = ace::run_training(rest, [](const ace::StepMetrics& m) {
        if (m.step % 100 == 0) std::cout << " " << m.step << std::flush;
      });
      std::cout << "\n";
      f.train_seconds += seconds_since(t1);
      f.final_checkpoint = result.checkpoint;
      f.metrics_log = result.metrics_log;

      auto model = ace::load_generator(f.final_checkpoint);
      f.l1_final = ace::mean_reconstruction_l1(*model, holdout_a);
      f.code_spread = ace::content_code_spread(ace::content_codes(*model, holdout_a));
      f.finished = true;
    } catch (const std::exception& e) {
      f.error = e.what();
    }
    return f;
  }();
  return f;
}

Verdict fixture_failure(const Fixture& f) { return {false, "pretraining failed: " + f.error}; }

// 5. Desk-scale pretraining

Verdict pretraining_suite() {
  auto& f = fixture();
  if (!f.finished) return fixture_failure(f);
  const auto lines = read_lines(f.metrics_log);
  const bool complete = static_cast<int64_t>(lines.size()) == kPretrainSteps;
  const double ratio = f.l1_final / f.l1_step1;
  const bool pass = complete && f.train_seconds < 900.0 && ratio < 0.5 && f.code_spread > 0.05;
  return {pass, std::to_string(lines.size()) + " steps in " + fmt(f.train_seconds, 4) +
                    " s (<900), holdout L1 " + fmt(f.l1_step1) + " -> " + fmt(f.l1_final) + " (ratio " +
                    fmt(ratio, 3) + " < 0.5), code spread " + fmt(f.code_spread, 3) + " (>0.05)"};
}

// 6. Zero-shot translation toward the pretraining domain

Verdict translation_suite() {
  auto& f = fixture();
  if (!f.finished) return fixture_failure(f);
  const Rgb target = png_mean_rgb(pngs_in(f.train.domain_a));
  const auto eval_files = pngs_in(f.holdout.domain_b);
  const auto style_files = pngs_in(f.holdout.domain_a);
  auto model = ace::load_generator(f.final_checkpoint);

  int closer = 0;
  bool self_exact = true;
  double moved = 0.0;
  for (size_t i = 0; i < eval_files.size(); ++i) {
    auto x = ace::read_image(eval_files[i], 64);
    auto style = ace::read_image(style_files[i], 64);
    auto out = ace::translate(*model, x, style);
    const double before = distance(png_mean_rgb({eval_files[i]}), target);
    const double after = distance(tensor_mean_rgb(out), target);
    moved += before - after;
    if (after < before) ++closer;
    self_exact = self_exact && torch::equal(ace::translate(*model, x, x), ace::reconstruct(*model, x));
  }
  const double fraction = static_cast<double>(closer) / static_cast<double>(eval_files.size());
  return {fraction >= 0.8 && self_exact,
          std::to_string(closer) + "/" + std::to_string(eval_files.size()) + " translated B images closer to A's mean RGB (" +
              fmt(100.0 * fraction, 3) + "% >= 80%), mean distance drop " +
              fmt(moved / static_cast<double>(eval_files.size()), 3) + ", translate(x,x)==reconstruct(x) " +
              (self_exact ? "bit-exact" : "MISMATCH")};
}

// 7. Fine-tuning protocol

double heldout_content_consistency(ace::AceGeneratorImpl& model, const torch::Tensor& source,
                                   const torch::Tensor& style) {
  auto translated = ace::translate(model, source, style);
  auto before = ace::content_codes(model, source);
  auto after = ace::content_codes(model, translated);
  return ace::content_consistency(before, after).item<double>();
}

Verdict finetune_suite() {
  auto& f = fixture();
  if (!f.finished) return fixture_failure(f);
  const auto source = load_all(f.holdout.domain_a);
  const auto style = load_all(f.holdout.domain_b);

  double loss_before = 0.0;
  {
    auto pretrained = ace::load_generator(f.final_checkpoint);
    loss_before = heldout_content_consistency(*pretrained, source, style);
  }

  ace::RunConfig run;
  run.mode = ace::TrainMode::kFinetune;
  run.train.seed = kTrainSeed;
  run.train.steps = kFinetuneSteps;
  run.train.checkpoint_interval = 0;
  run.train.data = f.train.domain_a;
  run.train.data_style = f.train.domain_b;
  run.init_checkpoint = f.final_checkpoint;
  run.out_dir = f.root / "finetune";
  auto result = ace::run_training(run);

  bool contrast_free = true;
  for (const auto& line : read_lines(result.metrics_log)) {
    auto record = nlohmann::json::parse(line);
    contrast_free = contrast_free && !record.contains("loss_contrast") && !record.contains("loss_recon");
  }
  for (const auto& m : result.metrics) contrast_free = contrast_free && !m.loss_contrast.has_value();

  auto tuned = ace::load_generator(result.checkpoint);
  const double loss_after = heldout_content_consistency(*tuned, source, style);
  const bool pass = contrast_free && result.metrics.size() == static_cast<size_t>(kFinetuneSteps) &&
                    loss_after <= 1.1 * loss_before;
  return {pass, std::string("metrics ") + (contrast_free ? "have no contrastive term" : "CONTAIN a contrastive term") +
                    ", held-out content consistency " + fmt(loss_before) + " -> " + fmt(loss_after) + " after " +
                    std::to_string(result.metrics.size()) + " steps (<= +10%)"};
}

// 8. Determinism and persistence

Verdict determinism_suite() {
  auto& f = fixture();
  if (!f.finished) return fixture_failure(f);
  constexpr int64_t kSteps = 30;
  constexpr int64_t kSplit = 15;

  auto run_a = pretrain_run(f, kSteps, f.root / "det_a");
  run_a.train.checkpoint_interval = kSplit;
  auto run_b = pretrain_run(f, kSteps, f.root / "det_b");
  run_b.train.checkpoint_interval = kSplit;
  auto a = ace::run_training(run_a);
  auto b = ace::run_training(run_b);
  const bool logs_equal = read_bytes(a.metrics_log) == read_bytes(b.metrics_log);
  const bool finals_equal = read_bytes(a.checkpoint) == read_bytes(b.checkpoint);

  const auto bytes = read_bytes(a.checkpoint);
  const bool roundtrip = ace::encode_checkpoint(ace::load_checkpoint(a.checkpoint)) == bytes &&
                         ace::encode_checkpoint(ace::capture_state(
                             ace::restore_state(ace::load_checkpoint(a.checkpoint)))) == bytes;

  auto resumed = pretrain_run(f, kSteps, f.root / "det_resume");
  resumed.train.checkpoint_interval = kSplit;
  resumed.resume_checkpoint = f.root / "det_a" / "step_000015.ace";
  auto r = ace::run_training(resumed);
  const auto full = read_lines(a.metrics_log);
  const auto tail = read_lines(r.metrics_log);
  const bool resume_equal = tail.size() == static_cast<size_t>(kSteps - kSplit) &&
                            std::equal(tail.begin(), tail.end(), full.begin() + kSplit) &&
                            read_bytes(r.checkpoint) == bytes;

  return {logs_equal && finals_equal && roundtrip && resume_equal,
          std::string("repeat-run logs ") + (logs_equal ? "identical" : "DIFFER") + ", final checkpoints " +
              (finals_equal ? "identical" : "DIFFER") + ", save/load round-trip " +
              (roundtrip ? "bit-exact" : "NOT bit-exact") + ", resume from step " + std::to_string(kSplit) +
              (resume_equal ? " reproduces" : " DIVERGES from") + " the uninterrupted run"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "adain-moments", adain_suite},
      {2, "stop-gradient", stop_gradient_suite},
      {3, "contrastive-bounds", contrastive_suite},
      {4, "spectral-norm-oracle", spectral_suite},
      {5, "desk-scale-pretraining", pretraining_suite},
      {6, "zero-shot-translation", translation_suite},
      {7, "finetune-protocol", finetune_suite},
      {8, "determinism-persistence", determinism_suite},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << v.detail << "  ("
              << fmt(seconds_since(t0), 4) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all selected criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
