#include "ace/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ace/rng.hpp"

namespace ace {

namespace fs = std::filesystem;

float normalize_pixel(uint8_t v) { return 2.0f * static_cast<float>(v) / 255.0f - 1.0f; }

uint8_t denormalize_pixel(float x) {
  const float scaled = std::round((x + 1.0f) * 127.5f);
  return static_cast<uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

namespace {

torch::Tensor mat_to_tensor(const cv::Mat& bgr) {
  static const auto lut = [] {
    std::array<float, 256> t{};
    for (int v = 0; v < 256; ++v) t[v] = normalize_pixel(static_cast<uint8_t>(v));
    return t;
  }();
  const int h = bgr.rows;
  const int w = bgr.cols;
  auto out = torch::empty({3, h, w});
  auto acc = out.accessor<float, 3>();
  for (int y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      acc[0][y][x] = lut[row[x][2]];
      acc[1][y][x] = lut[row[x][1]];
      acc[2][y][x] = lut[row[x][0]];
    }
  }
  return out;
}

cv::Mat decode(const fs::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw std::runtime_error("cannot decode image " + path.string());
  return img;
}

bool has_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

int workers_from_env() {
  if (const char* env = std::getenv("ACE_NUM_WORKERS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring ACE_NUM_WORKERS='" << env << "'\n";
    }
  }
  return 1;
}

}  // namespace

torch::Tensor read_image(const fs::path& path, int64_t resolution) {
  cv::Mat img = decode(path);
  const int side = std::min(img.rows, img.cols);
  cv::Mat square = img(cv::Rect((img.cols - side) / 2, (img.rows - side) / 2, side, side));
  cv::Mat sized;
  if (side == resolution) {
    sized = square;
  } else {
    const auto interp = side > resolution ? cv::INTER_AREA : cv::INTER_LINEAR;
    cv::resize(square, sized, cv::Size(static_cast<int>(resolution), static_cast<int>(resolution)), 0, 0, interp);
  }
  return mat_to_tensor(sized);
}

torch::Tensor read_image(const fs::path& path) { return mat_to_tensor(decode(path)); }

void write_png(const fs::path& path, const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw std::invalid_argument("write_png expects a [3, H, W] tensor");
  }
  auto img = image.detach().to(torch::kFloat).contiguous();
  const int h = static_cast<int>(img.size(1));
  const int w = static_cast<int>(img.size(2));
  cv::Mat bgr(h, w, CV_8UC3);
  auto acc = img.accessor<float, 3>();
  for (int y = 0; y < h; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      row[x] = cv::Vec3b(denormalize_pixel(acc[2][y][x]), denormalize_pixel(acc[1][y][x]),
                         denormalize_pixel(acc[0][y][x]));
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write " + path.string());
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

DomainDataset::DomainDataset(std::vector<fs::path> paths, torch::Tensor images, int64_t resolution,
                             uint64_t shuffle_seed)
    : paths_(std::move(paths)), images_(std::move(images)), resolution_(resolution), seed_(shuffle_seed) {
  if (images_.size(0) == 0) throw std::invalid_argument("empty dataset");
}

std::vector<int64_t> DomainDataset::epoch_order(int64_t epoch) const {
  std::vector<int64_t> order(static_cast<size_t>(size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  // explicit Fisher-Yates so the order does not depend on the standard library's shuffle
  std::mt19937_64 gen(derive_seed(seed_, static_cast<uint64_t>(epoch)));
  for (size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(gen() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

torch::Tensor DomainDataset::batch(int64_t index, int64_t batch_size) const {
  const int64_t n = size();
  std::vector<int64_t> picks;
  picks.reserve(static_cast<size_t>(batch_size));
  int64_t cached_epoch = -1;
  std::vector<int64_t> order;
  for (int64_t k = 0; k < batch_size; ++k) {
    const int64_t item = index * batch_size + k;
    const int64_t epoch = item / n;
    if (epoch != cached_epoch) {
      order = epoch_order(epoch);
      cached_epoch = epoch;
    }
    picks.push_back(order[static_cast<size_t>(item % n)]);
  }
  return images_.index_select(0, torch::tensor(picks, torch::kLong));
}

torch::Tensor DomainDataset::head(int64_t count) const {
  return images_.narrow(0, 0, std::min(count, size()));
}

DomainDataset load_domain_dataset(const fs::path& dir, int64_t resolution, uint64_t shuffle_seed, int workers) {
  const auto candidates = list_images(dir);
  if (workers <= 0) workers = workers_from_env();
  workers = std::max(1, std::min<int>(workers, static_cast<int>(candidates.size())));

  std::vector<std::optional<torch::Tensor>> decoded(candidates.size());
  std::vector<std::string> failures(candidates.size());
  auto work = [&](size_t begin) {
    for (size_t i = begin; i < candidates.size(); i += static_cast<size_t>(workers)) {
      try {
        decoded[i] = read_image(candidates[i], resolution);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, static_cast<size_t>(w));
    for (auto& t : pool) t.join();
  }

  std::vector<fs::path> kept;
  std::vector<torch::Tensor> images;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (decoded[i]) {
      kept.push_back(candidates[i]);
      images.push_back(*decoded[i]);
    } else if (!failures[i].empty()) {
      std::cerr << "warning: skipping " << candidates[i].string() << ": " << failures[i] << "\n";
    }
  }
  if (images.empty()) throw std::runtime_error("no decodable images in " + dir.string());
  return DomainDataset(std::move(kept), torch::stack(images), resolution, shuffle_seed);
}

}  // namespace ace
