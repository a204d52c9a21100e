#include "ace/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ace/dataset.hpp"
#include "ace/rng.hpp"

namespace ace {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  int r, g, b;
};

enum class Texture { kStripes, kChecker };

struct Palette {
  Rgb background;
  std::vector<Rgb> shapes;
  Texture texture;
  uint64_t salt;
};

const Palette kPaletteA{{30, 50, 120}, {{225, 225, 240}, {120, 200, 255}, {90, 170, 230}}, Texture::kStripes, 0xA};
const Palette kPaletteB{{210, 150, 60}, {{120, 40, 20}, {60, 95, 25}, {160, 60, 95}}, Texture::kChecker, 0xB};

cv::Scalar bgr(const Rgb& c) { return cv::Scalar(c.b, c.g, c.r); }

int jitter(std::mt19937_64& gen, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(gen);
}

cv::Mat render(const Palette& palette, std::mt19937_64& gen) {
  const int n = kSyntheticResolution;
  cv::Mat img(n, n, CV_8UC3);
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(gen);
  for (int y = 0; y < n; ++y) {
    auto* row = img.ptr<cv::Vec3b>(y);
    for (int x = 0; x < n; ++x) {
      double t = 0.0;
      if (palette.texture == Texture::kStripes) {
        t = 22.0 * std::sin(0.5 * y + phase);
      } else {
        t = (((x / 8) + (y / 8)) % 2 == 0) ? 18.0 : -18.0;
      }
      const int noise = jitter(gen, -8, 8);
      auto px = [&](int base) { return cv::saturate_cast<uchar>(base + t + noise); };
      row[x] = cv::Vec3b(px(palette.background.b), px(palette.background.g), px(palette.background.r));
    }
  }
  const int count = jitter(gen, 1, 3);
  for (int k = 0; k < count; ++k) {
    const int kind = jitter(gen, 0, 2);
    const cv::Point center(jitter(gen, 12, n - 12), jitter(gen, 12, n - 12));
    const int size = jitter(gen, 6, 13);
    const auto color = bgr(palette.shapes[static_cast<size_t>(jitter(gen, 0, 2))]);
    switch (kind) {
      case 0:
        cv::circle(img, center, size, color, cv::FILLED, cv::LINE_8);
        break;
      case 1:
        cv::rectangle(img, center - cv::Point(size, size), center + cv::Point(size, size), color, cv::FILLED,
                      cv::LINE_8);
        break;
      default: {
        std::vector<cv::Point> tri{center + cv::Point(0, -size), center + cv::Point(-size, size),
                                   center + cv::Point(size, size)};
        cv::fillConvexPoly(img, tri, color, cv::LINE_8);
      }
    }
  }
  return img;
}

fs::path write_domain(const fs::path& dir, const Palette& palette, int n, uint64_t seed,
                      std::array<double, 3>& mean_rgb) {
  fs::create_directories(dir);
  std::array<double, 3> sum{};
  double pixels = 0.0;
  for (int i = 0; i < n; ++i) {
    // geometry distribution is shared; the stream differs per domain so content is unpaired
    std::mt19937_64 gen(derive_seed(seed ^ palette.salt, static_cast<uint64_t>(i)));
    cv::Mat img = render(palette, gen);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.png", i);
    const auto path = dir / name;
    if (!cv::imwrite(path.string(), img)) throw std::runtime_error("cannot write " + path.string());
    for (int y = 0; y < img.rows; ++y) {
      const auto* row = img.ptr<cv::Vec3b>(y);
      for (int x = 0; x < img.cols; ++x) {
        sum[0] += normalize_pixel(row[x][2]);
        sum[1] += normalize_pixel(row[x][1]);
        sum[2] += normalize_pixel(row[x][0]);
      }
    }
    pixels += img.rows * img.cols;
  }
  for (int c = 0; c < 3; ++c) mean_rgb[c] = sum[c] / pixels;
  return dir;
}

}  // namespace

SyntheticDomains generate_synthetic_domains(const fs::path& out_dir, int n_per_domain, uint64_t seed) {
  if (n_per_domain <= 0) throw std::invalid_argument("n_per_domain must be positive");
  SyntheticDomains out;
  out.domain_a = write_domain(out_dir / "domain_a", kPaletteA, n_per_domain, seed, out.mean_rgb_a);
  out.domain_b = write_domain(out_dir / "domain_b", kPaletteB, n_per_domain, seed, out.mean_rgb_b);
  return out;
}

}  // namespace ace
