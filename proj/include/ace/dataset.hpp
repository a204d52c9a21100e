#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <torch/torch.h>

namespace ace {

/// 8-bit channel value to [-1, 1]: 2v/255 - 1.
float normalize_pixel(uint8_t v);
/// Inverse of normalize_pixel with rounding and clamping.
uint8_t denormalize_pixel(float x);

/// Decodes a PNG/JPEG, center-crops to a square, resizes to `resolution` and
/// returns a [3, R, R] float tensor in [-1, 1], RGB order.
/// Throws std::runtime_error if the file cannot be decoded.
torch::Tensor read_image(const std::filesystem::path& path, int64_t resolution);

/// Same, but keeps the original size (no crop, no resize).
torch::Tensor read_image(const std::filesystem::path& path);

/// Writes a [3, H, W] tensor in [-1, 1] as an 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Sorted list of *.png / *.jpg / *.jpeg files in `dir` (non-recursive).
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Decoded images of one domain, kept in memory.
class DomainDataset {
 public:
  DomainDataset(std::vector<std::filesystem::path> paths, torch::Tensor images, int64_t resolution,
                uint64_t shuffle_seed);

  int64_t size() const { return images_.size(0); }
  int64_t resolution() const { return resolution_; }
  const std::vector<std::filesystem::path>& paths() const { return paths_; }
  /// [N, 3, R, R]
  const torch::Tensor& images() const { return images_; }

  /// Permutation of [0, N) for `epoch`; a pure function of (file order, seed, epoch).
  std::vector<int64_t> epoch_order(int64_t epoch) const;

  /// Batch number `index` of the endless epoch-shuffled stream: items
  /// [index * batch, (index + 1) * batch) of concatenated epoch orders.
  torch::Tensor batch(int64_t index, int64_t batch_size) const;

  /// First `count` images in file order (clamped to size()).
  torch::Tensor head(int64_t count) const;

 private:
  std::vector<std::filesystem::path> paths_;
  torch::Tensor images_;
  int64_t resolution_;
  uint64_t seed_;
};

/// Loads every decodable image in `dir`. Undecodable files are skipped with
/// a warning on stderr; an error is thrown if none remain. Decoding fans out
/// over `workers` threads (0: take ACE_NUM_WORKERS from the environment, default 1).
DomainDataset load_domain_dataset(const std::filesystem::path& dir, int64_t resolution,
                                  uint64_t shuffle_seed = 0, int workers = 0);

}  // namespace ace
