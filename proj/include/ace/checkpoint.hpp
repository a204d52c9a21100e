#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace ace {

// Container layout, all integers little-endian:
//   "ACEK" | u32 format version | u64 manifest length | manifest (JSON) | payloads
// The manifest holds run metadata under "meta" and, under "tensors", one
// {name, dtype, shape, offset, nbytes} record per tensor. Offsets are relative
// to the first payload byte. Payloads are raw little-endian, C order.

inline constexpr std::string_view kCheckpointMagic = "ACEK";
inline constexpr uint32_t kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  torch::Tensor value;
};

struct CheckpointData {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  /// nullptr if absent.
  const torch::Tensor* find(std::string_view name) const;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Supported dtypes: float32, float64, int64.
std::string encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
/// Throws CheckpointError with the path in the message on a missing file,
/// bad magic, version mismatch or truncated payload.
CheckpointData load_checkpoint(const std::filesystem::path& path);

}  // namespace ace
