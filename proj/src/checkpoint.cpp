#include "ace/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ace {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are written in host order");

namespace {

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32:
      return "f32";
    case torch::kFloat64:
      return "f64";
    case torch::kInt64:
      return "i64";
    default:
      throw CheckpointError(std::string("unsupported tensor dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_name(const std::string& name) {
  if (name == "f32") return torch::kFloat32;
  if (name == "f64") return torch::kFloat64;
  if (name == "i64") return torch::kInt64;
  throw CheckpointError("unknown dtype '" + name + "' in manifest");
}

template <typename T>
void put_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::string_view bytes, size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

const torch::Tensor* CheckpointData::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

std::string encode_checkpoint(const CheckpointData& data) {
  nlohmann::json records = nlohmann::json::array();
  std::vector<torch::Tensor> payloads;
  uint64_t offset = 0;
  for (const auto& [name, value] : data.tensors) {
    auto t = value.detach().contiguous().cpu();
    const auto nbytes = static_cast<uint64_t>(t.numel() * t.element_size());
    records.push_back({{"name", name},
                       {"dtype", dtype_name(t.scalar_type())},
                       {"shape", t.sizes().vec()},
                       {"offset", offset},
                       {"nbytes", nbytes}});
    offset += nbytes;
    payloads.push_back(std::move(t));
  }
  const std::string manifest = nlohmann::json{{"meta", data.meta}, {"tensors", records}}.dump();

  std::string out;
  out.reserve(16 + manifest.size() + offset);
  out.append(kCheckpointMagic);
  put_le<uint32_t>(out, kCheckpointFormatVersion);
  put_le<uint64_t>(out, manifest.size());
  out.append(manifest);
  for (const auto& t : payloads) {
    out.append(static_cast<const char*>(t.data_ptr()), static_cast<size_t>(t.numel() * t.element_size()));
  }
  return out;
}

CheckpointData decode_checkpoint(std::string_view bytes) {
  constexpr size_t header = 4 + sizeof(uint32_t) + sizeof(uint64_t);
  if (bytes.size() < header || bytes.substr(0, 4) != kCheckpointMagic) {
    throw CheckpointError("not an ACE checkpoint (bad magic)");
  }
  const auto version = get_le<uint32_t>(bytes, 4);
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointFormatVersion) + ")");
  }
  const auto manifest_len = get_le<uint64_t>(bytes, 8);
  if (bytes.size() - header < manifest_len) throw CheckpointError("truncated checkpoint manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(header, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  const auto payload = bytes.substr(header + manifest_len);

  CheckpointData out;
  try {
    out.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& rec : manifest.at("tensors")) {
      const auto name = rec.at("name").get<std::string>();
      const auto dtype = dtype_from_name(rec.at("dtype").get<std::string>());
      const auto shape = rec.at("shape").get<std::vector<int64_t>>();
      const auto offset = rec.at("offset").get<uint64_t>();
      const auto nbytes = rec.at("nbytes").get<uint64_t>();
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
      if (static_cast<uint64_t>(t.numel() * t.element_size()) != nbytes || offset + nbytes > payload.size()) {
        throw CheckpointError("tensor '" + name + "' payload is truncated or inconsistent");
      }
      std::memcpy(t.data_ptr(), payload.data() + offset, nbytes);
      out.tensors.push_back({name, std::move(t)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_checkpoint(data);
  // the final path only ever holds a complete file
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace ace
