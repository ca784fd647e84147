#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fddm/nn/layers.hpp"

namespace fddm::pipeline {

enum class ModelKind : std::uint32_t { vae = 0, denoiser = 1 };

struct NamedBlob {
  std::string name;
  nn::Tensor value;
};

/// Binary layout (all integers little-endian):
///   "FDDMCKPT" | u32 version | u32 kind | str architecture | u64 step |
///   u64 seed | u32 n | n blobs | u32 m | m EMA blobs
/// where str is u32 length + bytes and a blob is str name, u32 n, c, h, w
/// and n*c*h*w float32 values.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelKind kind = ModelKind::vae;
  std::string architecture;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::vector<NamedBlob> params;
  std::vector<NamedBlob> ema;
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
/// Throws FormatError for a bad magic, unknown version or truncation.
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws MissingCheckpoint when the file does not exist.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedBlob> capture(const nn::ParamSet& params);
std::vector<NamedBlob> capture(const nn::ParamSet& params, const std::vector<nn::Tensor>& values);

/// Copies blobs into params by name. Throws ArchitectureMismatch on a
/// missing, extra or differently shaped parameter.
void restore(const nn::ParamSet& params, const std::vector<NamedBlob>& blobs);
/// Blob values in the order of params, with the same checks.
std::vector<nn::Tensor> ordered_values(const nn::ParamSet& params,
                                       const std::vector<NamedBlob>& blobs);

/// Throws ArchitectureMismatch unless kind and architecture match.
void require_architecture(const Checkpoint& ckpt, ModelKind kind, const std::string& architecture);

}  // namespace fddm::pipeline
