#include "fddm/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <unordered_map>

#include "fddm/error.hpp"
#include "fddm/pipeline/array_io.hpp"

namespace fddm::pipeline {

namespace {

constexpr char kMagic[8] = {'F', 'D', 'D', 'M', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void blobs(const std::vector<NamedBlob>& list) {
    u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& b : list) {
      str(b.name);
      const nn::Shape& s = b.value.shape;
      for (int d : {s.n, s.c, s.h, s.w}) u32(static_cast<std::uint32_t>(d));
      for (float v : b.value.data) u32(std::bit_cast<std::uint32_t>(v));
    }
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::FormatError, "checkpoint is truncated");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const std::uint8_t* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    const std::uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::vector<NamedBlob> blobs() {
    const std::uint32_t count = u32();
    std::vector<NamedBlob> list;
    for (std::uint32_t i = 0; i < count; ++i) {
      NamedBlob b;
      b.name = str();
      nn::Shape s;
      s.n = static_cast<int>(u32());
      s.c = static_cast<int>(u32());
      s.h = static_cast<int>(u32());
      s.w = static_cast<int>(u32());
      if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0 || s.numel() > (bytes_.size() - pos_) / 4) {
        throw Error(ErrorKind::FormatError, "checkpoint blob '" + b.name + "' has a bad shape");
      }
      b.value = nn::Tensor(s);
      for (float& v : b.value.data) v = std::bit_cast<float>(u32());
      list.push_back(std::move(b));
    }
    return list;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

const char* kind_name(ModelKind k) { return k == ModelKind::vae ? "vae" : "denoiser"; }

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.kind));
  w.str(ckpt.architecture);
  w.u64(ckpt.step);
  w.u64(ckpt.seed);
  w.blobs(ckpt.params);
  w.blobs(ckpt.ema);
  return std::move(w.out);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::FormatError, "not a checkpoint file");
  }
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw Error(ErrorKind::FormatError,
                "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(Checkpoint::kVersion) + ")");
  }
  Checkpoint c;
  const std::uint32_t kind = r.u32();
  if (kind > 1) throw Error(ErrorKind::FormatError, "unknown checkpoint model kind");
  c.kind = static_cast<ModelKind>(kind);
  c.architecture = r.str();
  c.step = r.u64();
  c.seed = r.u64();
  c.params = r.blobs();
  c.ema = r.blobs();
  if (!r.done()) throw Error(ErrorKind::FormatError, "trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorKind::MissingCheckpoint, "no checkpoint at " + path.string());
  }
  try {
    return deserialize(read_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FormatError) throw;
    throw Error(ErrorKind::FormatError, path.string() + ": " + e.detail());
  }
}

std::vector<NamedBlob> capture(const nn::ParamSet& params) {
  std::vector<NamedBlob> out;
  for (const auto& [name, var] : params.entries()) out.push_back(NamedBlob{name, var->value});
  return out;
}

std::vector<NamedBlob> capture(const nn::ParamSet& params, const std::vector<nn::Tensor>& values) {
  if (values.size() != params.size()) {
    throw Error(ErrorKind::ArchitectureMismatch, "value count differs from parameter count");
  }
  std::vector<NamedBlob> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back(NamedBlob{params.entries()[i].first, values[i]});
  }
  return out;
}

std::vector<nn::Tensor> ordered_values(const nn::ParamSet& params,
                                       const std::vector<NamedBlob>& blobs) {
  std::unordered_map<std::string, const NamedBlob*> by_name;
  for (const auto& b : blobs) by_name.emplace(b.name, &b);
  if (by_name.size() != params.size()) {
    throw Error(ErrorKind::ArchitectureMismatch,
                "checkpoint holds " + std::to_string(by_name.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  }
  std::vector<nn::Tensor> out;
  for (const auto& [name, var] : params.entries()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorKind::ArchitectureMismatch, "checkpoint lacks parameter '" + name + "'");
    }
    if (!(it->second->value.shape == var->value.shape)) {
      throw Error(ErrorKind::ArchitectureMismatch,
                  "parameter '" + name + "' is " + it->second->value.shape.str() +
                      " in the checkpoint but " + var->value.shape.str() + " in the model");
    }
    out.push_back(it->second->value);
  }
  return out;
}

void restore(const nn::ParamSet& params, const std::vector<NamedBlob>& blobs) {
  std::vector<nn::Tensor> values = ordered_values(params, blobs);
  for (std::size_t i = 0; i < values.size(); ++i) {
    params.entries()[i].second->value = std::move(values[i]);
  }
}

void require_architecture(const Checkpoint& ckpt, ModelKind kind, const std::string& architecture) {
  if (ckpt.kind != kind) {
    throw Error(ErrorKind::ArchitectureMismatch, std::string("expected a ") + kind_name(kind) +
                                                     " checkpoint, found " + kind_name(ckpt.kind));
  }
  if (ckpt.architecture != architecture) {
    throw Error(ErrorKind::ArchitectureMismatch, "checkpoint architecture '" + ckpt.architecture +
                                                     "' does not match configured '" +
                                                     architecture + "'");
  }
}

}  // namespace fddm::pipeline
