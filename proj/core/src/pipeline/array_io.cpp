#include "fddm/pipeline/array_io.hpp"

#include <png.h>

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "fddm/error.hpp"

namespace fddm::pipeline {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace {

constexpr char kMagic[4] = {'F', 'D', 'I', 'M'};
constexpr std::size_t kHeader = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_array(const Image2D& img) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeader + img.size() * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kArrayVersion);
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  for (double v : img.pixels()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Image2D decode_array(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::FormatError, "not an FDIM array");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kArrayVersion) {
    throw Error(ErrorKind::FormatError, "unsupported array version " + std::to_string(version));
  }
  const std::uint32_t w = get_u32(bytes.data() + 8);
  const std::uint32_t h = get_u32(bytes.data() + 12);
  if (w == 0 || h == 0 || bytes.size() != kHeader + static_cast<std::size_t>(w) * h * 4) {
    throw Error(ErrorKind::FormatError, "array payload does not match its header");
  }
  std::vector<double> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = std::bit_cast<float>(get_u32(bytes.data() + kHeader + 4 * i));
  }
  return Image2D(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_array(const fs::path& path, const Image2D& img) { write_file(path, encode_array(img)); }

Image2D read_array(const fs::path& path) {
  try {
    return decode_array(read_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FormatError) throw;
    throw Error(ErrorKind::FormatError, path.string() + ": " + e.detail());
  }
}

void write_png_preview(const fs::path& path, const Image2D& img, double lo, double hi) {
  if (!(hi > lo)) throw Error(ErrorKind::DegenerateRange, "png preview range is empty");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw Error(ErrorKind::IoError, "cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::IoError, "libpng initialisation failed");
  }
  std::vector<png_byte> rows(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double u = std::clamp((img[i] - lo) / (hi - lo), 0.0, 1.0);
    rows[i] = static_cast<png_byte>(std::lround(u * 255.0));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "png encoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, rows.data() + static_cast<std::size_t>(y) * img.width());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::vector<ArrayEntry> list_arrays(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::DatasetError, "not a directory: " + dir.string());
  std::vector<ArrayEntry> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string ext = kArrayExtension;
    if (name.size() <= ext.size() || name.compare(name.size() - ext.size(), ext.size(), ext) != 0) {
      continue;
    }
    out.push_back(ArrayEntry{name.substr(0, name.size() - ext.size()), entry.path()});
  }
  std::sort(out.begin(), out.end(),
            [](const ArrayEntry& a, const ArrayEntry& b) { return a.stem < b.stem; });
  return out;
}

}  // namespace fddm::pipeline
