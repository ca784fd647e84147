#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fddm/image.hpp"

namespace fddm::pipeline {

/// Lossless single-image file: "FDIM", u32 version, u32 width, u32 height,
/// then width*height float32 little-endian values, row-major.
inline constexpr std::uint32_t kArrayVersion = 1;
inline constexpr const char* kArrayExtension = ".fda";

std::vector<std::uint8_t> encode_array(const Image2D& img);
/// Throws FormatError on a bad magic, version or length.
Image2D decode_array(const std::vector<std::uint8_t>& bytes);

void write_array(const std::filesystem::path& path, const Image2D& img);
Image2D read_array(const std::filesystem::path& path);

/// 8-bit grayscale preview mapping [lo, hi] to [0, 255] with clamping.
void write_png_preview(const std::filesystem::path& path, const Image2D& img, double lo = -1.0,
                       double hi = 1.0);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lowercase hex SHA-256 of a byte buffer or file.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Array files in dir sorted by name; stem is the name without ".fda".
struct ArrayEntry {
  std::string stem;
  std::filesystem::path path;
};
std::vector<ArrayEntry> list_arrays(const std::filesystem::path& dir);

}  // namespace fddm::pipeline
