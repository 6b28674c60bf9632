#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "spongecake/spectrum.hpp"

namespace spongecake::tools {

/// RGB float image, row 0 at the top.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> rgb;  // (row * width + col) * 3 + channel

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0.0f) {}

  float& at(std::size_t row, std::size_t col, int c) { return rgb[(row * width + col) * 3 + c]; }
  float at(std::size_t row, std::size_t col, int c) const { return rgb[(row * width + col) * 3 + c]; }
  void set(std::size_t row, std::size_t col, const Spectrum& s);

  bool operator==(const Image&) const = default;
};

/// Little-endian PFM ("PF", scale -1). PFM stores rows bottom to top; the reader undoes that.
void write_pfm(const Image& image, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

/// 8-bit preview with the fixed tonemap x/(1+x) followed by gamma 2.2.
void write_png_preview(const Image& image, const std::filesystem::path& path);
std::uint8_t tonemap_8bit(float x);

/// Σ|a - b| / Σ|b| over all pixels and channels.
double relative_l1(const Image& a, const Image& b);

}  // namespace spongecake::tools
