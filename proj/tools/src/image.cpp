#include "spongecake_tools/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "spongecake/binary_io.hpp"
#include "spongecake/errors.hpp"

namespace spongecake::tools {

void Image::set(std::size_t row, std::size_t col, const Spectrum& s) {
  for (int c = 0; c < 3; ++c) at(row, col, c) = static_cast<float>(s[c]);
}

void write_pfm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write image " + path.string());
  out << "PF\n" << image.width << ' ' << image.height << "\n-1.0\n";
  for (std::size_t r = image.height; r-- > 0;)
    for (std::size_t k = 0; k < image.width * 3; ++k)
      binio::write_le<float>(out, image.rgb[r * image.width * 3 + k]);
  if (!out) throw IoError("failed writing image " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || magic != "PF") throw FormatError(path.string() + " is not an RGB PFM file");
  if (scale >= 0.0) throw FormatError("big-endian PFM files are not supported");
  if (w == 0 || h == 0 || w > (1u << 15) || h > (1u << 15)) throw FormatError("implausible PFM size");
  in.get();  // single whitespace byte before the raster
  Image image(w, h);
  for (std::size_t r = h; r-- > 0;)
    for (std::size_t k = 0; k < w * 3; ++k) image.rgb[r * w * 3 + k] = binio::read_le<float>(in, "pixels");
  return image;
}

std::uint8_t tonemap_8bit(float x) {
  const double v = std::max(0.0, static_cast<double>(x));
  const double mapped = std::pow(v / (1.0 + v), 1.0 / 2.2);
  return static_cast<std::uint8_t>(std::lround(std::clamp(mapped, 0.0, 1.0) * 255.0));
}

namespace {

bool encode_png(std::FILE* file, const std::uint8_t* pixels, png_uint_32 width, png_uint_32 height) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 r = 0; r < height; ++r) png_write_row(png, pixels + std::size_t{r} * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void write_png_preview(const Image& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(image.rgb.size());
  std::transform(image.rgb.begin(), image.rgb.end(), pixels.begin(), tonemap_8bit);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot write preview " + path.string());
  if (!encode_png(file.get(), pixels.data(), static_cast<png_uint_32>(image.width),
                  static_cast<png_uint_32>(image.height)))
    throw IoError("failed writing preview " + path.string());
}

double relative_l1(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ParameterError("image sizes differ");
  double diff = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < a.rgb.size(); ++k) {
    diff += std::abs(static_cast<double>(a.rgb[k]) - b.rgb[k]);
    ref += std::abs(static_cast<double>(b.rgb[k]));
  }
  return ref > 0.0 ? diff / ref : (diff > 0.0 ? INFINITY : 0.0);
}

}  // namespace spongecake::tools
