#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace stab360 {

/// 8-bit raster, 1 (gray) or 3 (RGB) interleaved channels, rows top to bottom.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c) {}

  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Binary PGM (P5) or PPM (P6) with maxval <= 255.
Image read_pnm(std::istream& in);
Image load_pnm(const std::filesystem::path& path);
void write_pnm(std::ostream& out, const Image& image);
void save_pnm(const std::filesystem::path& path, const Image& image);

/// Single-channel little-endian PFM (rows stored bottom to top).
void save_pfm(const std::filesystem::path& path, int width, int height,
              const std::vector<float>& values);

}  // namespace stab360
