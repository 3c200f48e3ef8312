#pragma once

#include <cstdint>
#include <filesystem>

#include "masseval/raster.hpp"

namespace masseval {

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const RgbImage&) const = default;
};

/// Reads an 8-bit single-channel or indexed-palette PNG. Palette images
/// yield the palette index, not the palette colour.
Raster<std::uint8_t> read_png_index8(const std::filesystem::path& path);
void write_png_gray8(const Raster<std::uint8_t>& image, const std::filesystem::path& path);

/// Reads any 8-bit PNG as RGB (gray is replicated, alpha dropped).
RgbImage read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const RgbImage& image, const std::filesystem::path& path);

/// Grayscale PFM ("Pf"). Rows are taken in stored order.
Raster<double> read_pfm(const std::filesystem::path& path);
/// Writes little-endian grayscale PFM, rows in raster order.
void write_pfm(const Raster<double>& image, const std::filesystem::path& path);

}  // namespace masseval
