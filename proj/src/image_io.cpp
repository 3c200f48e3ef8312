#include "masseval/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

namespace masseval {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw_io(std::string("cannot open ") + path.string() + ": " + std::strerror(errno));
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void silent_warning(png_structp, png_const_charp) {}

// Decoded 8-bit rows with the requested transforms applied.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int color_type = 0;
  std::vector<std::uint8_t> pixels;
};

enum class ReadMode { index8, rgb };

Decoded decode_png(const std::filesystem::path& path, ReadMode mode) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw_io(path.string() + ": not a PNG file");
  }
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (!r.png) throw_io("png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw_io("png_create_info_struct failed");

  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(r.png))) {
    throw_io(path.string() + ": corrupt PNG data");
  }
  png_init_io(r.png, file.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  const int bit_depth = png_get_bit_depth(r.png, r.info);
  const int color_type = png_get_color_type(r.png, r.info);
  out.width = static_cast<int>(png_get_image_width(r.png, r.info));
  out.height = static_cast<int>(png_get_image_height(r.png, r.info));
  out.color_type = color_type;

  if (mode == ReadMode::index8) {
    if (bit_depth != 8) {
      throw_validation(path.string() + ": bit depth " + std::to_string(bit_depth) +
                       " is not 8");
    }
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_PALETTE) {
      throw_validation(path.string() + ": label maps must be single-channel or palette PNGs");
    }
    // No palette expansion: the stored index is the class id.
  } else {
    if (bit_depth == 16) png_set_strip_16(r.png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(r.png);
    }
    png_set_strip_alpha(r.png);
  }
  png_read_update_info(r.png, r.info);
  out.channels = png_get_channels(r.png, r.info);
  const auto rowbytes = png_get_rowbytes(r.png, r.info);
  out.pixels.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = out.pixels.data() + rowbytes * y;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return out;
}

void encode_png(const std::filesystem::path& path, int width, int height, int color_type,
                const std::uint8_t* pixels, std::size_t row_stride) {
  auto file = open_file(path, "wb");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (!w.png) throw_io("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw_io("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) {
    throw_io(path.string() + ": PNG write failed");
  }
  png_init_io(w.png, file.get());
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < height; ++y) {
    png_write_row(w.png, const_cast<png_bytep>(pixels + row_stride * static_cast<std::size_t>(y)));
  }
  png_write_end(w.png, nullptr);
  if (std::fflush(file.get()) != 0) throw_io(path.string() + ": write failed");
}

}  // namespace

Raster<std::uint8_t> read_png_index8(const std::filesystem::path& path) {
  auto d = decode_png(path, ReadMode::index8);
  return Raster<std::uint8_t>(d.width, d.height, std::move(d.pixels));
}

void write_png_gray8(const Raster<std::uint8_t>& image, const std::filesystem::path& path) {
  encode_png(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, image.values().data(),
             static_cast<std::size_t>(image.width()));
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  auto d = decode_png(path, ReadMode::rgb);
  return RgbImage{d.width, d.height, std::move(d.pixels)};
}

void write_png_rgb(const RgbImage& image, const std::filesystem::path& path) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw_validation("RGB image buffer does not match its dimensions");
  }
  encode_png(path, image.width, image.height, PNG_COLOR_TYPE_RGB, image.pixels.data(),
             static_cast<std::size_t>(image.width) * 3);
}

Raster<double> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || magic != "Pf") throw_validation(path.string() + ": not a grayscale PFM (\"Pf\")");
  if (width < 1 || height < 1) throw_validation(path.string() + ": invalid PFM dimensions");
  if (scale == 0.0 || !std::isfinite(scale)) throw_validation(path.string() + ": invalid PFM scale");
  in.get();  // single whitespace byte after the header

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint32_t> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
  if (static_cast<std::size_t>(in.gcount()) != n * 4) {
    throw_io(path.string() + ": truncated PFM payload");
  }
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = raw[i];
    if (file_little != host_little) bits = __builtin_bswap32(bits);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return Raster<double>(width, height, std::move(values));
}

void write_pfm(const Raster<double>& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write " + path.string());
  out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
  std::vector<std::uint32_t> raw(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(image[i]));
    if constexpr (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
    raw[i] = bits;
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw_io("write failed: " + path.string());
}

}  // namespace masseval
