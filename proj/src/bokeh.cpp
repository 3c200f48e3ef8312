#include <algorithm>
#include <cmath>

#include "masseval/harness.hpp"

namespace masseval {
namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution of `channels` interleaved planes, replicate padding.
std::vector<double> blur_planes(const std::vector<double>& src, int w, int h, int channels,
                                double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          s += k[static_cast<std::size_t>(i + r)] * src[(static_cast<std::size_t>(y) * w + xx) * channels + c];
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * channels + c] = s;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          s += k[static_cast<std::size_t>(i + r)] * tmp[(static_cast<std::size_t>(yy) * w + x) * channels + c];
        }
        out[(static_cast<std::size_t>(y) * w + x) * channels + c] = s;
      }
    }
  }
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

RgbImage gaussian_blur(const RgbImage& image, double sigma) {
  if (!(sigma >= 0.0)) throw_validation("sigma must be >= 0");
  if (sigma == 0.0) return image;
  std::vector<double> src(image.pixels.begin(), image.pixels.end());
  const auto blurred = blur_planes(src, image.width, image.height, 3, sigma);
  RgbImage out{image.width, image.height, std::vector<std::uint8_t>(blurred.size())};
  for (std::size_t i = 0; i < blurred.size(); ++i) out.pixels[i] = to_byte(blurred[i]);
  return out;
}

RgbImage composite_bokeh(const RgbImage& image, const BinaryMask& mask, double sigma, double feather) {
  if (image.width != mask.width() || image.height != mask.height()) {
    throw_validation("bokeh: image and mask dimensions differ");
  }
  if (!(feather >= 0.0)) throw_validation("feather must be >= 0");
  if (sigma == 0.0) return gaussian_blur(image, 0.0);
  const RgbImage background = gaussian_blur(image, sigma);
  std::vector<double> alpha(mask.values().begin(), mask.values().end());
  if (feather > 0.0) alpha = blur_planes(alpha, mask.width(), mask.height(), 1, feather);
  RgbImage out{image.width, image.height, std::vector<std::uint8_t>(image.pixels.size())};
  for (std::size_t p = 0; p < alpha.size(); ++p) {
    const double a = std::clamp(alpha[p], 0.0, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      out.pixels[i] = to_byte(a * image.pixels[i] + (1.0 - a) * background.pixels[i]);
    }
  }
  return out;
}

}  // namespace masseval
