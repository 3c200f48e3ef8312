#include "masseval/raster.hpp"

#include <algorithm>
#include <cmath>

namespace masseval {

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : Raster<std::uint8_t>(width, height, std::move(bits)) {
  for (auto& b : values()) b = b ? 1 : 0;
}

std::size_t BinaryMask::popcount() const noexcept {
  std::size_t n = 0;
  for (auto b : values()) n += b;
  return n;
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out(width(), height());
  auto src = values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ^ 1;
  return out;
}

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask intersection");
  BinaryMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] & b[i];
  return out;
}

BinaryMask operator|(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask union");
  BinaryMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
  return out;
}

namespace {

void validate_probabilities(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      throw_validation("probability at index " + std::to_string(i) + " is not finite");
    }
    if (v < 0.0 || v > 1.0) {
      throw_validation("probability " + std::to_string(v) + " at index " + std::to_string(i) +
                       " is outside [0,1]");
    }
  }
}

}  // namespace

ProbMap::ProbMap(int width, int height, double fill) : Raster<double>(width, height, fill) {
  validate_probabilities(values());
}

ProbMap::ProbMap(int width, int height, std::vector<double> values)
    : Raster<double>(width, height, std::move(values)) {
  validate_probabilities(this->values());
}

}  // namespace masseval
