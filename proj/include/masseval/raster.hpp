#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "masseval/error.hpp"

namespace masseval {

/// Row-major width x height grid of values.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw_validation("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                       std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw_validation("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                       std::to_string(height));
    }
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw_validation("raster data length does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* row(int y) noexcept { return data_.data() + index(0, y); }
  const T* row(int y) const noexcept { return data_.data() + index(0, y); }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw_validation(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                     "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

using ScalarField = Raster<double>;
using DistanceField = Raster<double>;
using WeightMap = Raster<double>;

/// Boolean raster stored one byte per pixel (0 or 1).
class BinaryMask : public Raster<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : Raster<std::uint8_t>(width, height, fill ? 1 : 0) {}
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  bool test(int x, int y) const { return (*this)(x, y) != 0; }
  void set(int x, int y, bool v = true) { (*this)(x, y) = v ? 1 : 0; }

  std::size_t popcount() const noexcept;
  bool empty() const noexcept { return popcount() == 0; }
  BinaryMask complement() const;
};

/// Edge and boundary sets share the mask representation.
using EdgeMap = BinaryMask;

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b);
BinaryMask operator|(const BinaryMask& a, const BinaryMask& b);

/// Probability raster; every value finite and within [0, 1].
class ProbMap : public Raster<double> {
 public:
  ProbMap() = default;
  ProbMap(int width, int height, double fill);
  ProbMap(int width, int height, std::vector<double> values);
};

}  // namespace masseval
