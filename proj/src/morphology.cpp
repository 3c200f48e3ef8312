#include "masseval/morphology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace masseval {

EdgeMap inner_boundary(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  EdgeMap out(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = mask.row(y);
    const std::uint8_t* up = y > 0 ? mask.row(y - 1) : nullptr;
    const std::uint8_t* down = y + 1 < h ? mask.row(y + 1) : nullptr;
    std::uint8_t* o = out.row(y);
    for (int x = 0; x < w; ++x) {
      if (!row[x]) continue;
      const bool interior = x > 0 && row[x - 1] && x + 1 < w && row[x + 1] && up && up[x] &&
                            down && down[x];
      o[x] = interior ? 0 : 1;
    }
  }
  return out;
}

namespace {

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

void check_kernel(int k) {
  if (k < 1 || k % 2 == 0) {
    throw_validation("kernel size must be odd and positive, got " + std::to_string(k));
  }
}

}  // namespace

ScalarField box_filter(const ScalarField& field, int k) {
  check_kernel(k);
  const int w = field.width();
  const int h = field.height();
  const int r = k / 2;
  ScalarField horiz(w, h);
  for (int y = 0; y < h; ++y) {
    const double* src = field.row(y);
    double* dst = horiz.row(y);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dx = -r; dx <= r; ++dx) s += src[clamp_index(x + dx, w)];
      dst[x] = s;
    }
  }
  ScalarField out(w, h);
  const double norm = static_cast<double>(k) * static_cast<double>(k);
  std::vector<double> acc(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int dy = -r; dy <= r; ++dy) {
      const double* src = horiz.row(clamp_index(y + dy, h));
      for (int x = 0; x < w; ++x) acc[x] += src[x];
    }
    double* dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[x] = acc[x] / norm;
  }
  return out;
}

Raster<std::int32_t> box_count(const BinaryMask& mask, int k) {
  check_kernel(k);
  const int w = mask.width();
  const int h = mask.height();
  const int r = k / 2;
  Raster<std::int32_t> horiz(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = mask.row(y);
    std::int32_t* dst = horiz.row(y);
    std::int32_t s = 0;
    for (int dx = -r; dx <= r; ++dx) s += src[clamp_index(dx, w)];
    dst[0] = s;
    for (int x = 1; x < w; ++x) {
      s += src[clamp_index(x + r, w)] - src[clamp_index(x - r - 1, w)];
      dst[x] = s;
    }
  }
  Raster<std::int32_t> out(w, h);
  std::vector<std::int32_t> acc(static_cast<std::size_t>(w), 0);
  for (int dy = -r; dy <= r; ++dy) {
    const std::int32_t* src = horiz.row(clamp_index(dy, h));
    for (int x = 0; x < w; ++x) acc[x] += src[x];
  }
  std::copy(acc.begin(), acc.end(), out.row(0));
  for (int y = 1; y < h; ++y) {
    const std::int32_t* add = horiz.row(clamp_index(y + r, h));
    const std::int32_t* sub = horiz.row(clamp_index(y - r - 1, h));
    for (int x = 0; x < w; ++x) acc[x] += add[x] - sub[x];
    std::copy(acc.begin(), acc.end(), out.row(y));
  }
  return out;
}

namespace {

// Counterclockwise on screen (y grows downward): E, NE, N, NW, W, SW, S, SE.
constexpr std::array<int, 8> kDx = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy = {0, -1, -1, -1, 0, 1, 1, 1};

// Suzuki-Abe border following on a zero-padded label image. Each border is
// traced once; returns the summed chain length of all borders.
class BorderFollower {
 public:
  explicit BorderFollower(const BinaryMask& mask)
      : w_(mask.width() + 2), h_(mask.height() + 2),
        f_(static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_), 0) {
    for (int y = 0; y < mask.height(); ++y) {
      const std::uint8_t* row = mask.row(y);
      for (int x = 0; x < mask.width(); ++x) at(x + 1, y + 1) = row[x];
    }
  }

  double total_length() {
    double total = 0.0;
    int nbd = 1;
    for (int y = 1; y < h_ - 1; ++y) {
      for (int x = 1; x < w_ - 1; ++x) {
        const std::int32_t v = at(x, y);
        int start_dir;
        if (v == 1 && at(x - 1, y) == 0) {
          start_dir = 4;  // outer border, entered from the west
        } else if (v >= 1 && at(x + 1, y) == 0) {
          start_dir = 0;  // hole border, entered from the east
        } else {
          continue;
        }
        ++nbd;
        total += follow(x, y, start_dir, nbd);
      }
    }
    return total;
  }

 private:
  std::int32_t& at(int x, int y) {
    return f_[static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x)];
  }

  double follow(int x, int y, int start_dir, int nbd) {
    // Clockwise search for the last border pixel before the start.
    int first_dir = -1;
    for (int k = 0; k < 8; ++k) {
      const int d = (start_dir - k + 8) % 8;
      if (at(x + kDx[d], y + kDy[d]) != 0) {
        first_dir = d;
        break;
      }
    }
    if (first_dir < 0) {
      at(x, y) = -nbd;
      return 4.0;
    }
    const int x1 = x + kDx[first_dir];
    const int y1 = y + kDy[first_dir];
    int x3 = x;
    int y3 = y;
    int back_dir = first_dir;  // direction from (x3,y3) to the previous pixel
    double length = 0.0;
    for (;;) {
      int d4 = -1;
      bool east_zero_examined = false;
      for (int k = 1; k <= 8; ++k) {
        const int d = (back_dir + k) % 8;
        if (at(x3 + kDx[d], y3 + kDy[d]) != 0) {
          d4 = d;
          break;
        }
        if (d == 0) east_zero_examined = true;
      }
      if (east_zero_examined) {
        at(x3, y3) = -nbd;
      } else if (at(x3, y3) == 1) {
        at(x3, y3) = nbd;
      }
      length += (d4 % 2 == 0) ? 1.0 : std::numbers::sqrt2;
      const int x4 = x3 + kDx[d4];
      const int y4 = y3 + kDy[d4];
      if (x4 == x && y4 == y && x3 == x1 && y3 == y1) break;
      back_dir = (d4 + 4) % 8;
      x3 = x4;
      y3 = y4;
    }
    return length;
  }

  int w_;
  int h_;
  std::vector<std::int32_t> f_;
};

}  // namespace

double contour_perimeter(const BinaryMask& mask) {
  if (mask.empty()) return 0.0;
  return BorderFollower(mask).total_length();
}

EdgeMap semantic_edges(const LabelMap& map, int radius) {
  if (radius < 0) throw_validation("edge radius must be >= 0");
  const int w = map.width();
  const int h = map.height();
  const ClassId ignore = map.table().ignore_id();
  const auto& raster = map.raster();
  EdgeMap base(w, h);
  for (int y = 0; y < h; ++y) {
    const ClassId* row = raster.row(y);
    const ClassId* down = y + 1 < h ? raster.row(y + 1) : nullptr;
    std::uint8_t* b = base.row(y);
    std::uint8_t* bdown = y + 1 < h ? base.row(y + 1) : nullptr;
    for (int x = 0; x < w; ++x) {
      const ClassId c = row[x];
      if (c == ignore) continue;
      if (x + 1 < w && row[x + 1] != ignore && row[x + 1] != c) {
        b[x] = 1;
        b[x + 1] = 1;
      }
      if (down && down[x] != ignore && down[x] != c) {
        b[x] = 1;
        bdown[x] = 1;
      }
    }
  }
  if (radius == 0) return base;
  return dilate(base, static_cast<double>(radius));
}

}  // namespace masseval
