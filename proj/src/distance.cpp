#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "masseval/morphology.hpp"

namespace masseval {
namespace {

constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();

// Lower envelope of parabolas (x - i)^2 + g(i)^2 along one row. `g` holds
// width + 2 entries: index 0 and width + 1 are the virtual frame columns.
// Integer arithmetic throughout; the separator uses floor division.
void envelope_row(const std::vector<std::int64_t>& g, std::int64_t inf, int width,
                  std::vector<int>& s, std::vector<std::int64_t>& t, std::int64_t* out) {
  const int n = width + 2;
  auto f = [&](std::int64_t x, int i) {
    const std::int64_t dx = x - i;
    return dx * dx + g[i] * g[i];
  };
  auto sep = [&](int i, int u) {
    return (static_cast<std::int64_t>(u) * u - static_cast<std::int64_t>(i) * i + g[u] * g[u] -
            g[i] * g[i]) /
           (2 * static_cast<std::int64_t>(u - i));
  };

  int q = -1;
  for (int u = 0; u < n; ++u) {
    if (g[u] >= inf) continue;
    while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
    if (q < 0) {
      q = 0;
      s[0] = u;
      t[0] = 0;
    } else {
      const std::int64_t w = 1 + sep(s[q], u);
      if (w < n) {
        ++q;
        s[q] = u;
        t[q] = w;
      }
    }
  }
  if (q < 0) {
    std::fill(out, out + width, kUnreached);
    return;
  }
  for (int u = n - 1; u >= 1; --u) {
    if (u <= width) out[u - 1] = f(u, s[q]);
    if (u == t[q]) --q;
  }
}

}  // namespace

Raster<std::int64_t> squared_distance_transform(const BinaryMask& source, bool frame_is_source) {
  const int w = source.width();
  const int h = source.height();
  const std::int64_t inf = static_cast<std::int64_t>(w) + h + 2;

  // Vertical pass: distance along the column to the nearest source.
  Raster<std::int64_t> vert(w, h, inf);
  {
    std::vector<std::int64_t> prev(w, frame_is_source ? 0 : inf);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* src = source.row(y);
      std::int64_t* dst = vert.row(y);
      for (int x = 0; x < w; ++x) {
        dst[x] = src[x] ? 0 : std::min(prev[x] + 1, inf);
        prev[x] = dst[x];
      }
    }
    std::fill(prev.begin(), prev.end(), frame_is_source ? 0 : inf);
    for (int y = h - 1; y >= 0; --y) {
      std::int64_t* dst = vert.row(y);
      for (int x = 0; x < w; ++x) {
        dst[x] = std::min(dst[x], prev[x] + 1);
        prev[x] = dst[x];
      }
    }
  }

  // Horizontal pass: exact lower envelope per row.
  Raster<std::int64_t> out(w, h, 0);
  std::vector<std::int64_t> g(static_cast<std::size_t>(w) + 2);
  std::vector<int> s(static_cast<std::size_t>(w) + 2);
  std::vector<std::int64_t> t(static_cast<std::size_t>(w) + 2);
  for (int y = 0; y < h; ++y) {
    const std::int64_t* row = vert.row(y);
    g[0] = frame_is_source ? 0 : inf;
    g[w + 1] = g[0];
    std::copy(row, row + w, g.begin() + 1);
    envelope_row(g, inf, w, s, t, out.row(y));
  }
  return out;
}

DistanceField distance_transform(const BinaryMask& source) {
  if (source.empty()) throw_validation("distance transform of an empty source set");
  const auto sq = squared_distance_transform(source);
  DistanceField out(source.width(), source.height());
  for (std::size_t i = 0; i < sq.size(); ++i) out[i] = std::sqrt(static_cast<double>(sq[i]));
  return out;
}

namespace {

// Set pixels having a 4-neighbour outside the set. Every pixel within the
// radius of `set` is also within the radius of one of these.
std::vector<std::pair<int, int>> set_frontier(const BinaryMask& set) {
  const int w = set.width();
  const int h = set.height();
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = set.row(y);
    const std::uint8_t* up = y > 0 ? set.row(y - 1) : nullptr;
    const std::uint8_t* down = y + 1 < h ? set.row(y + 1) : nullptr;
    for (int x = 0; x < w; ++x) {
      if (!row[x]) continue;
      const bool interior = (x == 0 || row[x - 1]) && (x + 1 == w || row[x + 1]) &&
                            (!up || up[x]) && (!down || down[x]);
      // Neighbours beyond the frame are not part of the image, so a pixel at
      // the frame whose in-frame neighbours are all set is still interior.
      if (!interior) out.emplace_back(x, y);
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& set, double radius) {
  if (radius < 0.0 || std::isnan(radius)) throw_validation("dilation radius must be >= 0");
  const int w = set.width();
  const int h = set.height();
  const double r2 = radius * radius;
  const auto frontier = set_frontier(set);
  BinaryMask out = set;
  if (frontier.empty()) return out;

  const int reach = static_cast<int>(std::min<double>(std::floor(radius), w + h));
  const double stamp_cost = static_cast<double>(frontier.size()) * (2.0 * reach + 1.0) * (2.0 * reach + 1.0);
  if (stamp_cost > 8.0 * static_cast<double>(set.size())) {
    const auto sq = squared_distance_transform(set);
    for (std::size_t i = 0; i < sq.size(); ++i) {
      out[i] = static_cast<double>(sq[i]) <= r2 ? 1 : 0;
    }
    return out;
  }

  // Half-widths of the digital disk per row offset.
  std::vector<int> half(static_cast<std::size_t>(reach) + 1);
  for (int dy = 0; dy <= reach; ++dy) {
    int hw = reach;
    const std::int64_t dy2 = static_cast<std::int64_t>(dy) * dy;
    while (hw >= 0 && static_cast<double>(static_cast<std::int64_t>(hw) * hw + dy2) > r2) --hw;
    half[dy] = hw;
  }
  for (const auto& [cx, cy] : frontier) {
    const int y0 = std::max(0, cy - reach);
    const int y1 = std::min(h - 1, cy + reach);
    for (int y = y0; y <= y1; ++y) {
      const int hw = half[static_cast<std::size_t>(std::abs(y - cy))];
      if (hw < 0) continue;
      const int x0 = std::max(0, cx - hw);
      const int x1 = std::min(w - 1, cx + hw);
      std::uint8_t* row = out.row(y);
      std::fill(row + x0, row + x1 + 1, std::uint8_t{1});
    }
  }
  return out;
}

BinaryMask band(const BinaryMask& mask, double d) {
  if (d < 0.0 || std::isnan(d)) throw_validation("band width must be >= 0");
  const int w = mask.width();
  const int h = mask.height();
  // Complement pixels plus the frame; distance to the frame is axis-aligned.
  BinaryMask near_complement = dilate(mask.complement(), d);
  BinaryMask out(w, h);
  const double d2 = d * d;
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* m = mask.row(y);
    const std::uint8_t* c = near_complement.row(y);
    std::uint8_t* o = out.row(y);
    const std::int64_t fy = std::min(y + 1, h - y);
    for (int x = 0; x < w; ++x) {
      if (!m[x]) continue;
      const std::int64_t fd = std::min<std::int64_t>(fy, std::min(x + 1, w - x));
      o[x] = (c[x] || static_cast<double>(fd * fd) <= d2) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace masseval
