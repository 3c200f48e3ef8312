#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "masseval/mask_core.hpp"

namespace masseval::testing {

/// Blobby random mask: a few rectangles and disks plus salt noise.
inline BinaryMask random_mask(std::mt19937& rng, int w, int h, double noise = 0.02) {
  BinaryMask m(w, h);
  std::uniform_int_distribution<int> shapes(0, 4);
  std::uniform_int_distribution<int> xs(0, w - 1);
  std::uniform_int_distribution<int> ys(0, h - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = shapes(rng);
  for (int s = 0; s < n; ++s) {
    const int cx = xs(rng);
    const int cy = ys(rng);
    const int rx = 1 + static_cast<int>(u(rng) * w / 3);
    const int ry = 1 + static_cast<int>(u(rng) * h / 3);
    const bool disk = u(rng) < 0.5;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x - cx) / rx;
        const double dy = static_cast<double>(y - cy) / ry;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) m.set(x, y);
      }
    }
  }
  for (auto& b : m.values()) {
    if (u(rng) < noise) b ^= 1;
  }
  return m;
}

/// Random label map over `classes` ids drawn from the table, built from
/// overlapping rectangles so regions have real boundaries.
inline LabelMap random_label_map(std::mt19937& rng, int w, int h, const ClassTable& table,
                                 int max_classes = 7, double ignore_fraction = 0.0) {
  const auto ids = table.ids();
  const int n_classes = std::min<int>(max_classes, static_cast<int>(ids.size()));
  std::uniform_int_distribution<int> pick(0, n_classes - 1);
  std::uniform_int_distribution<int> xs(0, w - 1);
  std::uniform_int_distribution<int> ys(0, h - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ClassId> data(static_cast<std::size_t>(w) * h, ids[static_cast<std::size_t>(pick(rng))]);
  const int rects = 3 + pick(rng) * 2;
  for (int r = 0; r < rects; ++r) {
    int x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const ClassId c = ids[static_cast<std::size_t>(pick(rng))];
    const bool round = u(rng) < 0.4;
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double rx = 0.5 * (x1 - x0) + 0.5, ry = 0.5 * (y1 - y0) + 0.5;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (round) {
          const double dx = (x - cx) / rx, dy = (y - cy) / ry;
          if (dx * dx + dy * dy > 1.0) continue;
        }
        data[static_cast<std::size_t>(y) * w + x] = c;
      }
    }
  }
  for (auto& v : data) {
    if (ignore_fraction > 0.0 && u(rng) < ignore_fraction) v = table.ignore_id();
  }
  return LabelMap(w, h, std::move(data), table);
}

/// Perturbs a label map: random pixels swapped to other classes, plus a
/// shifted rectangle, to produce an imperfect prediction.
inline LabelMap perturb(std::mt19937& rng, const LabelMap& gt, double flip = 0.05) {
  const auto ids = gt.table().ids();
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ClassId> data(gt.values().begin(), gt.values().end());
  const int w = gt.width(), h = gt.height();
  // Shift the whole map by one pixel in a random direction.
  const int sx = static_cast<int>(pick(rng) % 3) - 1;
  const int sy = static_cast<int>(pick(rng) % 3) - 1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int ox = std::clamp(x + sx, 0, w - 1), oy = std::clamp(y + sy, 0, h - 1);
      data[static_cast<std::size_t>(y) * w + x] = gt(ox, oy);
    }
  }
  for (auto& v : data) {
    if (v == gt.table().ignore_id()) v = ids[pick(rng)];
    if (u(rng) < flip) v = ids[pick(rng)];
  }
  return LabelMap(w, h, std::move(data), gt.table());
}

inline ProbMap random_prob_map(std::mt19937& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) {
    const double r = u(rng);
    // Include exact 0 and 1 so the clamp is exercised.
    x = r < 0.05 ? 0.0 : (r > 0.95 ? 1.0 : u(rng));
  }
  return ProbMap(w, h, std::move(v));
}

}  // namespace masseval::testing
