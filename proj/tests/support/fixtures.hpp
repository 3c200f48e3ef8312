#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "generators.hpp"
#include "masseval/mask_core.hpp"

namespace masseval::testing {

inline std::string stem_name(int i) {
  std::string s = std::to_string(i);
  return "img" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

/// Writes n random gt maps to `root/gt` and perturbed predictions to
/// `root/pred`, named img000.png, img001.png, ...
inline void write_eval_dataset(const std::filesystem::path& root, int n, unsigned seed, int w = 48,
                               int h = 40) {
  std::filesystem::create_directories(root / "gt");
  std::filesystem::create_directories(root / "pred");
  std::mt19937 rng(seed);
  const auto table = ClassTable::canonical();
  for (int i = 0; i < n; ++i) {
    const auto gt = random_label_map(rng, w, h, table, 7, 0.02);
    save_label_map(gt, root / "gt" / (stem_name(i) + ".png"));
    save_label_map(perturb(rng, gt), root / "pred" / (stem_name(i) + ".png"));
  }
}

}  // namespace masseval::testing
