// Writes a small dataset for the CLI smoke test into argv[1].

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "masseval/image_io.hpp"

using namespace masseval;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures DIR\n");
    return 1;
  }
  const fs::path root = argv[1];
  fs::remove_all(root);
  masseval::testing::write_eval_dataset(root, 3, 77, 40, 32);

  const auto table = ClassTable::canonical();
  fs::create_directories(root / "pseudo");
  fs::create_directories(root / "probs");
  std::mt19937 rng(78);
  for (int i = 0; i < 3; ++i) {
    const auto stem = masseval::testing::stem_name(i);
    const auto gt = load_label_map(root / "gt" / (stem + ".png"), table);
    const auto pseudo = masseval::testing::random_mask(rng, 40, 32);
    Raster<std::uint8_t> png(40, 32);
    for (std::size_t p = 0; p < png.size(); ++p) png[p] = pseudo[p] ? 255 : 0;
    write_png_gray8(png, root / "pseudo" / (stem + ".png"));
    std::vector<ProbMap> maps;
    for (auto id : table.ids()) maps.push_back(masseval::testing::random_prob_map(rng, 40, 32));
    save_prob_stack(ProbStack(maps, table), root / "probs", stem);
  }

  RgbImage rgb{24, 16, std::vector<std::uint8_t>(24 * 16 * 3)};
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i * 37);
  write_png_rgb(rgb, root / "photo.png");
  write_png_gray8(Raster<std::uint8_t>(24, 16, 1), root / "mask.png");

  fs::create_directories(root / "broken" / "gt");
  fs::copy(root / "gt", root / "broken" / "gt");
  std::ofstream(root / "broken" / "gt" / "img001.png") << "not a png";
  return 0;
}
