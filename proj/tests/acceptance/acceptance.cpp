// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and time budgets are fixed below.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "generators.hpp"
#include "masseval/curation.hpp"
#include "masseval/harness.hpp"
#include "masseval/image_io.hpp"
#include "masseval/losses.hpp"
#include "masseval/masseval.h"
#include "masseval/metrics.hpp"
#include "masseval/morphology.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace masseval;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr double kBiouRatioTol = 1e-12;
constexpr double kLossRelTol = 1e-9;
constexpr double kAntiSymTol = 1e-12;
constexpr double kIpqDiskLo = 0.95;
constexpr double kIpqDiskHi = 1.10;
constexpr double kIpqSquareTol = 0.05;
constexpr double kBudgetC1 = 1.0;
constexpr double kBudgetC3 = 30.0;
constexpr double kBudgetC4 = 30.0;
constexpr double kBudgetC5 = 5.0;
constexpr double kBudgetC6 = 30.0;
constexpr double kBudgetPerfSingle = 10.0;
constexpr double kBudgetPerfMemMiB = 1536.0;
constexpr double kMinSpeedup = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int decimals = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

// 1
Outcome biou_band_width() {
  const auto t0 = Clock::now();
  const LabelMap map(4096, 3112, ClassId{0}, ClassTable::canonical());
  const MetricConfig cfg;
  const int d = cfg.effective_d(map.width(), map.height());
  const double secs = seconds_since(t0);
  const bool ok = d == 5 && std::lround(map.diagonal()) == 5144 && secs < kBudgetC1;
  return {ok, "d=" + std::to_string(d) + " diag=" + fmt(map.diagonal(), 2) + " t=" + fmt(secs) + "s"};
}

// 2
Outcome bf1_tolerance_default() {
  const MetricConfig cfg;
  const auto j = cfg.to_json();
  const auto back = MetricConfig::from_json(nlohmann::json::parse(j.dump()));
  const bool same = back.to_json() == j && back.bf1_tolerance == cfg.bf1_tolerance &&
                    back.biou_fraction == cfg.biou_fraction && back.biou_min_d == cfg.biou_min_d &&
                    back.aggregation == cfg.aggregation && back.classes == cfg.classes;
  return {cfg.bf1_tolerance == 2.0 && same,
          "tolerance=" + fmt(cfg.bf1_tolerance, 1) + " round_trip=" + (same ? "identical" : "differs")};
}

// 3
Outcome biou_oracle() {
  const auto t0 = Clock::now();
  std::mt19937 rng(3001);
  std::uniform_int_distribution<int> dim(1, 64);
  int band_mismatch = 0;
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const int w = dim(rng), h = dim(rng);
    const auto p = masseval::testing::random_mask(rng, w, h);
    const auto g = masseval::testing::random_mask(rng, w, h);
    const BinaryMask none(w, h);
    const auto dp = oracle::complement_distances(p), dg = oracle::complement_distances(g);
    for (double d : {1.0, 2.0, 5.0}) {
      const auto bp = oracle::band_from(p, dp, d), bg = oracle::band_from(g, dg, d);
      band_mismatch += band(p, d) != bp;
      band_mismatch += band(g, d) != bg;
      worst = std::max(worst, std::abs(biou(p, g, d, none) - oracle::iou(bp, bg, none).value()));
    }
  }
  const double secs = seconds_since(t0);
  return {band_mismatch == 0 && worst < kBiouRatioTol && secs < kBudgetC3,
          "band_mismatches=" + std::to_string(band_mismatch) + " max|dratio|=" + sci(worst) +
              " t=" + fmt(secs) + "s"};
}

// 4
Outcome bf1_oracle() {
  const auto t0 = Clock::now();
  std::mt19937 rng(4001);
  std::uniform_int_distribution<int> dim(1, 64);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const int w = dim(rng), h = dim(rng);
    const auto p = masseval::testing::random_mask(rng, w, h);
    const auto g = masseval::testing::random_mask(rng, w, h);
    const BinaryMask none(w, h);
    const auto got = bf1(p, g, 2.0, none);
    const auto want = oracle::bf1(p, g, 2.0, none);
    mismatches += got.precision != want.precision || got.recall != want.recall || got.f1 != want.f1;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kBudgetC4,
          "mismatches=" + std::to_string(mismatches) + "/200 t=" + fmt(secs) + "s"};
}

// 5
Outcome analytic_ipq() {
  const auto t0 = Clock::now();
  const auto table = ClassTable::canonical();
  std::vector<ClassId> disk(201u * 201u, table.ignore_id());
  for (int y = 0; y < 201; ++y)
    for (int x = 0; x < 201; ++x)
      if ((x - 100) * (x - 100) + (y - 100) * (y - 100) < 100 * 100) disk[static_cast<std::size_t>(y) * 201 + x] = 1;
  const double q_disk = ipq(LabelMap(201, 201, disk, table)).mipq;
  const double q_square = ipq(LabelMap(101, 101, ClassId{1}, table)).mipq;
  const double secs = seconds_since(t0);
  const bool ok = q_disk >= kIpqDiskLo && q_disk <= kIpqDiskHi &&
                  std::abs(q_square - 4.0 / M_PI) <= kIpqSquareTol && q_square > q_disk && secs < kBudgetC5;
  return {ok, "disk=" + fmt(q_disk, 4) + " square=" + fmt(q_square, 4) + " (4/pi=" + fmt(4.0 / M_PI, 4) +
                  ") t=" + fmt(secs) + "s"};
}

// 6
Outcome loss_fidelity() {
  const auto t0 = Clock::now();
  constexpr double eps = 1e-7;
  std::mt19937 rng(6001);
  std::uniform_int_distribution<int> dim(2, 64);
  std::uniform_int_distribution<int> ncls(2, 8);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  double worst = 0;
  int inexact_zero = 0;
  for (int i = 0; i < 100; ++i) {
    const int w = dim(rng), h = dim(rng);
    const int n = ncls(rng);
    std::vector<ClassEntry> entries;
    for (int c = 0; c < n; ++c) entries.push_back({static_cast<ClassId>(c), "c" + std::to_string(c)});
    const ClassTable table(entries);
    const auto gt = masseval::testing::random_label_map(rng, w, h, table, n, 0.03);
    std::vector<ProbMap> maps;
    for (int c = 0; c < n; ++c) maps.push_back(masseval::testing::random_prob_map(rng, w, h));
    const ProbStack stack(maps, table);
    const auto pe = masseval::testing::random_prob_map(rng, w, h);
    const auto ig = ignore_mask(gt);
    const int k = 1 + 2 * (i % 8);
    const double l = 2.0 * lam(rng);

    auto cfg = LossConfig::defaults_for(table);
    cfg.k = k;
    cfg.lambda1 = 2.0 * lam(rng);
    cfg.lambda2 = lam(rng);
    double ncb_oracle = 0, ncb_zero = 0;
    for (auto id : table.ids()) {
      const auto g = class_mask(gt, id);
      const auto& p = stack.for_class(id);
      const auto ow = oracle::weight_map(g, k);
      worst = std::max(worst, rel_err(weighted_bce(p, g, weight_map(g, k), l, eps, ig),
                                      oracle::weighted_bce(p, g, ow, l, eps, &ig)));
      worst = std::max(worst, rel_err(dice_loss(p, g, eps, ig), oracle::dice(p, g, eps, &ig)));
      const double s = cfg.precise_classes.count(id) ? cfg.lambda1 : -cfg.lambda2;
      ncb_oracle += oracle::weighted_bce(p, g, ow, s, eps, &ig);

      // lambda = 0 against the plain mean, same summation order.
      double plain = 0;
      std::size_t cnt = 0;
      for (std::size_t q = 0; q < p.size(); ++q) {
        if (ig[q]) continue;
        plain += pixel_bce(p[q], g[q] != 0, eps);
        ++cnt;
      }
      plain = cnt ? plain / static_cast<double>(cnt) : 0.0;
      inexact_zero += weighted_bce(p, g, weight_map(g, k), 0.0, eps, ig) != plain;
      ncb_zero += plain;
    }
    worst = std::max(worst, rel_err(new_class_bce(stack, gt, cfg).bce_weighted, ncb_oracle));
    const auto edges = semantic_edges(gt, i % 3);
    worst = std::max(worst, rel_err(edge_loss(pe, edges, eps), oracle::edge_bce(pe, edges, eps)));

    auto zero = cfg;
    zero.lambda1 = zero.lambda2 = 0;
    inexact_zero += new_class_bce(stack, gt, zero).bce_weighted != ncb_zero;
  }
  const double secs = seconds_since(t0);
  return {worst < kLossRelTol && inexact_zero == 0 && secs < kBudgetC6,
          "max_rel_err=" + sci(worst) + " lambda0_inexact=" + std::to_string(inexact_zero) +
              " t=" + fmt(secs) + "s"};
}

// 7
Outcome weight_map_algebra() {
  std::mt19937 rng(7001);
  std::uniform_int_distribution<int> dim(1, 48);
  int nonzero_constant = 0;
  int out_of_range = 0;
  double worst = 0;
  for (int k : {1, 3, 5, 15}) {
    for (bool fill : {false, true}) {
      const auto w = weight_map(BinaryMask(dim(rng), dim(rng), fill), k);
      for (double v : w.values()) nonzero_constant += v != 0.0;
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const auto g = masseval::testing::random_mask(rng, dim(rng), dim(rng), 0.1);
    const int k = 1 + 2 * (i % 10);
    const auto w = weight_map(g, k), wc = weight_map(g.complement(), k);
    for (std::size_t p = 0; p < w.size(); ++p) {
      worst = std::max(worst, std::abs(wc[p] + w[p]));
      out_of_range += w[p] < -1.0 || w[p] > 1.0;
    }
  }
  return {nonzero_constant == 0 && out_of_range == 0 && worst <= kAntiSymTol,
          "constant_nonzero=" + std::to_string(nonzero_constant) + " max|W(~G)+W(G)|=" + sci(worst) +
              " out_of_range=" + std::to_string(out_of_range)};
}

// 8
Outcome curation() {
  std::mt19937 rng(8001);
  const auto table = ClassTable::canonical();
  int not_idempotent = 0;
  for (int i = 0; i < 50; ++i) {
    const auto gt = masseval::testing::random_label_map(rng, 32, 24, table, 7, 0.05);
    const auto p = masseval::testing::random_mask(rng, 32, 24);
    const auto once = merge_pseudo(gt, p, MergePolicy{});
    not_idempotent += !(merge_pseudo(once.labels, p, MergePolicy{}).labels == once.labels);
  }

  // 40 human pixels and 80 others pixels under the pseudo mask.
  std::vector<ClassId> v(400, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 10; x < 20; ++x) v[static_cast<std::size_t>(y) * 20 + x] = 1;
  const LabelMap gt(20, 20, v, table);
  BinaryMask pseudo(20, 20);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 20; ++x) pseudo.set(x, y);
  const auto r = merge_pseudo(gt, pseudo, MergePolicy{});
  const bool accounting = r.report.assigned == 80 && r.report.skipped_conflicts == 40 &&
                          r.report.conflicts.size() == 1 && r.report.conflicts.at(1) == 40 &&
                          class_mask(r.labels, 1).popcount() == 40;

  // Pseudo class 0 on the left half, k=3, lambda2=1.
  std::vector<ClassId> half(64);
  for (int i = 0; i < 64; ++i) half[static_cast<std::size_t>(i)] = i % 8 < 4 ? 0 : 1;
  LossConfig cfg;
  cfg.k = 3;
  cfg.lambda2 = 1;
  const auto maps = emit_training_weights(LabelMap(8, 8, half, table), cfg);
  const double edge = maps[0].factors(3, 4), interior = maps[0].factors(1, 4);
  const bool factors = std::abs(edge - 2.0 / 3.0) < 1e-15 && interior == 1.0 && edge < interior;
  return {not_idempotent == 0 && accounting && factors,
          "non_idempotent=" + std::to_string(not_idempotent) + "/50 conflicts(human)=" +
              std::to_string(r.report.conflicts.count(1) ? r.report.conflicts.at(1) : 0) +
              " assigned=" + std::to_string(r.report.assigned) + " edge_factor=" + fmt(edge, 4) +
              " interior_factor=" + fmt(interior, 4)};
}

std::string run_eval_c_api(const fs::path& root, int jobs, const fs::path& out) {
  const auto pred = (root / "pred").string(), gt = (root / "gt").string(), o = out.string();
  mse_batch_options opts{jobs, nullptr, o.c_str(), "json"};
  char* report = nullptr;
  const auto st = mse_cmd_eval(&opts, pred.c_str(), gt.c_str(), nullptr, &report);
  mse_string_free(report);
  if (st != MSE_OK) return "error: " + std::string(mse_last_error());
  return slurp(out);
}

// 9
Outcome determinism() {
  masseval::testing::TempDir dir("acc9");
  masseval::testing::write_eval_dataset(dir / "a", 50, 9001, 64, 48);
  // Same files written in shuffled order into a second tree.
  std::vector<int> order(50);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937(9002));
  for (const char* sub : {"gt", "pred"}) {
    fs::create_directories(dir / "b" / sub);
    for (int i : order) {
      const auto name = masseval::testing::stem_name(i) + ".png";
      fs::copy_file(dir / "a" / sub / name, dir / "b" / sub / name);
    }
  }
  const auto reference = run_eval_c_api(dir / "a", 1, dir / "out_a1.json");
  int differing = 0;
  for (int jobs : {4, 8}) differing += run_eval_c_api(dir / "a", jobs, dir / ("out_a" + std::to_string(jobs) + ".json")) != reference;
  for (int jobs : {1, 4, 8}) differing += run_eval_c_api(dir / "b", jobs, dir / ("out_b" + std::to_string(jobs) + ".json")) != reference;
  const bool parsed = reference.rfind("error", 0) != 0;
  return {parsed && differing == 0,
          "runs=6 differing=" + std::to_string(differing) + " bytes=" + std::to_string(reference.size())};
}

// 10
Outcome identity() {
  std::mt19937 rng(10001);
  MetricConfig cfg;
  MetricAccumulator acc;
  for (int i = 0; i < 20; ++i) {
    const auto m = masseval::testing::random_label_map(rng, 40 + i, 30 + 2 * i, cfg.classes, 7, 0.02);
    acc.add(m, m, cfg);
  }
  int bad = 0;
  std::string detail;
  for (auto agg : {Aggregation::ratio_of_sums, Aggregation::per_image_mean}) {
    const auto f = acc.finalize(agg);
    bad += f.miou != 1.0 || f.mbiou != 1.0 || f.mbf1 != 1.0;
    if (detail.empty()) detail = "mIoU=" + fmt(f.miou, 17) + " mBIoU=" + fmt(f.mbiou, 17) + " mBF1=" + fmt(f.mbf1, 17);
  }
  return {bad == 0, detail};
}

struct PerfNumbers {
  double single_secs = 0;
  double peak_mib = 0;
  double batch1_secs = 0;
  double batch8_secs = 0;
};

PerfNumbers measure_performance() {
  PerfNumbers out;
  MetricConfig cfg;
  {
    std::vector<ClassId> gt(4096u * 4096u), pred(4096u * 4096u);
    // Seven classes in irregular blobs; prediction shifted by two pixels.
    for (int y = 0; y < 4096; ++y)
      for (int x = 0; x < 4096; ++x) {
        const double v = std::sin(x * 0.004) + std::cos(y * 0.003) + 0.5 * std::sin((x + y) * 0.011);
        gt[static_cast<std::size_t>(y) * 4096 + x] = static_cast<ClassId>(std::clamp(int((v + 2.5) * 1.4), 0, 6));
      }
    for (int y = 0; y < 4096; ++y)
      for (int x = 0; x < 4096; ++x) pred[static_cast<std::size_t>(y) * 4096 + x] = gt[static_cast<std::size_t>(y) * 4096 + std::min(x + 2, 4095)];
    const LabelMap g(4096, 4096, std::move(gt), cfg.classes), p(4096, 4096, std::move(pred), cfg.classes);
    const auto t0 = Clock::now();
    MetricAccumulator acc;
    acc.add(p, g, cfg);
    out.single_secs = seconds_since(t0);
  }
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  out.peak_mib = static_cast<double>(ru.ru_maxrss) / 1024.0;

  masseval::testing::TempDir dir("acc11");
  masseval::testing::write_eval_dataset(dir.path(), 16, 11001, 1024, 768);
  EvalJob job;
  job.pred_dir = dir / "pred";
  job.gt_dir = dir / "gt";
  std::vector<std::string> failures;
  job.options.jobs = 1;
  auto t0 = Clock::now();
  eval_artifact(job, failures);
  out.batch1_secs = seconds_since(t0);
  job.options.jobs = 8;
  t0 = Clock::now();
  eval_artifact(job, failures);
  out.batch8_secs = seconds_since(t0);
  return out;
}

// 11. Runs in a child process so peak memory excludes the other criteria.
Outcome performance() {
  int fds[2];
  if (pipe(fds) != 0) return {false, "pipe failed"};
  const pid_t pid = fork();
  if (pid == 0) {
    close(fds[0]);
    PerfNumbers n{};
    try {
      n = measure_performance();
    } catch (...) {
      n.single_secs = -1;
    }
    const auto written = write(fds[1], &n, sizeof n);
    _exit(written == sizeof n ? 0 : 1);
  }
  close(fds[1]);
  PerfNumbers n{};
  const auto got = read(fds[0], &n, sizeof n);
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (got != sizeof n || n.single_secs < 0) return {false, "measurement child failed"};
  const double speedup = n.batch1_secs / n.batch8_secs;
  const bool ok = n.single_secs < kBudgetPerfSingle && n.peak_mib < kBudgetPerfMemMiB && speedup >= kMinSpeedup;
  return {ok, "4096^2 single=" + fmt(n.single_secs, 2) + "s peak=" + fmt(n.peak_mib, 0) + "MiB speedup(1->8)=" +
                  fmt(speedup, 2) + "x [" + fmt(n.batch1_secs, 2) + "s/" + fmt(n.batch8_secs, 2) +
                  "s] logical_cpus=" + std::to_string(std::thread::hardware_concurrency())};
}

// 12
Outcome bokeh() {
  std::mt19937 rng(12001);
  std::uniform_int_distribution<int> byte(0, 255);
  RgbImage img{37, 29, std::vector<std::uint8_t>(37u * 29u * 3u)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
  const auto some = masseval::testing::random_mask(rng, 37, 29);
  const bool lib = composite_bokeh(img, some, 0.0) == img && composite_bokeh(img, BinaryMask(37, 29, true), 6.0) == img;

  masseval::testing::TempDir dir("acc12");
  write_png_rgb(img, dir / "in.png");
  write_png_gray8(Raster<std::uint8_t>(37, 29, 1), dir / "all.png");
  Raster<std::uint8_t> partial(37, 29, 0);
  for (std::size_t i = 0; i < partial.size(); ++i) partial[i] = some[i];
  write_png_gray8(partial, dir / "some.png");
  const auto in = (dir / "in.png").string();
  const auto out0 = (dir / "s0.png").string(), out1 = (dir / "fg.png").string();
  const bool cmd0 = mse_cmd_bokeh(in.c_str(), (dir / "some.png").c_str(), -1, 0.0, 0.0, out0.c_str(), nullptr) == MSE_OK;
  const bool cmd1 = mse_cmd_bokeh(in.c_str(), (dir / "all.png").c_str(), -1, 6.0, 0.0, out1.c_str(), nullptr) == MSE_OK;
  const bool files = cmd0 && cmd1 && read_png_rgb(out0) == img && read_png_rgb(out1) == img;
  return {lib && files, std::string("library=") + (lib ? "identical" : "differs") + " command=" +
                            (files ? "identical" : "differs")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"BIoU band width on 4096x3112", biou_band_width},
      {"BF1 tolerance default and config round trip", bf1_tolerance_default},
      {"BIoU equals brute-force band oracle", biou_oracle},
      {"BF1 equals all-pairs oracle", bf1_oracle},
      {"analytic IPQ of disk and square", analytic_ipq},
      {"loss evaluators equal scalar oracles", loss_fidelity},
      {"weight map algebra", weight_map_algebra},
      {"curation idempotence, conflicts, factor maps", curation},
      {"eval determinism across workers and input order", determinism},
      {"identity suite", identity},
      {"performance envelope", performance},
      {"bokeh identity cases", bokeh},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
