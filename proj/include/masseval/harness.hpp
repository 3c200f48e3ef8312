#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "masseval/curation.hpp"
#include "masseval/image_io.hpp"
#include "masseval/losses.hpp"
#include "masseval/metrics.hpp"

namespace masseval {

/// Process exit codes of the batch commands.
enum class Status : int {
  ok = 0,
  validation_error = 1,
  io_error = 2,
  partial_failure = 3,
};

enum class ReportFormat { md, csv, json };
ReportFormat parse_report_format(const std::string& s);

struct CommandResult {
  Status status = Status::ok;
  std::string text;                   // rendered report for standard output
  std::vector<std::string> failures;  // "<file>: <reason>", for standard error
};

struct BatchOptions {
  int jobs = 0;  // 0 = logical CPU count
  ReportFormat format = ReportFormat::md;
  std::filesystem::path out;  // file or directory, per command
};

int resolve_jobs(int requested);

struct EvalJob {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  MetricConfig metrics;
  BatchOptions options;
};
/// Writes the evaluation artifact to options.out (when set) and renders the
/// per-class table.
CommandResult cmd_eval(const EvalJob& job);
/// The evaluation artifact, without touching the filesystem for output.
nlohmann::json eval_artifact(const EvalJob& job, std::vector<std::string>& failures);

struct StatsJob {
  std::filesystem::path dir;
  ClassTable classes = ClassTable::canonical();
  BatchOptions options;
};
CommandResult cmd_stats(const StatsJob& job);

struct EdgesJob {
  std::filesystem::path dir;
  int radius = 0;
  ClassTable classes = ClassTable::canonical();
  BatchOptions options;  // out = output directory
};
/// Writes `<stem>.edge.png` (255 = edge) per label map.
CommandResult cmd_edges(const EdgesJob& job);

struct WeightsJob {
  std::filesystem::path dir;
  LossConfig loss;
  ClassTable classes = ClassTable::canonical();
  BatchOptions options;  // out = output directory
};
/// Writes `<stem>.w<class_id>.pfm` factor maps per label map.
CommandResult cmd_weights(const WeightsJob& job);

struct MergeJob {
  std::filesystem::path gt_dir;
  std::filesystem::path pseudo_dir;
  MergePolicy policy;
  ClassTable classes = ClassTable::canonical();
  BatchOptions options;  // out = output directory
};
/// Writes merged label maps, `classes.json` and `manifest.jsonl`.
CommandResult cmd_merge(const MergeJob& job);

struct LossJob {
  std::filesystem::path pred_dir;  // <stem>.<id>.pfm and optional <stem>.edge.pfm
  std::filesystem::path gt_dir;
  LossConfig loss;
  ClassTable classes = ClassTable::canonical();
  BatchOptions options;
};
CommandResult cmd_loss(const LossJob& job);

struct BokehJob {
  std::filesystem::path image;
  std::filesystem::path mask;
  std::optional<ClassId> mask_class;  // unset: nonzero mask pixels are foreground
  double sigma = 8.0;
  double feather = 0.0;
  std::filesystem::path out;
};
CommandResult cmd_bokeh(const BokehJob& job);

struct ReportJob {
  std::vector<std::filesystem::path> artifacts;
  BatchOptions options;
};
CommandResult cmd_report(const ReportJob& job);

/// Separable Gaussian blur with replicate padding; sigma = 0 copies.
RgbImage gaussian_blur(const RgbImage& image, double sigma);
/// mask * image + (1 - mask) * blur(image), optionally feathering the mask.
RgbImage composite_bokeh(const RgbImage& image, const BinaryMask& mask, double sigma,
                         double feather = 0.0);

struct ReportRow {
  std::string method;
  std::vector<std::optional<double>> class_iou;  // per class column, fraction
  double miou = 0.0;
  double mbiou = 0.0;
  double mbf1 = 0.0;
};
struct ReportTable {
  std::vector<std::string> class_names;
  std::vector<ReportRow> rows;
};
ReportTable report_from_artifacts(const std::vector<nlohmann::json>& artifacts,
                                  const std::vector<std::string>& names);
std::string render_report(const ReportTable& table, ReportFormat format);

}  // namespace masseval
