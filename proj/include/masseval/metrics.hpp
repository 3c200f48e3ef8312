#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "masseval/mask_core.hpp"

namespace masseval {

enum class Aggregation {
  ratio_of_sums,   // dataset-level sums, then divide
  per_image_mean,  // average of per-image scores
};

struct MetricConfig {
  double biou_fraction = 0.001;
  int biou_min_d = 1;
  double bf1_tolerance = 2.0;
  Aggregation aggregation = Aggregation::ratio_of_sums;
  ClassTable classes = ClassTable::canonical();

  void validate() const;
  /// max(biou_min_d, round(biou_fraction * diagonal)), rounding half away from zero.
  int effective_d(int width, int height) const;

  nlohmann::json to_json() const;
  static MetricConfig from_json(const nlohmann::json& j);
};

struct BoundaryF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// |P and G| / |P or G| over non-ignore pixels; 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& ignore);
/// IoU of the inner bands of width d.
double biou(const BinaryMask& pred, const BinaryMask& gt, double d, const BinaryMask& ignore);
/// Threshold-matched boundary precision/recall/F1 with Euclidean tolerance.
BoundaryF1 bf1(const BinaryMask& pred, const BinaryMask& gt, double tolerance,
               const BinaryMask& ignore);

struct IpqRecord {
  struct Entry {
    ClassId id = 0;
    double perimeter = 0.0;
    std::uint64_t area = 0;
  };
  std::vector<Entry> classes;  // present classes only
  int n = 0;
  double mipq = 0.0;

  /// Recomputes the mean quotient from the stored perimeters and areas.
  double recompute() const;
};

/// Mean isoperimetric quotient L^2 / (4 pi A) over the classes present.
IpqRecord ipq(const LabelMap& map);

struct ClassScores {
  ClassId id = 0;
  double iou = 0.0;
  double biou = 0.0;
  double bf1_precision = 0.0;
  double bf1_recall = 0.0;
  double bf1 = 0.0;
};

struct EvalRecord {
  std::string image;
  int effective_d = 0;
  std::vector<ClassScores> classes;  // classes present in gt or pred, ascending id

  const ClassScores* find(ClassId id) const;
  nlohmann::json to_json(const ClassTable& table) const;
};

EvalRecord evaluate_pair(const LabelMap& pred, const LabelMap& gt, const MetricConfig& cfg,
                         std::string image_id = {});

/// Per-class integer tallies plus per-image score sums.
struct ClassCounts {
  std::uint64_t iou_intersection = 0;
  std::uint64_t iou_union = 0;
  std::uint64_t biou_intersection = 0;
  std::uint64_t biou_union = 0;
  std::uint64_t bf1_pred_matched = 0;
  std::uint64_t bf1_pred_total = 0;
  std::uint64_t bf1_gt_matched = 0;
  std::uint64_t bf1_gt_total = 0;

  double iou_sum = 0.0;
  double biou_sum = 0.0;
  double bf1_sum = 0.0;
  std::uint64_t images_present = 0;

  ClassCounts& operator+=(const ClassCounts& o);
  bool operator==(const ClassCounts&) const = default;
};

struct FinalScores {
  struct PerClass {
    std::optional<double> iou;
    std::optional<double> biou;
    std::optional<double> bf1_precision;
    std::optional<double> bf1_recall;
    std::optional<double> bf1;
  };
  std::map<ClassId, PerClass> per_class;
  double miou = 0.0;
  double mbiou = 0.0;
  double mbf1 = 0.0;
};

class MetricAccumulator {
 public:
  MetricAccumulator() = default;

  /// Adds one image pair; returns that pair's per-image record.
  EvalRecord add(const LabelMap& pred, const LabelMap& gt, const MetricConfig& cfg,
                 std::string image_id = {});
  void merge(const MetricAccumulator& other);

  const std::map<ClassId, ClassCounts>& counts() const noexcept { return counts_; }
  std::uint64_t images_seen() const noexcept { return images_seen_; }

  FinalScores finalize(Aggregation aggregation = Aggregation::ratio_of_sums) const;

  nlohmann::json to_json(const ClassTable& table) const;

  bool operator==(const MetricAccumulator&) const = default;

 private:
  std::map<ClassId, ClassCounts> counts_;
  std::uint64_t images_seen_ = 0;
};

/// Adds one image pair to `acc` and returns the updated accumulator.
MetricAccumulator accumulate(MetricAccumulator acc, const LabelMap& pred, const LabelMap& gt,
                             const MetricConfig& cfg);

}  // namespace masseval
