#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "masseval/losses.hpp"
#include "masseval/mask_core.hpp"

namespace masseval {

enum class ConflictHandling { skip, override_label, error };

struct MergePolicy {
  ClassId new_class_id = ClassTable::kFirstExtensionId;
  std::string new_class_name = "new";
  std::set<ClassId> replaceable{0};
  ConflictHandling conflict_handling = ConflictHandling::skip;

  /// Throws unless new_class_id >= 7, is free in `table` (or already names
  /// the same class), and replaceable is a subset of the table.
  void validate(const ClassTable& table) const;
};

struct MergeReport {
  std::uint64_t assigned = 0;           // pseudo pixels labelled with the new class afterwards
  std::uint64_t skipped_conflicts = 0;  // pseudo pixels left untouched
  std::map<ClassId, std::uint64_t> conflicts;  // per original class, incl. the ignore id

  nlohmann::json to_json(const std::string& image, const ClassTable& table) const;
};

struct MergeResult {
  LabelMap labels;
  MergeReport report;
};

/// Relabels pseudo-positive pixels whose class is replaceable; the rest are
/// conflicts handled per policy. The output table gains the new class.
MergeResult merge_pseudo(const LabelMap& gt, const BinaryMask& pseudo, const MergePolicy& policy);

struct FactorMap {
  ClassId id = 0;
  WeightMap factors;
};

/// Per-class loss factor rasters: max(0, 1 + lambda1 W) for precise
/// classes, max(0, 1 - lambda2 W) for pseudo classes, 0 on ignore pixels.
std::vector<FactorMap> emit_training_weights(const LabelMap& gt, const LossConfig& cfg);

struct DatasetStats {
  std::uint64_t image_count = 0;
  double diag_mean = 0.0;
  double diag_std = 0.0;
  double mipq_mean = 0.0;
  double mipq_std = 0.0;
  std::uint64_t mipq_images = 0;
  std::map<ClassId, double> pixel_fraction;
  std::map<int, std::uint64_t> class_count_histogram;  // classes present -> images

  nlohmann::json to_json(const ClassTable& table) const;
};

/// Mergeable partial moments behind dataset_stats.
class StatsAccumulator {
 public:
  void add(const LabelMap& map);
  void merge(const StatsAccumulator& other);
  DatasetStats finalize() const;

 private:
  struct Moments {
    std::uint64_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    void add(double x) {
      ++n;
      sum += x;
      sum_sq += x * x;
    }
  };
  Moments diag_;
  Moments mipq_;
  std::map<ClassId, std::uint64_t> pixels_;
  std::map<int, std::uint64_t> histogram_;
};

DatasetStats dataset_stats(const std::vector<LabelMap>& maps);

}  // namespace masseval
