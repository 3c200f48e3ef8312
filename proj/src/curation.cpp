#include "masseval/curation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "masseval/metrics.hpp"

namespace masseval {

void MergePolicy::validate(const ClassTable& table) const {
  if (new_class_id < ClassTable::kFirstExtensionId) {
    throw_validation("new class id must be >= 7, got " + std::to_string(new_class_id));
  }
  if (new_class_id == table.ignore_id()) throw_validation("new class id equals the ignore id");
  if (table.contains(new_class_id) && table.name(new_class_id) != new_class_name) {
    throw_validation("class id " + std::to_string(new_class_id) + " is already used by '" +
                     table.name(new_class_id) + "'");
  }
  if (auto existing = table.find(new_class_name); existing && *existing != new_class_id) {
    throw_validation("class name '" + new_class_name + "' already has id " +
                     std::to_string(*existing));
  }
  for (ClassId id : replaceable) {
    if (!table.contains(id)) {
      throw_validation("replaceable class id " + std::to_string(id) + " is not in the table");
    }
  }
}

nlohmann::json MergeReport::to_json(const std::string& image, const ClassTable& table) const {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [id, n] : conflicts) c[table.name(id)] = n;
  return {{"image", image}, {"assigned", assigned}, {"conflicts", c}};
}

MergeResult merge_pseudo(const LabelMap& gt, const BinaryMask& pseudo, const MergePolicy& policy) {
  require_same_shape(gt.raster(), pseudo, "merge");
  policy.validate(gt.table());
  ClassTable table = gt.table().contains(policy.new_class_id)
                         ? gt.table()
                         : gt.table().with_class(policy.new_class_id, policy.new_class_name);
  std::array<bool, 256> replaceable{};
  for (ClassId id : policy.replaceable) replaceable[id] = true;
  replaceable[policy.new_class_id] = true;

  std::vector<ClassId> out(gt.values().begin(), gt.values().end());
  MergeReport report;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!pseudo[i]) continue;
    const ClassId current = out[i];
    if (replaceable[current]) {
      out[i] = policy.new_class_id;
      ++report.assigned;
      continue;
    }
    ++report.conflicts[current];
    switch (policy.conflict_handling) {
      case ConflictHandling::skip:
        ++report.skipped_conflicts;
        break;
      case ConflictHandling::override_label:
        out[i] = policy.new_class_id;
        ++report.assigned;
        break;
      case ConflictHandling::error:
        throw_validation("pseudo mask overlaps protected class '" + gt.table().name(current) + "'");
    }
  }
  return {LabelMap(gt.width(), gt.height(), std::move(out), std::move(table)), std::move(report)};
}

std::vector<FactorMap> emit_training_weights(const LabelMap& gt, const LossConfig& cfg) {
  cfg.require_covers(gt.table());
  const BinaryMask ignore = ignore_mask(gt);
  std::vector<FactorMap> out;
  for (ClassId id : gt.table().ids()) {
    const bool precise = cfg.precise_classes.count(id) > 0;
    const double signed_lambda = precise ? cfg.lambda1 : -cfg.lambda2;
    WeightMap factors = weight_map(class_mask(gt, id), cfg.k);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      factors[i] = ignore[i] ? 0.0 : std::max(0.0, 1.0 + signed_lambda * factors[i]);
    }
    out.push_back({id, std::move(factors)});
  }
  return out;
}

nlohmann::json DatasetStats::to_json(const ClassTable& table) const {
  nlohmann::json frac = nlohmann::json::object();
  for (const auto& [id, f] : pixel_fraction) frac[table.name(id)] = f;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [n, count] : class_count_histogram) hist[std::to_string(n)] = count;
  return {{"image_count", image_count},
          {"diag_mean", diag_mean},
          {"diag_std", diag_std},
          {"mipq_mean", mipq_mean},
          {"mipq_std", mipq_std},
          {"mipq_images", mipq_images},
          {"pixel_fraction", frac},
          {"class_count_histogram", hist}};
}

void StatsAccumulator::add(const LabelMap& map) {
  diag_.add(map.diagonal());
  std::array<std::uint64_t, 256> counts{};
  for (ClassId v : map.values()) ++counts[v];
  int present = 0;
  for (ClassId id : map.table().ids()) {
    pixels_[id] += counts[id];
    present += counts[id] > 0;
  }
  ++histogram_[present];
  if (present > 0) mipq_.add(ipq(map).mipq);
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  diag_.n += other.diag_.n;
  diag_.sum += other.diag_.sum;
  diag_.sum_sq += other.diag_.sum_sq;
  mipq_.n += other.mipq_.n;
  mipq_.sum += other.mipq_.sum;
  mipq_.sum_sq += other.mipq_.sum_sq;
  for (const auto& [id, n] : other.pixels_) pixels_[id] += n;
  for (const auto& [k, n] : other.histogram_) histogram_[k] += n;
}

namespace {

// Population mean and standard deviation.
std::pair<double, double> mean_std(std::uint64_t n, double sum, double sum_sq) {
  if (n == 0) return {0.0, 0.0};
  const double count = static_cast<double>(n);
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace

DatasetStats StatsAccumulator::finalize() const {
  if (diag_.n == 0) throw_validation("dataset statistics of an empty stream");
  DatasetStats s;
  s.image_count = diag_.n;
  std::tie(s.diag_mean, s.diag_std) = mean_std(diag_.n, diag_.sum, diag_.sum_sq);
  std::tie(s.mipq_mean, s.mipq_std) = mean_std(mipq_.n, mipq_.sum, mipq_.sum_sq);
  s.mipq_images = mipq_.n;
  std::uint64_t total = 0;
  for (const auto& [id, n] : pixels_) total += n;
  for (const auto& [id, n] : pixels_) {
    s.pixel_fraction[id] = total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total);
  }
  s.class_count_histogram = histogram_;
  return s;
}

DatasetStats dataset_stats(const std::vector<LabelMap>& maps) {
  StatsAccumulator acc;
  for (const auto& m : maps) acc.add(m);
  return acc.finalize();
}

}  // namespace masseval
