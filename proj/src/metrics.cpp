#include "masseval/metrics.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "masseval/morphology.hpp"

namespace masseval {

void MetricConfig::validate() const {
  if (!(biou_fraction > 0.0) || !std::isfinite(biou_fraction)) {
    throw_validation("biou_fraction must be > 0");
  }
  if (biou_min_d < 1) throw_validation("biou_min_d must be >= 1");
  if (!(bf1_tolerance >= 0.0) || !std::isfinite(bf1_tolerance)) {
    throw_validation("bf1_tolerance must be >= 0");
  }
}

int MetricConfig::effective_d(int width, int height) const {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  const auto scaled = static_cast<int>(std::round(biou_fraction * diag));
  return std::max(biou_min_d, scaled);
}

nlohmann::json MetricConfig::to_json() const {
  return {{"biou_fraction", biou_fraction},
          {"biou_min_d", biou_min_d},
          {"bf1_tolerance", bf1_tolerance},
          {"aggregation",
           aggregation == Aggregation::ratio_of_sums ? "ratio_of_sums" : "per_image_mean"},
          {"classes", classes.to_json()}};
}

MetricConfig MetricConfig::from_json(const nlohmann::json& j) {
  MetricConfig cfg;
  try {
    if (j.contains("biou_fraction")) cfg.biou_fraction = j.at("biou_fraction").get<double>();
    if (j.contains("biou_min_d")) cfg.biou_min_d = j.at("biou_min_d").get<int>();
    if (j.contains("bf1_tolerance")) cfg.bf1_tolerance = j.at("bf1_tolerance").get<double>();
    if (j.contains("aggregation")) {
      const auto a = j.at("aggregation").get<std::string>();
      if (a == "ratio_of_sums") {
        cfg.aggregation = Aggregation::ratio_of_sums;
      } else if (a == "per_image_mean") {
        cfg.aggregation = Aggregation::per_image_mean;
      } else {
        throw_validation("unknown aggregation '" + a + "'");
      }
    }
    if (j.contains("classes")) cfg.classes = ClassTable::from_json(j.at("classes"));
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed metric config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

struct PairCounts {
  std::uint64_t intersection = 0;
  std::uint64_t uni = 0;
};

PairCounts overlap(const BinaryMask& a, const BinaryMask& b, const BinaryMask& ignore) {
  PairCounts c;
  const auto av = a.values();
  const auto bv = b.values();
  const auto iv = ignore.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const std::uint8_t keep = iv[i] ^ 1;
    c.intersection += av[i] & bv[i] & keep;
    c.uni += (av[i] | bv[i]) & keep;
  }
  return c;
}

struct BoundaryCounts {
  std::uint64_t pred_matched = 0;
  std::uint64_t pred_total = 0;
  std::uint64_t gt_matched = 0;
  std::uint64_t gt_total = 0;
};

BinaryMask boundary_without_ignore(const BinaryMask& mask, const BinaryMask& ignore) {
  EdgeMap b = inner_boundary(mask);
  auto bv = b.values();
  const auto iv = ignore.values();
  for (std::size_t i = 0; i < bv.size(); ++i) bv[i] &= iv[i] ^ 1;
  return b;
}

std::uint64_t count_and(const BinaryMask& a, const BinaryMask& b) {
  std::uint64_t n = 0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) n += av[i] & bv[i];
  return n;
}

BoundaryCounts boundary_counts(const BinaryMask& pred, const BinaryMask& gt, double tolerance,
                               const BinaryMask& ignore) {
  const BinaryMask bp = boundary_without_ignore(pred, ignore);
  const BinaryMask bg = boundary_without_ignore(gt, ignore);
  BoundaryCounts c;
  c.pred_total = bp.popcount();
  c.gt_total = bg.popcount();
  if (c.pred_total > 0 && c.gt_total > 0) {
    c.pred_matched = count_and(bp, dilate(bg, tolerance));
    c.gt_matched = count_and(bg, dilate(bp, tolerance));
  }
  return c;
}

BoundaryF1 f1_from_counts(const BoundaryCounts& c) {
  if (c.pred_total == 0 && c.gt_total == 0) return {1.0, 1.0, 1.0};
  if (c.pred_total == 0 || c.gt_total == 0) return {0.0, 0.0, 0.0};
  BoundaryF1 r;
  r.precision = static_cast<double>(c.pred_matched) / static_cast<double>(c.pred_total);
  r.recall = static_cast<double>(c.gt_matched) / static_cast<double>(c.gt_total);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                      : 0.0;
  return r;
}

double ratio_or_one(const PairCounts& c) {
  return c.uni == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.uni);
}

void check_inputs(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& ignore,
                  const char* what) {
  require_same_shape(pred, gt, what);
  require_same_shape(pred, ignore, what);
}

// Everything one image contributes for one class.
struct ClassContribution {
  PairCounts region;
  PairCounts bands;
  BoundaryCounts boundary;
};

ClassContribution contribute(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& ignore,
                             double d, double tolerance) {
  ClassContribution c;
  c.region = overlap(pred, gt, ignore);
  if (c.region.uni == 0) return c;
  c.bands = overlap(band(pred, d), band(gt, d), ignore);
  c.boundary = boundary_counts(pred, gt, tolerance, ignore);
  return c;
}

void require_compatible(const LabelMap& pred, const LabelMap& gt) {
  if (!(pred.table() == gt.table())) throw_validation("prediction and ground truth class tables differ");
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw_validation("prediction and ground truth dimensions differ (" + std::to_string(pred.width()) +
                     "x" + std::to_string(pred.height()) + " vs " + std::to_string(gt.width()) + "x" +
                     std::to_string(gt.height()) + ")");
  }
}

template <typename Fn>
void for_each_class(const LabelMap& pred, const LabelMap& gt, const MetricConfig& cfg, Fn&& fn) {
  cfg.validate();
  require_compatible(pred, gt);
  const BinaryMask ignore = ignore_mask(gt);
  const double d = cfg.effective_d(gt.width(), gt.height());
  for (ClassId id : gt.table().ids()) {
    fn(id, contribute(class_mask(pred, id), class_mask(gt, id), ignore, d, cfg.bf1_tolerance));
  }
}

ClassScores scores_from(ClassId id, const ClassContribution& c) {
  ClassScores s;
  s.id = id;
  s.iou = ratio_or_one(c.region);
  s.biou = ratio_or_one(c.bands);
  const auto f = f1_from_counts(c.boundary);
  s.bf1_precision = f.precision;
  s.bf1_recall = f.recall;
  s.bf1 = f.f1;
  return s;
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& ignore) {
  check_inputs(pred, gt, ignore, "iou");
  return ratio_or_one(overlap(pred, gt, ignore));
}

double biou(const BinaryMask& pred, const BinaryMask& gt, double d, const BinaryMask& ignore) {
  check_inputs(pred, gt, ignore, "biou");
  if (d < 0.0) throw_validation("biou band width must be >= 0");
  return ratio_or_one(overlap(band(pred, d), band(gt, d), ignore));
}

BoundaryF1 bf1(const BinaryMask& pred, const BinaryMask& gt, double tolerance,
               const BinaryMask& ignore) {
  check_inputs(pred, gt, ignore, "bf1");
  if (tolerance < 0.0) throw_validation("bf1 tolerance must be >= 0");
  return f1_from_counts(boundary_counts(pred, gt, tolerance, ignore));
}

double IpqRecord::recompute() const {
  if (classes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : classes) sum += e.perimeter * e.perimeter / static_cast<double>(e.area);
  return sum / (4.0 * std::numbers::pi * static_cast<double>(classes.size()));
}

IpqRecord ipq(const LabelMap& map) {
  IpqRecord rec;
  for (ClassId id : map.table().ids()) {
    const BinaryMask m = class_mask(map, id);
    const auto area = m.popcount();
    if (area == 0) continue;
    rec.classes.push_back({id, contour_perimeter(m), area});
  }
  if (rec.classes.empty()) throw_validation("mIPQ of a label map with no annotated pixels");
  rec.n = static_cast<int>(rec.classes.size());
  rec.mipq = rec.recompute();
  return rec;
}

const ClassScores* EvalRecord::find(ClassId id) const {
  for (const auto& c : classes) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

nlohmann::json EvalRecord::to_json(const ClassTable& table) const {
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes) {
    cls.push_back({{"id", c.id},
                   {"name", table.name(c.id)},
                   {"iou", c.iou},
                   {"biou", c.biou},
                   {"bf1_precision", c.bf1_precision},
                   {"bf1_recall", c.bf1_recall},
                   {"bf1", c.bf1}});
  }
  return {{"image", image}, {"effective_d", effective_d}, {"classes", cls}};
}

EvalRecord evaluate_pair(const LabelMap& pred, const LabelMap& gt, const MetricConfig& cfg,
                         std::string image_id) {
  EvalRecord rec;
  rec.image = std::move(image_id);
  rec.effective_d = cfg.effective_d(gt.width(), gt.height());
  for_each_class(pred, gt, cfg, [&](ClassId id, const ClassContribution& c) {
    if (c.region.uni > 0) rec.classes.push_back(scores_from(id, c));
  });
  return rec;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
  iou_intersection += o.iou_intersection;
  iou_union += o.iou_union;
  biou_intersection += o.biou_intersection;
  biou_union += o.biou_union;
  bf1_pred_matched += o.bf1_pred_matched;
  bf1_pred_total += o.bf1_pred_total;
  bf1_gt_matched += o.bf1_gt_matched;
  bf1_gt_total += o.bf1_gt_total;
  iou_sum += o.iou_sum;
  biou_sum += o.biou_sum;
  bf1_sum += o.bf1_sum;
  images_present += o.images_present;
  return *this;
}

EvalRecord MetricAccumulator::add(const LabelMap& pred, const LabelMap& gt, const MetricConfig& cfg,
                                  std::string image_id) {
  EvalRecord rec;
  rec.image = std::move(image_id);
  rec.effective_d = cfg.effective_d(gt.width(), gt.height());
  for_each_class(pred, gt, cfg, [&](ClassId id, const ClassContribution& c) {
    ClassCounts& k = counts_[id];
    k.iou_intersection += c.region.intersection;
    k.iou_union += c.region.uni;
    k.biou_intersection += c.bands.intersection;
    k.biou_union += c.bands.uni;
    k.bf1_pred_matched += c.boundary.pred_matched;
    k.bf1_pred_total += c.boundary.pred_total;
    k.bf1_gt_matched += c.boundary.gt_matched;
    k.bf1_gt_total += c.boundary.gt_total;
    if (c.region.uni > 0) {
      const auto s = scores_from(id, c);
      k.iou_sum += s.iou;
      k.biou_sum += s.biou;
      k.bf1_sum += s.bf1;
      ++k.images_present;
      rec.classes.push_back(s);
    }
  });
  ++images_seen_;
  return rec;
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  for (const auto& [id, c] : other.counts_) counts_[id] += c;
  images_seen_ += other.images_seen_;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

FinalScores MetricAccumulator::finalize(Aggregation aggregation) const {
  FinalScores out;
  std::vector<double> ious;
  std::vector<double> bious;
  std::vector<double> bf1s;
  for (const auto& [id, c] : counts_) {
    FinalScores::PerClass pc;
    if (c.bf1_pred_total + c.bf1_gt_total > 0) {
      const double p = c.bf1_pred_total > 0 ? ratio(c.bf1_pred_matched, c.bf1_pred_total) : 0.0;
      const double r = c.bf1_gt_total > 0 ? ratio(c.bf1_gt_matched, c.bf1_gt_total) : 0.0;
      pc.bf1_precision = p;
      pc.bf1_recall = r;
    }
    if (aggregation == Aggregation::ratio_of_sums) {
      if (c.iou_union > 0) pc.iou = ratio(c.iou_intersection, c.iou_union);
      if (c.biou_union > 0) pc.biou = ratio(c.biou_intersection, c.biou_union);
      if (pc.bf1_precision) {
        const double p = *pc.bf1_precision;
        const double r = *pc.bf1_recall;
        pc.bf1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
      }
    } else if (c.images_present > 0) {
      const auto n = static_cast<double>(c.images_present);
      pc.iou = c.iou_sum / n;
      pc.biou = c.biou_sum / n;
      pc.bf1 = c.bf1_sum / n;
    }
    if (pc.iou) ious.push_back(*pc.iou);
    if (pc.biou) bious.push_back(*pc.biou);
    if (pc.bf1) bf1s.push_back(*pc.bf1);
    out.per_class.emplace(id, pc);
  }
  out.miou = mean_of(ious);
  out.mbiou = mean_of(bious);
  out.mbf1 = mean_of(bf1s);
  return out;
}

nlohmann::json MetricAccumulator::to_json(const ClassTable& table) const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, c] : counts_) {
    j[table.name(id)] = {{"iou_intersection", c.iou_intersection},
                         {"iou_union", c.iou_union},
                         {"biou_intersection", c.biou_intersection},
                         {"biou_union", c.biou_union},
                         {"bf1_pred_matched", c.bf1_pred_matched},
                         {"bf1_pred_total", c.bf1_pred_total},
                         {"bf1_gt_matched", c.bf1_gt_matched},
                         {"bf1_gt_total", c.bf1_gt_total},
                         {"images_present", c.images_present}};
  }
  return j;
}

MetricAccumulator accumulate(MetricAccumulator acc, const LabelMap& pred, const LabelMap& gt,
                             const MetricConfig& cfg) {
  acc.add(pred, gt, cfg);
  return acc;
}

}  // namespace masseval
