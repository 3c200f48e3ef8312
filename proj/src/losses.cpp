#include "masseval/losses.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "masseval/morphology.hpp"

namespace masseval {

LossConfig LossConfig::defaults_for(const ClassTable& table) {
  LossConfig cfg;
  cfg.precise_classes.clear();
  cfg.pseudo_classes.clear();
  for (ClassId id : table.ids()) {
    if (id >= 1 && id <= 6) {
      cfg.precise_classes.insert(id);
    } else {
      cfg.pseudo_classes.insert(id);
    }
  }
  return cfg;
}

void LossConfig::validate() const {
  if (k < 1 || k % 2 == 0) throw_validation("k must be odd and positive");
  if (!(lambda >= 0.0) || !(lambda1 >= 0.0)) throw_validation("lambda and lambda1 must be >= 0");
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) throw_validation("lambda2 must be within [0,1]");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw_validation("epsilon must be within (0, 0.5)");
  if (edge_radius < 0) throw_validation("edge_radius must be >= 0");
  for (ClassId id : precise_classes) {
    if (pseudo_classes.count(id)) {
      throw_validation("class id " + std::to_string(id) + " is both precise and pseudo");
    }
  }
}

void LossConfig::require_covers(const ClassTable& table) const {
  validate();
  for (ClassId id : table.ids()) {
    if (!precise_classes.count(id) && !pseudo_classes.count(id)) {
      throw_validation("class id " + std::to_string(id) + " is neither precise nor pseudo");
    }
  }
  for (const auto* set : {&precise_classes, &pseudo_classes}) {
    for (ClassId id : *set) {
      if (!table.contains(id)) {
        throw_validation("loss config names class id " + std::to_string(id) +
                         " absent from the class table");
      }
    }
  }
}

nlohmann::json LossConfig::to_json() const {
  return {{"k", k},
          {"lambda", lambda},
          {"lambda1", lambda1},
          {"lambda2", lambda2},
          {"epsilon", epsilon},
          {"edge_radius", edge_radius},
          {"decoupled", decoupled},
          {"precise_classes", precise_classes},
          {"pseudo_classes", pseudo_classes}};
}

LossConfig LossConfig::from_json(const nlohmann::json& j, const ClassTable& table) {
  LossConfig cfg = defaults_for(table);
  try {
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("lambda1")) cfg.lambda1 = j.at("lambda1").get<double>();
    if (j.contains("lambda2")) cfg.lambda2 = j.at("lambda2").get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("edge_radius")) cfg.edge_radius = j.at("edge_radius").get<int>();
    if (j.contains("decoupled")) cfg.decoupled = j.at("decoupled").get<bool>();
    if (j.contains("precise_classes")) {
      cfg.precise_classes = j.at("precise_classes").get<std::set<ClassId>>();
    }
    if (j.contains("pseudo_classes")) {
      cfg.pseudo_classes = j.at("pseudo_classes").get<std::set<ClassId>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed loss config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json LossReport::to_json(const ClassTable& table) const {
  nlohmann::json pc = nlohmann::json::array();
  for (const auto& c : per_class) {
    pc.push_back({{"id", c.id}, {"name", table.name(c.id)}, {"bce", c.bce}, {"dice", c.dice}});
  }
  return {{"bce_weighted", bce_weighted},
          {"dice", dice},
          {"edge", edge},
          {"total_partial", total_partial},
          {"per_class", pc}};
}

WeightMap weight_map(const BinaryMask& gt, int k) {
  const auto counts = box_count(gt, k);
  const double area = static_cast<double>(k) * static_cast<double>(k);
  const auto kk = static_cast<std::int64_t>(k) * k;
  WeightMap w(gt.width(), gt.height());
  // (G k^2 - count) / k^2 keeps W(not G) == -W(G) bit for bit.
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<double>(gt[i] * kk - counts[i]) / area;
  }
  return w;
}

double pixel_bce(double p, bool g, double epsilon) {
  const double q = std::clamp(p, epsilon, 1.0 - epsilon);
  return g ? -std::log(q) : -std::log1p(-q);
}

namespace {

// Mean of bce * max(0, 1 + sign * lambda * W) over non-ignore pixels.
// Returns {sum, count} so callers can pool several maps.
struct MeanParts {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

MeanParts weighted_bce_parts(const ProbMap& pred, const BinaryMask& gt, const WeightMap& w,
                             double signed_lambda, double epsilon, const BinaryMask* ignore) {
  require_same_shape(pred, gt, "weighted bce");
  require_same_shape(pred, w, "weighted bce");
  if (ignore) require_same_shape(pred, *ignore, "weighted bce");
  MeanParts parts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (ignore && (*ignore)[i]) continue;
    const double factor = std::max(0.0, 1.0 + signed_lambda * w[i]);
    parts.sum += pixel_bce(pred[i], gt[i] != 0, epsilon) * factor;
    ++parts.count;
  }
  return parts;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw_validation("epsilon must be within (0, 0.5)");
}

}  // namespace

double weighted_bce(const ProbMap& pred, const BinaryMask& gt, const WeightMap& w, double lambda,
                    double epsilon) {
  check_epsilon(epsilon);
  return weighted_bce_parts(pred, gt, w, lambda, epsilon, nullptr).mean();
}

double weighted_bce(const ProbMap& pred, const BinaryMask& gt, const WeightMap& w, double lambda,
                    double epsilon, const BinaryMask& ignore) {
  check_epsilon(epsilon);
  return weighted_bce_parts(pred, gt, w, lambda, epsilon, &ignore).mean();
}

namespace {

double dice_impl(const ProbMap& pred, const BinaryMask& gt, double epsilon, const BinaryMask* ignore) {
  require_same_shape(pred, gt, "dice");
  if (ignore) require_same_shape(pred, *ignore, "dice");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (ignore && (*ignore)[i]) continue;
    const double g = gt[i];
    inter += pred[i] * g;
    sum_p += pred[i];
    sum_g += g;
  }
  return 1.0 - (2.0 * inter + epsilon) / (sum_p + sum_g + epsilon);
}

}  // namespace

double dice_loss(const ProbMap& pred, const BinaryMask& gt, double epsilon) {
  return dice_impl(pred, gt, epsilon, nullptr);
}

double dice_loss(const ProbMap& pred, const BinaryMask& gt, double epsilon, const BinaryMask& ignore) {
  return dice_impl(pred, gt, epsilon, &ignore);
}

double edge_loss(const ProbMap& pred_edge, const EdgeMap& gt_edge, double epsilon) {
  require_same_shape(pred_edge, gt_edge, "edge loss");
  check_epsilon(epsilon);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_edge.size(); ++i) {
    sum += pixel_bce(pred_edge[i], gt_edge[i] != 0, epsilon);
  }
  return sum / static_cast<double>(pred_edge.size());
}

namespace {

void require_stack_matches(const ProbStack& pred, const LabelMap& gt) {
  if (!(pred.table() == gt.table())) throw_validation("probability stack and label map class tables differ");
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw_validation("probability stack and label map dimensions differ");
  }
}

}  // namespace

LossReport new_class_bce(const ProbStack& pred, const LabelMap& gt, const LossConfig& cfg) {
  require_stack_matches(pred, gt);
  cfg.require_covers(gt.table());
  const BinaryMask ignore = ignore_mask(gt);
  LossReport report;
  for (ClassId id : gt.table().ids()) {
    const BinaryMask g = class_mask(gt, id);
    const WeightMap w = weight_map(g, cfg.k);
    const bool precise = cfg.precise_classes.count(id) > 0;
    const double signed_lambda = precise ? cfg.lambda1 : -cfg.lambda2;
    const double term =
        weighted_bce_parts(pred.for_class(id), g, w, signed_lambda, cfg.epsilon, &ignore).mean();
    report.per_class.push_back({id, term, 0.0});
    report.bce_weighted += term;
  }
  report.total_partial = report.bce_weighted;
  return report;
}

LossReport total_loss(const ProbStack& pred, const ProbMap* pred_edge, const LabelMap& gt,
                      const LossConfig& cfg) {
  require_stack_matches(pred, gt);
  cfg.require_covers(gt.table());
  const BinaryMask ignore = ignore_mask(gt);
  LossReport report;
  MeanParts pooled;
  double dice_sum = 0.0;
  for (ClassId id : gt.table().ids()) {
    const BinaryMask g = class_mask(gt, id);
    const WeightMap w = weight_map(g, cfg.k);
    double signed_lambda = cfg.lambda;
    if (cfg.decoupled) {
      signed_lambda = cfg.precise_classes.count(id) ? cfg.lambda1 : -cfg.lambda2;
    }
    const ProbMap& p = pred.for_class(id);
    const auto parts = weighted_bce_parts(p, g, w, signed_lambda, cfg.epsilon, &ignore);
    const double dice = dice_impl(p, g, cfg.epsilon, &ignore);
    report.per_class.push_back({id, parts.mean(), dice});
    if (cfg.decoupled) {
      report.bce_weighted += parts.mean();
    } else {
      pooled.sum += parts.sum;
      pooled.count += parts.count;
    }
    dice_sum += dice;
  }
  if (!cfg.decoupled) report.bce_weighted = pooled.mean();
  report.dice = dice_sum / static_cast<double>(gt.table().size());
  if (pred_edge) {
    report.edge = edge_loss(*pred_edge, semantic_edges(gt, cfg.edge_radius), cfg.epsilon);
  }
  report.total_partial = report.bce_weighted + report.dice + report.edge;
  return report;
}

}  // namespace masseval
