#pragma once

#include <set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "masseval/mask_core.hpp"

namespace masseval {

struct LossConfig {
  int k = 15;
  double lambda = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double epsilon = 1e-7;
  int edge_radius = 0;
  /// Use the precise/pseudo split for the BCE term of total_loss.
  bool decoupled = false;
  std::set<ClassId> precise_classes{1, 2, 3, 4, 5, 6};
  std::set<ClassId> pseudo_classes{0};

  /// Precise = {1..6} present in the table, pseudo = every other class.
  static LossConfig defaults_for(const ClassTable& table);

  void validate() const;
  /// Throws unless every table class is in exactly one of the two sets.
  void require_covers(const ClassTable& table) const;

  nlohmann::json to_json() const;
  static LossConfig from_json(const nlohmann::json& j, const ClassTable& table);
};

struct LossReport {
  struct PerClass {
    ClassId id = 0;
    double bce = 0.0;
    double dice = 0.0;
  };
  double bce_weighted = 0.0;
  double dice = 0.0;
  double edge = 0.0;
  double total_partial = 0.0;  // bce_weighted + dice + edge; L_cls is not evaluated
  std::vector<PerClass> per_class;

  nlohmann::json to_json(const ClassTable& table) const;
};

/// W = G - box_filter(G, k) with replicate padding.
WeightMap weight_map(const BinaryMask& gt, int k);

/// Binary cross-entropy of one pixel with the probability clamped to
/// [epsilon, 1 - epsilon].
double pixel_bce(double p, bool g, double epsilon);

/// Mean of bce * max(0, 1 + lambda * W) over non-ignore pixels.
double weighted_bce(const ProbMap& pred, const BinaryMask& gt, const WeightMap& w, double lambda,
                    double epsilon);
double weighted_bce(const ProbMap& pred, const BinaryMask& gt, const WeightMap& w, double lambda,
                    double epsilon, const BinaryMask& ignore);

/// 1 - (2 sum PG + eps) / (sum P + sum G + eps).
double dice_loss(const ProbMap& pred, const BinaryMask& gt, double epsilon);
double dice_loss(const ProbMap& pred, const BinaryMask& gt, double epsilon, const BinaryMask& ignore);

/// Mean BCE of an edge probability map against an edge set.
double edge_loss(const ProbMap& pred_edge, const EdgeMap& gt_edge, double epsilon);

/// Sum over precise classes of mean bce * max(0, 1 + lambda1 W) plus sum
/// over pseudo classes of mean bce * max(0, 1 - lambda2 W). Only the BCE
/// fields are filled.
LossReport new_class_bce(const ProbStack& pred, const LabelMap& gt, const LossConfig& cfg);

/// Weighted BCE (or the decoupled form when cfg.decoupled) + mean Dice +
/// edge BCE against semantic_edges(gt, cfg.edge_radius). A null edge map
/// leaves the edge term at zero.
LossReport total_loss(const ProbStack& pred, const ProbMap* pred_edge, const LabelMap& gt,
                      const LossConfig& cfg);

}  // namespace masseval
