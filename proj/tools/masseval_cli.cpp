// Command-line front end over the masseval C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "masseval/masseval.h"

namespace {

struct GlobalFlags {
  int jobs = 0;
  std::string classes;
  std::string out;
  std::string format = "md";

  mse_batch_options options() const {
    mse_batch_options o{};
    o.jobs = jobs;
    o.classes_path = classes.empty() ? nullptr : classes.c_str();
    o.out_path = out.empty() ? nullptr : out.c_str();
    o.format = format.c_str();
    return o;
  }
};

int report(mse_status status, char* text) {
  if (text) {
    std::fputs(text, stdout);
    mse_string_free(text);
  }
  if (status != MSE_OK) {
    const char* msg = mse_last_error();
    if (msg && *msg) std::fprintf(stderr, "masseval: %s\n", msg);
  }
  switch (status) {
    case MSE_OK:
      return 0;
    case MSE_ERR_IO:
      return 2;
    case MSE_ERR_PARTIAL:
      return 3;
    default:
      return 1;
  }
}

void add_loss_flags(CLI::App* cmd, mse_loss_config& cfg, std::vector<int>& precise,
                    std::vector<int>& pseudo) {
  cmd->add_option("--k", cfg.k, "Averaging kernel size (odd)")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "Edge weight for the weighted BCE")->capture_default_str();
  cmd->add_option("--lambda1", cfg.lambda1, "Edge emphasis for precise classes")->capture_default_str();
  cmd->add_option("--lambda2", cfg.lambda2, "Edge suppression for pseudo classes")->capture_default_str();
  cmd->add_option("--epsilon", cfg.epsilon, "Probability clamp")->capture_default_str();
  cmd->add_option("--precise", precise, "Precise class ids (default 1-6)");
  cmd->add_option("--pseudo", pseudo, "Pseudo class ids (default: all others)");
}

void apply_class_lists(mse_loss_config& cfg, const std::vector<int>& precise, const std::vector<int>& pseudo,
                       std::vector<uint8_t>& precise_buf, std::vector<uint8_t>& pseudo_buf) {
  precise_buf.assign(precise.begin(), precise.end());
  pseudo_buf.assign(pseudo.begin(), pseudo.end());
  cfg.precise_classes = precise_buf.data();
  cfg.n_precise_classes = precise_buf.size();
  cfg.pseudo_classes = pseudo_buf.data();
  cfg.n_pseudo_classes = pseudo_buf.size();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masseval: boundary-aware segmentation evaluation and label curation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mse_version()));

  GlobalFlags g;
  app.add_option("--jobs,-j", g.jobs, "Worker threads (default: logical CPUs)");
  app.add_option("--classes", g.classes, "Class table JSON (default: canonical 7 classes)");
  app.add_option("--out,-o", g.out, "Output file or directory");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"md", "csv", "json"}));

  // eval
  std::string pred_dir, gt_dir;
  mse_metric_config metric_cfg;
  mse_metric_config_default(&metric_cfg);
  bool per_image_mean = false;
  auto* eval = app.add_subcommand("eval", "Per-class and mean IoU / BIoU / BF1 over two label directories");
  eval->fallthrough();
  eval->add_option("--pred", pred_dir, "Predicted label maps")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth label maps")->required();
  eval->add_option("--biou-fraction", metric_cfg.biou_fraction, "Band width as a fraction of the diagonal")
      ->capture_default_str();
  eval->add_option("--biou-min-d", metric_cfg.biou_min_d, "Minimum band width in pixels")->capture_default_str();
  eval->add_option("--bf1-tolerance", metric_cfg.bf1_tolerance, "Boundary match tolerance in pixels")
      ->capture_default_str();
  eval->add_flag("--per-image-mean", per_image_mean, "Average per-image scores instead of ratio of sums");

  // stats
  std::string stats_dir;
  auto* stats = app.add_subcommand("stats", "Dataset statistics: diagonal, mIPQ, pixel distribution");
  stats->fallthrough();
  stats->add_option("dir", stats_dir, "Label map directory")->required();

  // edges
  std::string edges_dir;
  int edge_radius = 0;
  auto* edges = app.add_subcommand("edges", "Export semantic edge maps as PNG");
  edges->fallthrough();
  edges->add_option("dir", edges_dir, "Label map directory")->required();
  edges->add_option("--radius", edge_radius, "Euclidean dilation radius")->capture_default_str();

  // weights
  std::string weights_dir;
  mse_loss_config weight_cfg;
  mse_loss_config_default(&weight_cfg);
  std::vector<int> w_precise, w_pseudo;
  auto* weights = app.add_subcommand("weights", "Export per-class edge factor maps as PFM");
  weights->fallthrough();
  weights->add_option("dir", weights_dir, "Label map directory")->required();
  add_loss_flags(weights, weight_cfg, w_precise, w_pseudo);

  // merge
  std::string merge_gt, merge_pseudo, new_class = "new", conflict = "skip";
  int new_id = -1;
  std::vector<int> replaceable;
  auto* merge = app.add_subcommand("merge", "Merge pseudo-label masks into label maps as a new class");
  merge->fallthrough();
  merge->add_option("--gt", merge_gt, "Label map directory")->required();
  merge->add_option("--pseudo", merge_pseudo, "Pseudo mask directory (nonzero = positive)")->required();
  merge->add_option("--new-class", new_class, "Name of the new class")->capture_default_str();
  merge->add_option("--new-id", new_id, "Id of the new class (default: next free id >= 7)");
  merge->add_option("--replaceable", replaceable, "Class ids the new class may overwrite (default: 0)");
  merge->add_option("--conflict", conflict, "Conflict handling")
      ->check(CLI::IsMember({"skip", "override", "error"}))
      ->capture_default_str();

  // loss
  std::string loss_pred, loss_gt;
  mse_loss_config loss_cfg;
  mse_loss_config_default(&loss_cfg);
  std::vector<int> l_precise, l_pseudo;
  bool decoupled = false;
  auto* loss = app.add_subcommand("loss", "Reference loss values for probability stacks");
  loss->fallthrough();
  loss->add_option("--pred", loss_pred, "Directory of <stem>.<id>.pfm stacks")->required();
  loss->add_option("--gt", loss_gt, "Label map directory")->required();
  loss->add_option("--edge-radius", loss_cfg.edge_radius, "Edge ground-truth radius")->capture_default_str();
  loss->add_flag("--decoupled", decoupled, "Precise/pseudo decoupled BCE for new classes");
  add_loss_flags(loss, loss_cfg, l_precise, l_pseudo);

  // bokeh
  std::string image_path, mask_path;
  int mask_class = -1;
  double sigma = 8.0, feather = 0.0;
  auto* bokeh = app.add_subcommand("bokeh", "Blur the background outside a mask");
  bokeh->fallthrough();
  bokeh->add_option("--image", image_path, "RGB PNG")->required();
  bokeh->add_option("--mask", mask_path, "Mask or label PNG")->required();
  bokeh->add_option("--class", mask_class, "Foreground class id in a label PNG");
  bokeh->add_option("--sigma", sigma, "Gaussian sigma in pixels")->capture_default_str();
  bokeh->add_option("--feather", feather, "Mask feathering sigma")->capture_default_str();

  // report
  std::vector<std::string> artifacts;
  auto* rep = app.add_subcommand("report", "Render evaluation artifacts as a comparison table");
  rep->fallthrough();
  rep->add_option("artifacts", artifacts, "Evaluation JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const mse_batch_options opts = g.options();
  char* text = nullptr;
  mse_status status = MSE_OK;

  if (*eval) {
    metric_cfg.per_image_mean = per_image_mean ? 1 : 0;
    status = mse_cmd_eval(&opts, pred_dir.c_str(), gt_dir.c_str(), &metric_cfg, &text);
  } else if (*stats) {
    status = mse_cmd_stats(&opts, stats_dir.c_str(), &text);
  } else if (*edges) {
    status = mse_cmd_edges(&opts, edges_dir.c_str(), edge_radius, &text);
  } else if (*weights) {
    std::vector<uint8_t> pb, sb;
    apply_class_lists(weight_cfg, w_precise, w_pseudo, pb, sb);
    status = mse_cmd_weights(&opts, weights_dir.c_str(), &weight_cfg, &text);
  } else if (*merge) {
    std::vector<uint8_t> rb(replaceable.begin(), replaceable.end());
    mse_merge_policy policy{};
    policy.new_class_id = new_id;
    policy.new_class_name = new_class.c_str();
    policy.replaceable = rb.data();
    policy.n_replaceable = rb.size();
    policy.conflict_handling = conflict == "override" ? MSE_CONFLICT_OVERRIDE
                               : conflict == "error"  ? MSE_CONFLICT_ERROR
                                                      : MSE_CONFLICT_SKIP;
    status = mse_cmd_merge(&opts, merge_gt.c_str(), merge_pseudo.c_str(), &policy, &text);
  } else if (*loss) {
    std::vector<uint8_t> pb, sb;
    apply_class_lists(loss_cfg, l_precise, l_pseudo, pb, sb);
    loss_cfg.decoupled = decoupled ? 1 : 0;
    status = mse_cmd_loss(&opts, loss_pred.c_str(), loss_gt.c_str(), &loss_cfg, &text);
  } else if (*bokeh) {
    if (g.out.empty()) {
      std::fprintf(stderr, "masseval: bokeh requires --out\n");
      return 1;
    }
    status = mse_cmd_bokeh(image_path.c_str(), mask_path.c_str(), mask_class, sigma, feather,
                           g.out.c_str(), &text);
  } else {
    std::vector<const char*> paths;
    for (const auto& a : artifacts) paths.push_back(a.c_str());
    status = mse_cmd_report(&opts, paths.data(), paths.size(), &text);
  }
  return report(status, text);
}
