#include "masseval/masseval.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

#include <nlohmann/json.hpp>

#include "masseval/harness.hpp"
#include "masseval/metrics.hpp"

struct mse_class_table {
  masseval::ClassTable table;
};
struct mse_label_map {
  masseval::LabelMap map;
};
struct mse_mask {
  masseval::BinaryMask mask;
};

namespace {

thread_local std::string g_last_error;

mse_status fail(mse_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
mse_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const masseval::Error& e) {
    return fail(e.kind() == masseval::ErrorKind::io ? MSE_ERR_IO : MSE_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MSE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MSE_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) masseval::throw_validation(std::string(what) + " must not be NULL");
}

masseval::MetricConfig to_metric_config(const mse_metric_config* cfg, masseval::ClassTable table) {
  masseval::MetricConfig out;
  if (cfg) {
    out.biou_fraction = cfg->biou_fraction;
    out.biou_min_d = cfg->biou_min_d;
    out.bf1_tolerance = cfg->bf1_tolerance;
    out.aggregation = cfg->per_image_mean ? masseval::Aggregation::per_image_mean
                                          : masseval::Aggregation::ratio_of_sums;
  }
  out.classes = std::move(table);
  out.validate();
  return out;
}

masseval::LossConfig to_loss_config(const mse_loss_config* cfg, const masseval::ClassTable& table) {
  auto out = masseval::LossConfig::defaults_for(table);
  if (!cfg) return out;
  out.k = cfg->k;
  out.lambda = cfg->lambda;
  out.lambda1 = cfg->lambda1;
  out.lambda2 = cfg->lambda2;
  out.epsilon = cfg->epsilon;
  out.edge_radius = cfg->edge_radius;
  out.decoupled = cfg->decoupled != 0;
  if (cfg->n_precise_classes > 0 || cfg->n_pseudo_classes > 0) {
    out.precise_classes.clear();
    out.pseudo_classes.clear();
    for (std::size_t i = 0; i < cfg->n_precise_classes; ++i) out.precise_classes.insert(cfg->precise_classes[i]);
    for (std::size_t i = 0; i < cfg->n_pseudo_classes; ++i) out.pseudo_classes.insert(cfg->pseudo_classes[i]);
  }
  out.validate();
  return out;
}

masseval::ClassTable table_for(const mse_batch_options* opts) {
  if (opts && opts->classes_path) return masseval::ClassTable::load(opts->classes_path);
  return masseval::ClassTable::canonical();
}

masseval::BatchOptions batch_for(const mse_batch_options* opts) {
  masseval::BatchOptions out;
  if (!opts) return out;
  out.jobs = opts->jobs;
  if (opts->out_path) out.out = opts->out_path;
  if (opts->format) out.format = masseval::parse_report_format(opts->format);
  return out;
}

mse_status finish(const masseval::CommandResult& result, char** report_out) {
  if (report_out) *report_out = dup_string(result.text);
  if (result.status == masseval::Status::ok) return MSE_OK;
  std::ostringstream msg;
  for (std::size_t i = 0; i < result.failures.size(); ++i) {
    if (i) msg << '\n';
    msg << result.failures[i];
  }
  g_last_error = msg.str();
  return static_cast<mse_status>(result.status);
}

masseval::BinaryMask ignore_or_empty(const mse_mask* ignore, const masseval::BinaryMask& like) {
  if (ignore) return ignore->mask;
  return masseval::BinaryMask(like.width(), like.height());
}

}  // namespace

extern "C" {

const char* mse_version(void) { return "masseval 1.0.0"; }

const char* mse_last_error(void) { return g_last_error.c_str(); }

void mse_string_free(char* s) { std::free(s); }

mse_status mse_class_table_canonical(mse_class_table** out) {
  return guarded([&] {
    require(out, "out");
    *out = new mse_class_table{masseval::ClassTable::canonical()};
    return MSE_OK;
  });
}

mse_status mse_class_table_load(const char* path, mse_class_table** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mse_class_table{masseval::ClassTable::load(path)};
    return MSE_OK;
  });
}

size_t mse_class_table_size(const mse_class_table* table) { return table ? table->table.size() : 0; }

void mse_class_table_free(mse_class_table* table) { delete table; }

mse_status mse_label_map_create(int width, int height, const uint8_t* data,
                                const mse_class_table* table, mse_label_map** out) {
  return guarded([&] {
    require(data, "data");
    require(table, "table");
    require(out, "out");
    if (width < 1 || height < 1) masseval::throw_validation("dimensions must be positive");
    std::vector<uint8_t> values(data, data + static_cast<std::size_t>(width) * height);
    *out = new mse_label_map{masseval::LabelMap(width, height, std::move(values), table->table)};
    return MSE_OK;
  });
}

mse_status mse_label_map_load(const char* path, const mse_class_table* table, mse_label_map** out) {
  return guarded([&] {
    require(path, "path");
    require(table, "table");
    require(out, "out");
    *out = new mse_label_map{masseval::load_label_map(path, table->table)};
    return MSE_OK;
  });
}

mse_status mse_label_map_save(const mse_label_map* map, const char* path) {
  return guarded([&] {
    require(map, "map");
    require(path, "path");
    masseval::save_label_map(map->map, path);
    return MSE_OK;
  });
}

int mse_label_map_width(const mse_label_map* map) { return map ? map->map.width() : 0; }
int mse_label_map_height(const mse_label_map* map) { return map ? map->map.height() : 0; }
const uint8_t* mse_label_map_data(const mse_label_map* map) {
  return map ? map->map.values().data() : nullptr;
}
void mse_label_map_free(mse_label_map* map) { delete map; }

mse_status mse_mask_create(int width, int height, const uint8_t* bits, mse_mask** out) {
  return guarded([&] {
    require(bits, "bits");
    require(out, "out");
    if (width < 1 || height < 1) masseval::throw_validation("dimensions must be positive");
    std::vector<uint8_t> values(bits, bits + static_cast<std::size_t>(width) * height);
    *out = new mse_mask{masseval::BinaryMask(width, height, std::move(values))};
    return MSE_OK;
  });
}

mse_status mse_class_mask(const mse_label_map* map, uint8_t class_id, mse_mask** out) {
  return guarded([&] {
    require(map, "map");
    require(out, "out");
    *out = new mse_mask{masseval::class_mask(map->map, class_id)};
    return MSE_OK;
  });
}

size_t mse_mask_popcount(const mse_mask* mask) { return mask ? mask->mask.popcount() : 0; }
void mse_mask_free(mse_mask* mask) { delete mask; }

void mse_metric_config_default(mse_metric_config* cfg) {
  if (!cfg) return;
  const masseval::MetricConfig d;
  cfg->biou_fraction = d.biou_fraction;
  cfg->biou_min_d = d.biou_min_d;
  cfg->bf1_tolerance = d.bf1_tolerance;
  cfg->per_image_mean = 0;
}

mse_status mse_effective_d(const mse_metric_config* cfg, int width, int height, int* out) {
  return guarded([&] {
    require(out, "out");
    *out = to_metric_config(cfg, masseval::ClassTable::canonical()).effective_d(width, height);
    return MSE_OK;
  });
}

mse_status mse_iou(const mse_mask* pred, const mse_mask* gt, const mse_mask* ignore, double* out) {
  return guarded([&] {
    require(pred, "pred");
    require(gt, "gt");
    require(out, "out");
    *out = masseval::iou(pred->mask, gt->mask, ignore_or_empty(ignore, gt->mask));
    return MSE_OK;
  });
}

mse_status mse_biou(const mse_mask* pred, const mse_mask* gt, double d, const mse_mask* ignore,
                    double* out) {
  return guarded([&] {
    require(pred, "pred");
    require(gt, "gt");
    require(out, "out");
    *out = masseval::biou(pred->mask, gt->mask, d, ignore_or_empty(ignore, gt->mask));
    return MSE_OK;
  });
}

mse_status mse_bf1(const mse_mask* pred, const mse_mask* gt, double tolerance, const mse_mask* ignore,
                   double* precision, double* recall, double* f1) {
  return guarded([&] {
    require(pred, "pred");
    require(gt, "gt");
    const auto r = masseval::bf1(pred->mask, gt->mask, tolerance, ignore_or_empty(ignore, gt->mask));
    if (precision) *precision = r.precision;
    if (recall) *recall = r.recall;
    if (f1) *f1 = r.f1;
    return MSE_OK;
  });
}

mse_status mse_mipq(const mse_label_map* map, double* out) {
  return guarded([&] {
    require(map, "map");
    require(out, "out");
    *out = masseval::ipq(map->map).mipq;
    return MSE_OK;
  });
}

mse_status mse_evaluate_pair_json(const mse_label_map* pred, const mse_label_map* gt,
                                  const mse_metric_config* cfg, char** json_out) {
  return guarded([&] {
    require(pred, "pred");
    require(gt, "gt");
    require(json_out, "json_out");
    const auto config = to_metric_config(cfg, gt->map.table());
    const auto rec = masseval::evaluate_pair(pred->map, gt->map, config);
    *json_out = dup_string(rec.to_json(gt->map.table()).dump());
    return MSE_OK;
  });
}

void mse_loss_config_default(mse_loss_config* cfg) {
  if (!cfg) return;
  const masseval::LossConfig d;
  cfg->k = d.k;
  cfg->lambda = d.lambda;
  cfg->lambda1 = d.lambda1;
  cfg->lambda2 = d.lambda2;
  cfg->epsilon = d.epsilon;
  cfg->edge_radius = d.edge_radius;
  cfg->decoupled = d.decoupled ? 1 : 0;
  cfg->precise_classes = nullptr;
  cfg->n_precise_classes = 0;
  cfg->pseudo_classes = nullptr;
  cfg->n_pseudo_classes = 0;
}

mse_status mse_cmd_eval(const mse_batch_options* opts, const char* pred_dir, const char* gt_dir,
                        const mse_metric_config* cfg, char** report_out) {
  return guarded([&] {
    require(pred_dir, "pred_dir");
    require(gt_dir, "gt_dir");
    masseval::EvalJob job{pred_dir, gt_dir, to_metric_config(cfg, table_for(opts)), batch_for(opts)};
    return finish(masseval::cmd_eval(job), report_out);
  });
}

mse_status mse_cmd_stats(const mse_batch_options* opts, const char* dir, char** report_out) {
  return guarded([&] {
    require(dir, "dir");
    masseval::StatsJob job{dir, table_for(opts), batch_for(opts)};
    return finish(masseval::cmd_stats(job), report_out);
  });
}

mse_status mse_cmd_edges(const mse_batch_options* opts, const char* dir, int radius, char** report_out) {
  return guarded([&] {
    require(dir, "dir");
    masseval::EdgesJob job{dir, radius, table_for(opts), batch_for(opts)};
    return finish(masseval::cmd_edges(job), report_out);
  });
}

mse_status mse_cmd_weights(const mse_batch_options* opts, const char* dir, const mse_loss_config* cfg,
                           char** report_out) {
  return guarded([&] {
    require(dir, "dir");
    auto table = table_for(opts);
    masseval::WeightsJob job{dir, to_loss_config(cfg, table), table, batch_for(opts)};
    return finish(masseval::cmd_weights(job), report_out);
  });
}

mse_status mse_cmd_merge(const mse_batch_options* opts, const char* gt_dir, const char* pseudo_dir,
                         const mse_merge_policy* policy, char** report_out) {
  return guarded([&] {
    require(gt_dir, "gt_dir");
    require(pseudo_dir, "pseudo_dir");
    require(policy, "policy");
    auto table = table_for(opts);
    masseval::MergePolicy p;
    if (policy->new_class_name) p.new_class_name = policy->new_class_name;
    if (policy->new_class_id >= 0) {
      if (policy->new_class_id > 255) masseval::throw_validation("new class id out of range");
      p.new_class_id = static_cast<masseval::ClassId>(policy->new_class_id);
    } else if (auto existing = table.find(p.new_class_name)) {
      p.new_class_id = *existing;
    } else {
      p.new_class_id = table.next_free_id();
    }
    if (policy->replaceable && policy->n_replaceable > 0) {
      p.replaceable = {policy->replaceable, policy->replaceable + policy->n_replaceable};
    }
    switch (policy->conflict_handling) {
      case MSE_CONFLICT_SKIP:
        p.conflict_handling = masseval::ConflictHandling::skip;
        break;
      case MSE_CONFLICT_OVERRIDE:
        p.conflict_handling = masseval::ConflictHandling::override_label;
        break;
      case MSE_CONFLICT_ERROR:
        p.conflict_handling = masseval::ConflictHandling::error;
        break;
      default:
        masseval::throw_validation("unknown conflict handling");
    }
    masseval::MergeJob job{gt_dir, pseudo_dir, p, table, batch_for(opts)};
    return finish(masseval::cmd_merge(job), report_out);
  });
}

mse_status mse_cmd_loss(const mse_batch_options* opts, const char* pred_dir, const char* gt_dir,
                        const mse_loss_config* cfg, char** report_out) {
  return guarded([&] {
    require(pred_dir, "pred_dir");
    require(gt_dir, "gt_dir");
    auto table = table_for(opts);
    masseval::LossJob job{pred_dir, gt_dir, to_loss_config(cfg, table), table, batch_for(opts)};
    return finish(masseval::cmd_loss(job), report_out);
  });
}

mse_status mse_cmd_bokeh(const char* image_path, const char* mask_path, int mask_class, double sigma,
                         double feather, const char* out_path, char** report_out) {
  return guarded([&] {
    require(image_path, "image_path");
    require(mask_path, "mask_path");
    require(out_path, "out_path");
    masseval::BokehJob job;
    job.image = image_path;
    job.mask = mask_path;
    if (mask_class >= 0) {
      if (mask_class > 255) masseval::throw_validation("mask class out of range");
      job.mask_class = static_cast<masseval::ClassId>(mask_class);
    }
    job.sigma = sigma;
    job.feather = feather;
    job.out = out_path;
    return finish(masseval::cmd_bokeh(job), report_out);
  });
}

mse_status mse_cmd_report(const mse_batch_options* opts, const char* const* artifacts, size_t n_artifacts,
                          char** report_out) {
  return guarded([&] {
    masseval::ReportJob job;
    for (std::size_t i = 0; i < n_artifacts; ++i) {
      require(artifacts[i], "artifact path");
      job.artifacts.emplace_back(artifacts[i]);
    }
    job.options = batch_for(opts);
    return finish(masseval::cmd_report(job), report_out);
  });
}

}  // extern "C"
