/*
 * C interface to the masseval library: segmentation quality metrics,
 * mask-complexity statistics, edge weight maps and pseudo-label curation.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns an mse_status; on failure mse_last_error() holds a
 * message for the calling thread. Strings returned through char** are
 * released with mse_string_free.
 */
#ifndef MASSEVAL_H
#define MASSEVAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MASSEVAL_BUILDING)
#    define MASSEVAL_API __declspec(dllexport)
#  else
#    define MASSEVAL_API __declspec(dllimport)
#  endif
#else
#  define MASSEVAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. */
typedef enum mse_status {
  MSE_OK = 0,
  MSE_ERR_VALIDATION = 1,
  MSE_ERR_IO = 2,
  MSE_ERR_PARTIAL = 3,
  MSE_ERR_INTERNAL = 4
} mse_status;

typedef struct mse_class_table mse_class_table;
typedef struct mse_label_map mse_label_map;
typedef struct mse_mask mse_mask;

MASSEVAL_API const char* mse_version(void);
/* Message of the last failed call on this thread; empty when none. */
MASSEVAL_API const char* mse_last_error(void);
MASSEVAL_API void mse_string_free(char* s);

/* Class tables */
MASSEVAL_API mse_status mse_class_table_canonical(mse_class_table** out);
MASSEVAL_API mse_status mse_class_table_load(const char* path, mse_class_table** out);
MASSEVAL_API size_t mse_class_table_size(const mse_class_table* table);
MASSEVAL_API void mse_class_table_free(mse_class_table* table);

/* Label maps */
MASSEVAL_API mse_status mse_label_map_create(int width, int height, const uint8_t* data,
                                             const mse_class_table* table, mse_label_map** out);
MASSEVAL_API mse_status mse_label_map_load(const char* path, const mse_class_table* table,
                                           mse_label_map** out);
MASSEVAL_API mse_status mse_label_map_save(const mse_label_map* map, const char* path);
MASSEVAL_API int mse_label_map_width(const mse_label_map* map);
MASSEVAL_API int mse_label_map_height(const mse_label_map* map);
MASSEVAL_API const uint8_t* mse_label_map_data(const mse_label_map* map);
MASSEVAL_API void mse_label_map_free(mse_label_map* map);

/* Binary masks (one byte per pixel, nonzero = set) */
MASSEVAL_API mse_status mse_mask_create(int width, int height, const uint8_t* bits, mse_mask** out);
MASSEVAL_API mse_status mse_class_mask(const mse_label_map* map, uint8_t class_id, mse_mask** out);
MASSEVAL_API size_t mse_mask_popcount(const mse_mask* mask);
MASSEVAL_API void mse_mask_free(mse_mask* mask);

/* Metrics */
typedef struct mse_metric_config {
  double biou_fraction;
  int biou_min_d;
  double bf1_tolerance;
  int per_image_mean; /* 0: ratio of sums (default), 1: mean of per-image scores */
} mse_metric_config;

MASSEVAL_API void mse_metric_config_default(mse_metric_config* cfg);
MASSEVAL_API mse_status mse_effective_d(const mse_metric_config* cfg, int width, int height, int* out);
/* `ignore` may be NULL. */
MASSEVAL_API mse_status mse_iou(const mse_mask* pred, const mse_mask* gt, const mse_mask* ignore,
                                double* out);
MASSEVAL_API mse_status mse_biou(const mse_mask* pred, const mse_mask* gt, double d,
                                 const mse_mask* ignore, double* out);
MASSEVAL_API mse_status mse_bf1(const mse_mask* pred, const mse_mask* gt, double tolerance,
                                const mse_mask* ignore, double* precision, double* recall,
                                double* f1);
MASSEVAL_API mse_status mse_mipq(const mse_label_map* map, double* out);
/* Per-class record of one image pair as JSON. */
MASSEVAL_API mse_status mse_evaluate_pair_json(const mse_label_map* pred, const mse_label_map* gt,
                                               const mse_metric_config* cfg, char** json_out);

/* Loss configuration. Empty class lists select the defaults for the table:
 * ids 1-6 precise, every other id pseudo. */
typedef struct mse_loss_config {
  int k;
  double lambda;
  double lambda1;
  double lambda2;
  double epsilon;
  int edge_radius;
  int decoupled;
  const uint8_t* precise_classes;
  size_t n_precise_classes;
  const uint8_t* pseudo_classes;
  size_t n_pseudo_classes;
} mse_loss_config;

MASSEVAL_API void mse_loss_config_default(mse_loss_config* cfg);

typedef enum mse_conflict_handling {
  MSE_CONFLICT_SKIP = 0,
  MSE_CONFLICT_OVERRIDE = 1,
  MSE_CONFLICT_ERROR = 2
} mse_conflict_handling;

typedef struct mse_merge_policy {
  int new_class_id; /* < 0: the id already named new_class_name, else the next free id >= 7 */
  const char* new_class_name;
  const uint8_t* replaceable; /* NULL/0: {0} ("others") */
  size_t n_replaceable;
  mse_conflict_handling conflict_handling;
} mse_merge_policy;

/* Batch commands. Shared options; NULL strings select defaults
 * (canonical class table, no output file, Markdown). jobs <= 0 uses all
 * logical CPUs. The rendered report is returned through `report_out`
 * (may be NULL). Per-image failures yield MSE_ERR_PARTIAL with the
 * offending files listed in mse_last_error(). */
typedef struct mse_batch_options {
  int jobs;
  const char* classes_path;
  const char* out_path;
  const char* format; /* "md", "csv" or "json" */
} mse_batch_options;

MASSEVAL_API mse_status mse_cmd_eval(const mse_batch_options* opts, const char* pred_dir,
                                     const char* gt_dir, const mse_metric_config* cfg,
                                     char** report_out);
MASSEVAL_API mse_status mse_cmd_stats(const mse_batch_options* opts, const char* dir,
                                      char** report_out);
MASSEVAL_API mse_status mse_cmd_edges(const mse_batch_options* opts, const char* dir, int radius,
                                      char** report_out);
MASSEVAL_API mse_status mse_cmd_weights(const mse_batch_options* opts, const char* dir,
                                        const mse_loss_config* cfg, char** report_out);
MASSEVAL_API mse_status mse_cmd_merge(const mse_batch_options* opts, const char* gt_dir,
                                      const char* pseudo_dir, const mse_merge_policy* policy,
                                      char** report_out);
MASSEVAL_API mse_status mse_cmd_loss(const mse_batch_options* opts, const char* pred_dir,
                                     const char* gt_dir, const mse_loss_config* cfg,
                                     char** report_out);
/* mask_class < 0: nonzero mask pixels are foreground. */
MASSEVAL_API mse_status mse_cmd_bokeh(const char* image_path, const char* mask_path, int mask_class,
                                      double sigma, double feather, const char* out_path,
                                      char** report_out);
MASSEVAL_API mse_status mse_cmd_report(const mse_batch_options* opts, const char* const* artifacts,
                                       size_t n_artifacts, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* MASSEVAL_H */
