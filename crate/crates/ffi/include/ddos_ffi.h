#ifndef DDOS_FFI_H
#define DDOS_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DdosStatus {
  DDOS_STATUS_OK = 0,
  DDOS_STATUS_NULL_POINTER = 1,
  DDOS_STATUS_INVALID_ARGUMENT = 2,
  DDOS_STATUS_IO = 3,
  DDOS_STATUS_PARSE = 4,
  DDOS_STATUS_SCHEMA = 5,
  DDOS_STATUS_MODEL = 6,
  DDOS_STATUS_PIPELINE = 7,
  DDOS_STATUS_PANIC = 99,
} DdosStatus;

/**
 * Loaded, cleaned and encoded flow table.
 */
typedef struct DdosDataset DdosDataset;

/**
 * Saved model with its preprocessing.
 */
typedef struct DdosModel DdosModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *ddos_last_error_message(void);

void ddos_string_free(char *s);

/**
 * Load a CSV, impute gaps and encode categorical columns.
 */
enum DdosStatus ddos_dataset_load_csv(const char *path,
                                      const char *label_column,
                                      struct DdosDataset **out);

/**
 * Generate a synthetic dataset from a spec such as `"sep=6,n=2000"`.
 */
enum DdosStatus ddos_dataset_synth(const char *spec, struct DdosDataset **out);

enum DdosStatus ddos_dataset_rows(const struct DdosDataset *ds, size_t *out);

enum DdosStatus ddos_dataset_cols(const struct DdosDataset *ds, size_t *out);

enum DdosStatus ddos_dataset_label_counts(const struct DdosDataset *ds,
                                          size_t *benign,
                                          size_t *ddos);

void ddos_dataset_free(struct DdosDataset *ds);

/**
 * Run the full experiment. `config_toml` (nullable) uses the same flat keys
 * as the CLI config file. When `out_dir` is non-null the report, plot data
 * and model files are written there too. The report JSON is returned
 * through `out_json`.
 */
enum DdosStatus ddos_experiment_run(const struct DdosDataset *ds,
                                    const char *config_toml,
                                    const char *out_dir,
                                    char **out_json);

enum DdosStatus ddos_model_load(const char *path, struct DdosModel **out);

/**
 * Number of raw input columns the model expects.
 */
enum DdosStatus ddos_model_n_features(const struct DdosModel *model, size_t *out);

/**
 * Score `n_rows` row-major raw feature rows (categorical columns given as
 * their integer codes). Writes one probability per row to `out_probs` and,
 * when non-null, one 0/1 label per row to `out_labels`.
 */
enum DdosStatus ddos_model_predict(const struct DdosModel *model,
                                   const double *rows,
                                   size_t n_rows,
                                   size_t n_cols,
                                   double *out_probs,
                                   uint8_t *out_labels);

void ddos_model_free(struct DdosModel *model);

/**
 * Full metrics report as JSON for `n` labels, predictions and positive-class
 * probabilities.
 */
enum DdosStatus ddos_metrics_evaluate(const uint8_t *y_true,
                                      const uint8_t *y_pred,
                                      const double *probs,
                                      size_t n,
                                      char **out_json);

/**
 * Area under the ROC curve.
 */
enum DdosStatus ddos_metrics_roc_auc(const uint8_t *y_true,
                                     const double *scores,
                                     size_t n,
                                     double *out_auc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDOS_FFI_H */
