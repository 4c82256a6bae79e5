/* Copyright 2026 The Duration Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the duration heterogeneous-recommendation engine.
 *
 * Every function returns a dur_status. On failure the message is available
 * from dur_last_error() until the next call on the same thread. Strings
 * returned through char** out-parameters are heap-allocated JSON or text and
 * must be released with dur_free_string().
 */
#ifndef DURATION_DURATION_H
#define DURATION_DURATION_H

#include <stddef.h>
#include <stdint.h>

#if defined(DURATION_BUILDING_LIBRARY)
#define DUR_API __attribute__((visibility("default")))
#else
#define DUR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dur_status {
    DUR_OK = 0,
    DUR_ERR_INVALID_ARGUMENT = 1,
    DUR_ERR_CONFIG = 2,
    DUR_ERR_IO = 3,
    DUR_ERR_FORMAT = 4,
    DUR_ERR_NUMERIC = 5,
    DUR_ERR_STATE = 6,
    DUR_ERR_INTERNAL = 7
} dur_status;

typedef struct dur_dataset dur_dataset;
typedef struct dur_model dur_model;

DUR_API const char* dur_version(void);
DUR_API const char* dur_last_error(void);
DUR_API const char* dur_status_name(dur_status status);
DUR_API void dur_free_string(char* text);

/* ---- datasets ---------------------------------------------------------- */

/* synthetic_json: generator settings object, NULL or "{}" for defaults. */
DUR_API dur_status dur_dataset_synthesize(const char* synthetic_json, uint64_t seed, dur_dataset** out);
/* Loads the delimited-text layout; kinds_json is a JSON array of kind names or NULL. */
DUR_API dur_status dur_dataset_load(const char* root, const char* kinds_json, dur_dataset** out);
DUR_API dur_status dur_dataset_save(const dur_dataset* dataset, const char* root);
/* Counts of users, items per kind and interactions. */
DUR_API dur_status dur_dataset_summary(const dur_dataset* dataset, char** json_out);
DUR_API void dur_dataset_free(dur_dataset* dataset);

/* ---- run configuration driven pipeline --------------------------------- */

/* Validates a run-config file and returns it with every default filled in. */
DUR_API dur_status dur_config_resolve(const char* config_path, char** json_out);
/* Writes the configured dataset to out_dir (NULL: the config's output_dir). */
DUR_API dur_status dur_run_synth(const char* config_path, const char* out_dir, char** info_json);
/* Bits of the `ablate` argument of dur_run_train. */
#define DUR_ABLATE_ALIGNMENT 1
#define DUR_ABLATE_TOPOLOGY 2

/* Trains into run_dir (NULL: the config's run_dir, else a fresh timestamped
 * directory). `ablate` disables loss terms on top of the config's flags. */
DUR_API dur_status dur_run_train(const char* config_path, const char* run_dir, int ablate, char** summary_json);
/* Test-split report for a checkpoint; cold_only restricts it to cold users. */
DUR_API dur_status dur_run_evaluate(const char* config_path, const char* checkpoint, int cold_only,
                                    char** report_json);
/* Topology F1 comparison between two checkpoints. */
DUR_API dur_status dur_run_topology_f1(const char* config_path, const char* with_checkpoint,
                                       const char* without_checkpoint, char** table_json);
/* Writes embeddings.tsv and a similarity matrix into out_dir. */
DUR_API dur_status dur_run_export(const char* config_path, const char* checkpoint, const char* out_dir,
                                  char** info_json);
/* Runs the oracle suites; *all_passed is set to 1 when every suite passes. */
DUR_API dur_status dur_oracle_check(uint64_t seed, int* all_passed, char** report_json);

/* ---- models ------------------------------------------------------------ */

DUR_API dur_status dur_model_load(const char* checkpoint_dir, dur_model** out);
DUR_API dur_status dur_model_info(const dur_model* model, char** json_out);
DUR_API void dur_model_free(dur_model* model);

/* ---- numeric kernels --------------------------------------------------- */

/* sets[i] points at rows[i] x dim row-major doubles. */
DUR_API dur_status dur_alignment_loss(const double* const* sets, const size_t* rows, size_t num_sets, size_t dim,
                                      double bandwidth, double* out);
DUR_API dur_status dur_distributional_variance(const double* const* sets, const size_t* rows, size_t num_sets,
                                               size_t dim, double bandwidth, double* out);
DUR_API dur_status dur_auc(const double* scores, const uint8_t* labels, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DURATION_DURATION_H */
