/* C interface to the smcr library. Every function returns an smcr_status;
 * on failure smcr_last_error() holds a message for the calling thread.
 * Objects are opaque and released with the matching *_free function. */
#ifndef SMCR_SMCR_H
#define SMCR_SMCR_H

#include <stddef.h>

#if defined(SMCR_BUILDING_LIBRARY)
#define SMCR_API __attribute__((visibility("default")))
#else
#define SMCR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smcr_status {
  SMCR_OK = 0,
  SMCR_ERR_SHAPE,
  SMCR_ERR_DEGENERATE,
  SMCR_ERR_NUMERIC,
  SMCR_ERR_DOMAIN,
  SMCR_ERR_PARSE,
  SMCR_ERR_INTEGRITY,
  SMCR_ERR_SAMPLING,
  SMCR_ERR_LOOKUP,
  SMCR_ERR_MINING,
  SMCR_ERR_ALIGNMENT,
  SMCR_ERR_CONTRACT,
  SMCR_ERR_EVALUATION,
  SMCR_ERR_IO,
  SMCR_ERR_CONFIG,
  SMCR_ERR_ARGUMENT, /* null handle or buffer too small */
  SMCR_ERR_INTERNAL
} smcr_status;

typedef struct smcr_config smcr_config;
typedef struct smcr_dataset smcr_dataset;
typedef struct smcr_encoder smcr_encoder;
typedef struct smcr_model smcr_model;
typedef struct smcr_metrics smcr_metrics;

SMCR_API const char* smcr_last_error(void);
SMCR_API const char* smcr_status_name(smcr_status status);

/* Experiment configuration: dataset paths, output directory, training keys. */
SMCR_API smcr_status smcr_config_new(smcr_config** out);
SMCR_API smcr_status smcr_config_load(const char* path, smcr_config** out);
/* Same keys as the config file; relative paths resolve against the cwd.
 * get also reports the effective dataset dirs, out_dir, use_pretraining,
 * alpha and seed when they were left at their defaults. */
SMCR_API smcr_status smcr_config_set(smcr_config* config, const char* key, const char* value);
SMCR_API smcr_status smcr_config_get(const smcr_config* config, const char* key, char* buffer, size_t capacity);
SMCR_API void smcr_config_free(smcr_config* config);

/* Reads a synthetic/source/target spec file and writes the three dataset
 * directories under out_dir. seed >= 0 reseeds the sample draws. */
SMCR_API smcr_status smcr_generate_data(const char* spec_path, const char* out_dir, long long seed);

SMCR_API smcr_status smcr_dataset_load(const char* dir, smcr_dataset** out);
SMCR_API smcr_status smcr_dataset_save(const smcr_dataset* ds, const char* dir);
SMCR_API size_t smcr_dataset_size(const smcr_dataset* ds);
SMCR_API size_t smcr_dataset_dim(const smcr_dataset* ds);
/* x must hold smcr_dataset_dim values; identity is -1 when unlabeled. */
SMCR_API smcr_status smcr_dataset_sample(const smcr_dataset* ds, size_t index, double* x, int* identity,
                                         int* camera);
SMCR_API void smcr_dataset_free(smcr_dataset* ds);

SMCR_API smcr_status smcr_pretrain(const smcr_config* config, const smcr_dataset* synthetic,
                                   const smcr_dataset* source, smcr_encoder** out);
SMCR_API smcr_status smcr_source_only(const smcr_config* config, const smcr_dataset* source, smcr_encoder** out);
SMCR_API smcr_status smcr_initial_encoder(const smcr_config* config, size_t input_dim, smcr_encoder** out);
SMCR_API smcr_status smcr_encoder_load(const char* path, smcr_encoder** out);
SMCR_API smcr_status smcr_encoder_save(const smcr_encoder* encoder, const char* path);
SMCR_API size_t smcr_encoder_input_dim(const smcr_encoder* encoder);
SMCR_API size_t smcr_encoder_output_dim(const smcr_encoder* encoder);
SMCR_API smcr_status smcr_encoder_encode(const smcr_encoder* encoder, const double* x, size_t dim, double* out,
                                         size_t out_capacity);
SMCR_API void smcr_encoder_free(smcr_encoder* encoder);

/* Trains both branches. Target identities, when present, are stripped before
 * training; afterwards they score pseudo-label purity and the final retrieval
 * metrics written to adapt_summary.txt. */
SMCR_API smcr_status smcr_adapt(const smcr_config* config, const smcr_encoder* pretrained,
                                const smcr_dataset* source, const smcr_dataset* target, smcr_model** out);
/* Writes branch_dthr.txt, branch_rihr.txt, run_report.csv and adapt_summary.txt. */
SMCR_API smcr_status smcr_model_save(const smcr_model* model, const char* dir);
SMCR_API smcr_status smcr_model_load(const char* dir, smcr_model** out);
SMCR_API smcr_status smcr_model_run_report(const smcr_model* model, char* buffer, size_t capacity,
                                           size_t* required);
/* Class scores over branch-1 target clusters; *count receives their number. */
SMCR_API smcr_status smcr_model_fuse_predict(const smcr_model* model, const double* x, size_t dim, double alpha,
                                             double* out, size_t capacity, size_t* count);
SMCR_API void smcr_model_free(smcr_model* model);

/* mAP and CMC@1/5/10 for each branch and the fused embedding. */
SMCR_API smcr_status smcr_evaluate(const smcr_model* model, const smcr_dataset* target, double alpha,
                                   smcr_metrics** out);
SMCR_API smcr_status smcr_evaluate_encoder(const smcr_encoder* encoder, const smcr_dataset* target,
                                           const char* prefix, smcr_metrics** out);
/* Per-query CSV for the fused embedding. */
SMCR_API smcr_status smcr_write_per_query(const smcr_model* model, const smcr_dataset* target, double alpha,
                                          const char* path);
SMCR_API size_t smcr_metrics_count(const smcr_metrics* metrics);
SMCR_API const char* smcr_metrics_key(const smcr_metrics* metrics, size_t index);
SMCR_API smcr_status smcr_metrics_get(const smcr_metrics* metrics, const char* key, double* value);
SMCR_API smcr_status smcr_metrics_save(const smcr_metrics* metrics, const char* path);
SMCR_API void smcr_metrics_free(smcr_metrics* metrics);

#ifdef __cplusplus
}
#endif

#endif
