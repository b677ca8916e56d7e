/* Copyright (C) 2026 The mivae Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libmivae. Objects are opaque handles released with the
 * matching *_free function. Every call returns a mivae_status; on failure
 * mivae_last_error() describes the problem (thread-local, valid until the
 * next failing call on the same thread). */
#ifndef MIVAE_MIVAE_H
#define MIVAE_MIVAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MIVAE_API __declspec(dllexport)
#else
#define MIVAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mivae_status {
  MIVAE_OK = 0,
  MIVAE_ERR_ARGUMENT = 1,  /* null pointer, buffer too small, bad enum */
  MIVAE_ERR_DIMENSION = 2, /* shape mismatch */
  MIVAE_ERR_CONTRACT = 3,  /* invalid value, unknown config key */
  MIVAE_ERR_FORMAT = 4,    /* malformed file */
  MIVAE_ERR_IO = 5,        /* unreadable / unwritable path */
  MIVAE_ERR_NUMERIC = 6,   /* non-finite values during training */
  MIVAE_ERR_INTERNAL = 7
} mivae_status;

typedef struct mivae_config mivae_config;
typedef struct mivae_dataset mivae_dataset;
typedef struct mivae_model mivae_model;

MIVAE_API const char* mivae_version(void);
MIVAE_API const char* mivae_last_error(void);
MIVAE_API const char* mivae_status_name(mivae_status s);
/* Nonzero for failures caused by the caller's input rather than the library. */
MIVAE_API int mivae_status_is_user_error(mivae_status s);

/* ---- run configuration ---------------------------------------------------- */

MIVAE_API mivae_status mivae_config_new(mivae_config** out);
MIVAE_API void mivae_config_free(mivae_config* cfg);
MIVAE_API mivae_status mivae_config_load_file(mivae_config* cfg, const char* path);
MIVAE_API mivae_status mivae_config_apply_text(mivae_config* cfg, const char* text);
MIVAE_API mivae_status mivae_config_set(mivae_config* cfg, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf. `needed` (optional) receives
 * the size including the terminator; MIVAE_ERR_ARGUMENT if cap is short. */
MIVAE_API mivae_status mivae_config_get(const mivae_config* cfg, const char* key, char* buf, size_t cap,
                                        size_t* needed);
MIVAE_API mivae_status mivae_config_to_text(const mivae_config* cfg, char* buf, size_t cap, size_t* needed);
MIVAE_API mivae_status mivae_config_validate(const mivae_config* cfg);
MIVAE_API size_t mivae_config_key_count(void);
/* NULL when i is out of range. */
MIVAE_API const char* mivae_config_key_name(size_t i);
MIVAE_API const char* mivae_config_key_help(size_t i);

/* ---- datasets ------------------------------------------------------------- */

/* labels_path may be NULL. Gzip-compressed files are accepted. */
MIVAE_API mivae_status mivae_dataset_load_idx(const char* images_path, const char* labels_path, mivae_dataset** out);
MIVAE_API void mivae_dataset_free(mivae_dataset* ds);
MIVAE_API size_t mivae_dataset_size(const mivae_dataset* ds);
MIVAE_API size_t mivae_dataset_dim(const mivae_dataset* ds);
/* Copies row `row` (dim values in [0, 1]) into out. */
MIVAE_API mivae_status mivae_dataset_row(const mivae_dataset* ds, size_t row, double* out, size_t cap);
/* -1 when the dataset is unlabelled. */
MIVAE_API int mivae_dataset_label(const mivae_dataset* ds, size_t row);

/* ---- models --------------------------------------------------------------- */

MIVAE_API mivae_status mivae_model_load(const char* checkpoint_path, mivae_model** out);
MIVAE_API mivae_status mivae_model_save(const mivae_model* m, const char* checkpoint_path);
MIVAE_API void mivae_model_free(mivae_model* m);
MIVAE_API size_t mivae_model_data_dim(const mivae_model* m);
MIVAE_API size_t mivae_model_gaussian_dim(const mivae_model* m);
MIVAE_API size_t mivae_model_categorical_k(const mivae_model* m);
/* x: n rows of data_dim values. mu/log_var: n * gaussian_dim; probs: n * K.
 * Output pointers may be NULL when not wanted. */
MIVAE_API mivae_status mivae_model_encode(const mivae_model* m, const double* x, size_t n, double* mu,
                                          double* log_var, double* probs);
/* z: n * gaussian_dim; c: n * K (may be NULL iff K == 0); out: n * data_dim. */
MIVAE_API mivae_status mivae_model_decode(const mivae_model* m, const double* z, const double* c, size_t n,
                                          double* out);

/* ---- commands ------------------------------------------------------------- */

typedef struct mivae_train_result {
  uint64_t steps;
  double recon;
  double kl_gauss;
  double kl_cat;
  double mi_term;
  double total;
} mivae_train_result;

/* Writes config.resolved, metrics.csv and ckpt_*.bin under output.dir. */
MIVAE_API mivae_status mivae_cmd_train(const mivae_config* cfg, mivae_train_result* out);

typedef struct mivae_eval_result {
  double mi_lower;
  double mi_lower_se;
  double kl_upper;
  double kl_upper_se;
  double kl_gauss;
  double kl_cat;   /* < 0 without a categorical latent */
  double accuracy; /* < 0 when not computed */
} mivae_eval_result;

/* Writes reports/{mi_report.csv,q_curve.csv,prob_histogram.csv,
 * onehot_counts.csv,summary.txt} under output.dir. */
MIVAE_API mivae_status mivae_cmd_eval(const mivae_config* cfg, mivae_eval_result* out);
/* Write figures/traverse.pgm or figures/cat_traverse.pgm; the path is
 * copied into path_buf. */
MIVAE_API mivae_status mivae_cmd_traverse(const mivae_config* cfg, char* path_buf, size_t cap);
MIVAE_API mivae_status mivae_cmd_cat_traverse(const mivae_config* cfg, char* path_buf, size_t cap);

typedef struct mivae_em_options {
  size_t components;
  size_t points_per_component;
  size_t dim;
  double separation;
  int iters;
  uint64_t seed;
  const char* output_dir;
} mivae_em_options;

typedef struct mivae_em_result {
  double initial_loglik;
  double final_loglik;
  int iterations;
  int monotone; /* 1 if the trace never decreased by more than 1e-9 */
} mivae_em_result;

MIVAE_API void mivae_em_options_default(mivae_em_options* opt);
MIVAE_API mivae_status mivae_cmd_em_demo(const mivae_em_options* opt, mivae_em_result* out);

typedef struct mivae_toy_options {
  const char* kind; /* "independent", "identity" or "noisy-channel" */
  size_t k;
  double epsilon;
  int budget;
  uint64_t seed;
  const char* output_dir;
} mivae_toy_options;

typedef struct mivae_toy_result {
  double exact_mi;
  double lower;
  double lower_se;
  double kl_upper;
} mivae_toy_result;

MIVAE_API void mivae_toy_options_default(mivae_toy_options* opt);
MIVAE_API mivae_status mivae_cmd_toy_mi(const mivae_toy_options* opt, mivae_toy_result* out);

#ifdef __cplusplus
}
#endif

#endif /* MIVAE_MIVAE_H */
