/*
 * C interface to the dcscr library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a dcscr_status; on
 * failure dcscr_last_error() describes the problem for the calling thread.
 * Matrices cross the boundary column-major: a D x m feature set is m
 * consecutive frames of D doubles.
 */
#ifndef DCSCR_DCSCR_H
#define DCSCR_DCSCR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define DCSCR_API __declspec(dllexport)
#else
#  define DCSCR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcscr_status {
  DCSCR_OK = 0,
  DCSCR_ERR_DIMENSION_MISMATCH,
  DCSCR_ERR_NOT_SYMMETRIC,
  DCSCR_ERR_NOT_POSITIVE_DEFINITE,
  DCSCR_ERR_SINGULAR_KKT,
  DCSCR_ERR_EMPTY_SET,
  DCSCR_ERR_NON_FINITE,
  DCSCR_ERR_NUMERICAL_FAILURE,
  DCSCR_ERR_SHAPE_NOT_FACTORABLE,
  DCSCR_ERR_INVALID_LABEL,
  DCSCR_ERR_INVALID_CONFIG,
  DCSCR_ERR_INSUFFICIENT_CLASSES,
  DCSCR_ERR_INSUFFICIENT_SETS,
  DCSCR_ERR_PARSE,
  DCSCR_ERR_DUPLICATE_SET_ID,
  DCSCR_ERR_EMPTY_GALLERY,
  DCSCR_ERR_EMPTY_INPUT,
  DCSCR_ERR_DEGENERATE_LABELS,
  DCSCR_ERR_IO,
  DCSCR_ERR_INVALID_ARGUMENT,
  DCSCR_ERR_INTERNAL
} dcscr_status;

typedef struct dcscr_dataset dcscr_dataset;
typedef struct dcscr_model dcscr_model;
typedef struct dcscr_pairs dcscr_pairs;
typedef struct dcscr_classification dcscr_classification;
typedef struct dcscr_verification dcscr_verification;
typedef struct dcscr_history dcscr_history;

typedef struct dcscr_hyperparams {
  double mu1;
  double mu2;
  double lambda1;
  double lambda2;
  double margin;
  double rho;
  double tol_constraint;
  double tol_iterate;
  int max_iters;
} dcscr_hyperparams;

typedef struct dcscr_synth_config {
  size_t classes;
  size_t sets_per_class;
  size_t frames_per_set;
  size_t dim;
  double separation;
  double noise;
  uint64_t seed;
} dcscr_synth_config;

typedef struct dcscr_model_config {
  size_t encoder_dim;    /* 0: input dimension */
  size_t grid_height;    /* all three 0: default grid */
  size_t grid_width;
  size_t grid_channels;
  size_t embedding_dim;  /* 0: grid channels */
  int use_attention;
  uint64_t seed;
} dcscr_model_config;

typedef struct dcscr_train_config {
  int epochs_level1;
  int epochs_level2;
  double learning_rate_level1;
  double learning_rate_level2;
  size_t batch_size;
  uint64_t seed;
  size_t pairs_per_epoch;
  double positive_fraction;
} dcscr_train_config;

typedef struct dcscr_pair_info {
  double distance;
  int iterations;
  int converged;
  double residual_alpha;
  double residual_beta;
} dcscr_pair_info;

/* Which mu inference comparisons use. */
typedef enum dcscr_branch { DCSCR_BRANCH_DIFFERENT = 0, DCSCR_BRANCH_SAME = 1 } dcscr_branch;

typedef void (*dcscr_line_callback)(const char* line, void* user);

DCSCR_API const char* dcscr_version(void);
DCSCR_API const char* dcscr_status_name(dcscr_status status);
/* Nonzero for failures of the numerics rather than of the inputs. */
DCSCR_API int dcscr_status_is_numerical(dcscr_status status);
DCSCR_API const char* dcscr_last_error(void);

DCSCR_API void dcscr_hyperparams_default(dcscr_hyperparams* out);
DCSCR_API void dcscr_synth_config_default(dcscr_synth_config* out);
DCSCR_API void dcscr_model_config_default(dcscr_model_config* out);
DCSCR_API void dcscr_train_config_default(dcscr_train_config* out);

/* --- datasets --- */
DCSCR_API dcscr_status dcscr_dataset_load(const char* path, dcscr_dataset** out);
DCSCR_API dcscr_status dcscr_dataset_save(const dcscr_dataset* ds, const char* path);
DCSCR_API dcscr_status dcscr_dataset_gen_synthetic(const dcscr_synth_config* config,
                                                   dcscr_dataset** out);
DCSCR_API void dcscr_dataset_free(dcscr_dataset* ds);
DCSCR_API size_t dcscr_dataset_dim(const dcscr_dataset* ds);
DCSCR_API size_t dcscr_dataset_num_sets(const dcscr_dataset* ds);
DCSCR_API int dcscr_dataset_is_raw_pixels(const dcscr_dataset* ds);
DCSCR_API const char* dcscr_dataset_set_id(const dcscr_dataset* ds, size_t index);
DCSCR_API const char* dcscr_dataset_set_label(const dcscr_dataset* ds, size_t index);
DCSCR_API size_t dcscr_dataset_set_frames(const dcscr_dataset* ds, size_t index);
/* Copies set `index` into buf (dim * frames doubles, column-major). */
DCSCR_API dcscr_status dcscr_dataset_copy_set(const dcscr_dataset* ds, size_t index, double* buf,
                                              size_t buf_len);
/* Index of the set with the given id. */
DCSCR_API dcscr_status dcscr_dataset_find(const dcscr_dataset* ds, const char* id, size_t* index);
/* Writes a pairs document with `count` pairs drawn from ds: about half
 * same-label pairs, deterministic in seed. */
DCSCR_API dcscr_status dcscr_dataset_write_pairs(const dcscr_dataset* ds, size_t count,
                                                 uint64_t seed, const char* path);

/* --- single pair --- */
/* x: dim*m doubles, y: dim*n doubles. alpha_out (m) and beta_out (n) may be NULL. */
DCSCR_API dcscr_status dcscr_solve_pair(const double* x, size_t dim, size_t m, const double* y,
                                        size_t n, int same, const dcscr_hyperparams* h,
                                        double* alpha_out, double* beta_out,
                                        dcscr_pair_info* info_out);
/* Exact KKT solution of the same problem (reference oracle). */
DCSCR_API dcscr_status dcscr_kkt_solve(const double* x, size_t dim, size_t m, const double* y,
                                       size_t n, double mu, double lambda1, double lambda2,
                                       double* alpha_out, double* beta_out, double* distance_out);

/* --- models --- */
DCSCR_API dcscr_status dcscr_model_init(const dcscr_dataset* ds, const dcscr_model_config* config,
                                        dcscr_model** out);
DCSCR_API dcscr_status dcscr_model_load(const char* path, dcscr_model** out);
DCSCR_API dcscr_status dcscr_model_save(const dcscr_model* model, const char* path);
DCSCR_API void dcscr_model_free(dcscr_model* model);
DCSCR_API size_t dcscr_model_embedding_dim(const dcscr_model* model);

/* --- training --- */
/* Level-1 pretraining then level-2 contrastive training; updates model in
 * place. Either history pointer may be NULL. */
DCSCR_API dcscr_status dcscr_train(dcscr_model* model, const dcscr_dataset* ds,
                                   const dcscr_train_config* config, const dcscr_hyperparams* h,
                                   dcscr_history** level1_out, dcscr_history** level2_out);
DCSCR_API void dcscr_history_free(dcscr_history* history);
DCSCR_API size_t dcscr_history_epochs(const dcscr_history* history);
DCSCR_API double dcscr_history_mean_loss(const dcscr_history* history, size_t epoch);
DCSCR_API double dcscr_history_converged_fraction(const dcscr_history* history, size_t epoch);
/* CSV with columns epoch,mean_loss,converged_fraction */
DCSCR_API dcscr_status dcscr_history_write_csv(const dcscr_history* history, const char* path);

/* --- classification --- */
/* model may be NULL: raw frames are compared directly. */
DCSCR_API dcscr_status dcscr_classify(const dcscr_dataset* gallery, const dcscr_dataset* probes,
                                      const dcscr_model* model, const dcscr_hyperparams* h,
                                      dcscr_branch branch, dcscr_classification** out);
DCSCR_API void dcscr_classification_free(dcscr_classification* result);
DCSCR_API size_t dcscr_classification_count(const dcscr_classification* result);
DCSCR_API const char* dcscr_classification_probe_id(const dcscr_classification* result, size_t i);
DCSCR_API const char* dcscr_classification_predicted(const dcscr_classification* result, size_t i);
DCSCR_API const char* dcscr_classification_truth(const dcscr_classification* result, size_t i);
DCSCR_API double dcscr_classification_accuracy(const dcscr_classification* result);

/* --- verification --- */
DCSCR_API dcscr_status dcscr_pairs_load(const char* path, dcscr_pairs** out);
DCSCR_API void dcscr_pairs_free(dcscr_pairs* pairs);
DCSCR_API size_t dcscr_pairs_count(const dcscr_pairs* pairs);
/* thresholds may be NULL when count is 0. */
DCSCR_API dcscr_status dcscr_verify(const dcscr_pairs* pairs, const dcscr_model* model,
                                    const dcscr_hyperparams* h, dcscr_branch branch,
                                    const double* thresholds, size_t threshold_count,
                                    dcscr_verification** out);
DCSCR_API void dcscr_verification_free(dcscr_verification* result);
DCSCR_API double dcscr_verification_auc(const dcscr_verification* result);
DCSCR_API size_t dcscr_verification_pair_count(const dcscr_verification* result);
DCSCR_API double dcscr_verification_distance(const dcscr_verification* result, size_t i);
/* Empirical ROC curve (which = 0) or the requested operating points (which = 1). */
DCSCR_API size_t dcscr_verification_point_count(const dcscr_verification* result, int which);
DCSCR_API dcscr_status dcscr_verification_point(const dcscr_verification* result, int which,
                                                size_t i, double* threshold, double* fpr,
                                                double* tpr);

/* --- self checks --- */
/* Runs "oracle", "gradients" or "invariants"; one callback line per check.
 * *failures receives the number of failed checks. */
DCSCR_API dcscr_status dcscr_run_check(const char* suite, dcscr_line_callback callback, void* user,
                                       int* failures);

#ifdef __cplusplus
}
#endif

#endif /* DCSCR_DCSCR_H */
