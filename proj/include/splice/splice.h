#ifndef SPLICE_SPLICE_H
#define SPLICE_SPLICE_H

/* C interface to the sparse pseudo-likelihood precision estimator and its
 * experiment harness. Objects are opaque handles; every fallible call returns
 * a status code and leaves a thread-local message for splice_last_error(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPLICE_API __declspec(dllexport)
#else
#define SPLICE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum splice_status {
    SPLICE_OK = 0,
    SPLICE_ERR_DIMENSION = 1,
    SPLICE_ERR_ASYMMETRY = 2,
    SPLICE_ERR_SINGULAR = 3,
    SPLICE_ERR_DOMAIN = 4,
    SPLICE_ERR_DEGENERATE_COLUMN = 5,
    SPLICE_ERR_INPUT = 6,
    SPLICE_ERR_OUT_OF_RANGE = 7,
    SPLICE_ERR_INCONSISTENT_PARAMS = 8,
    SPLICE_ERR_DEGENERATE_RESIDUAL = 9,
    SPLICE_ERR_PRECONDITION = 10,
    SPLICE_ERR_NO_VALID_MODEL = 11,
    SPLICE_ERR_FILESYSTEM = 12,
    SPLICE_ERR_CONFIG = 13,
    SPLICE_ERR_NULL_ARGUMENT = 14,
    SPLICE_ERR_INTERNAL = 15
} splice_status;

typedef enum splice_criterion { SPLICE_AIC = 0, SPLICE_AICC = 1, SPLICE_BIC = 2 } splice_criterion;
typedef enum splice_aicc_mode { SPLICE_AICC_PRINTED = 0, SPLICE_AICC_STANDARD = 1 } splice_aicc_mode;
typedef enum splice_format { SPLICE_FORMAT_KEEP = -1, SPLICE_FORMAT_CSV = 0, SPLICE_FORMAT_JSON = 1 } splice_format;
typedef enum splice_kind { SPLICE_KIND_ACCURACY = 0, SPLICE_KIND_PSD = 1 } splice_kind;

typedef struct splice_data splice_data;
typedef struct splice_fit splice_fit;
typedef struct splice_experiment splice_experiment;
typedef struct splice_string splice_string;

SPLICE_API const char* splice_version(void);
SPLICE_API const char* splice_status_string(splice_status status);
/* Message of the last failed call on this thread; empty after success. */
SPLICE_API const char* splice_last_error(void);

/* Data: n x p samples, row-major. */
SPLICE_API splice_status splice_data_create(size_t n, size_t p, const double* row_major, splice_data** out);
SPLICE_API void splice_data_destroy(splice_data* data);
SPLICE_API size_t splice_data_rows(const splice_data* data);
SPLICE_API size_t splice_data_cols(const splice_data* data);

typedef struct splice_options {
    splice_criterion criterion;
    splice_aicc_mode aicc_mode;
    size_t warmup;
    size_t max_iter;
    double tol;
    size_t max_active; /* 0: no limit */
    double min_lambda; /* negative: no limit */
    int center;
} splice_options;

SPLICE_API void splice_options_default(splice_options* opts);

/* SPLICE path fit. The fit keeps the final iteration's path. */
SPLICE_API splice_status splice_fit_path(const splice_data* data, const splice_options* opts, splice_fit** out);
SPLICE_API void splice_fit_destroy(splice_fit* fit);
SPLICE_API splice_status splice_fit_dim(const splice_fit* fit, size_t* p);
/* Selected precision matrix, p x p row-major. */
SPLICE_API splice_status splice_fit_precision(const splice_fit* fit, double* out);
SPLICE_API splice_status splice_fit_lambda(const splice_fit* fit, double* lambda);
SPLICE_API splice_status splice_fit_iterations(const splice_fit* fit, size_t* iterations, int* converged);
SPLICE_API splice_status splice_fit_path_size(const splice_fit* fit, size_t* size);
SPLICE_API splice_status splice_fit_path_lambda(const splice_fit* fit, size_t k, double* lambda);
SPLICE_API splice_status splice_fit_path_precision(const splice_fit* fit, size_t k, double* out);

/* Cholesky baseline in natural (inverted = 0) or reversed order. */
SPLICE_API splice_status splice_fit_cholesky(const splice_data* data, const splice_options* opts, int inverted,
                                             double* precision_out, double* lambda_out);
/* Ridge estimate selected on a log-spaced lambda2 grid. */
SPLICE_API splice_status splice_fit_ridge(const splice_data* data, splice_criterion criterion, size_t grid_points,
                                          double* precision_out, double* lambda2_out);

typedef struct splice_overrides {
    int has_seed;
    uint64_t seed;
    size_t replications; /* 0: keep */
    size_t workers;      /* 0: keep */
    const char* output;  /* NULL: keep */
    splice_format format;
    int timing; /* negative: keep */
} splice_overrides;

SPLICE_API void splice_overrides_default(splice_overrides* ov);

SPLICE_API splice_status splice_experiment_load(const char* config_path, const splice_overrides* ov,
                                                splice_experiment** out);
SPLICE_API void splice_experiment_destroy(splice_experiment* exp);
SPLICE_API splice_status splice_experiment_kind(const splice_experiment* exp, splice_kind* kind);
/* Runs the experiment and writes every output file. */
SPLICE_API splice_status splice_experiment_run(splice_experiment* exp);
SPLICE_API splice_status splice_experiment_counts(const splice_experiment* exp, size_t* records, size_t* errors);
SPLICE_API const char* splice_experiment_output(const splice_experiment* exp);
/* Mean PSD path fraction of the first criterion (psd experiments). */
SPLICE_API splice_status splice_experiment_psd_fraction(const splice_experiment* exp, double* mean);

/* Recomputes summary.json and returns a CSV table of the summary. */
SPLICE_API splice_status splice_summarize(const char* result_dir, splice_string** out);
/* Recomputes the ROC plot files and returns them as text. */
SPLICE_API splice_status splice_roc(const char* result_dir, splice_string** out);

SPLICE_API const char* splice_string_data(const splice_string* s);
SPLICE_API void splice_string_destroy(splice_string* s);

#ifdef __cplusplus
}
#endif

#endif
