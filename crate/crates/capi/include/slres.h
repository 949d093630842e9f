/* C ABI for the slres reservoir-computing simulator.
 *
 * Link against the slres_capi cdylib/staticlib. All functions are
 * thread-safe; error messages are per-thread. Strings returned by the
 * library are never freed by the caller.
 */

#ifndef SLRES_H
#define SLRES_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define SLRES_OK 0
#define SLRES_ERR_NULL_ARGUMENT 1
#define SLRES_ERR_CONFIG 2
#define SLRES_ERR_MISSING_DATA 3
#define SLRES_ERR_NUMERICAL 4
#define SLRES_ERR_UTF8 5
#define SLRES_ERR_PANIC 6

/* Opaque experiment handle. */
typedef struct SlresExperiment SlresExperiment;

/* Library version (static string). */
const char *slres_version(void);

/* Message of the most recent error on this thread. Valid until the next
 * failing call on the same thread. */
const char *slres_last_error(void);

/* Build an experiment from a flat `key = value` configuration string (the
 * same format the slres CLI reads via --config). Returns NULL on error;
 * consult slres_last_error(). */
SlresExperiment *slres_experiment_from_string(const char *text);

/* Build an experiment from a configuration file path. Returns NULL on
 * error. */
SlresExperiment *slres_experiment_from_file(const char *path);

/* Run one train/test experiment at the configured (lambda, phi) point.
 * On SLRES_OK, *nrmse_train and *nrmse_test hold the two errors. */
int slres_experiment_run(const SlresExperiment *exp, double *nrmse_train,
                         double *nrmse_test);

/* Free an experiment handle. NULL is a no-op. */
void slres_experiment_free(SlresExperiment *exp);

/* NARMA10 recurrence over len inputs in [0, 1]; writes len targets
 * (A_1..A_len). Fails with SLRES_ERR_NUMERICAL if the recurrence
 * diverges. */
int slres_narma10(const double *u, size_t len, double *out);

/* Normalized root-mean-square error between a target series y and a
 * prediction y_hat of equal length len (population-variance
 * normalization). */
int slres_nrmse(const double *y, const double *y_hat, size_t len,
                double *out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SLRES_H */
