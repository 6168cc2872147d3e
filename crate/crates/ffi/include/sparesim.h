/* C interface for the sparesim spare-parts inventory toolkit.
 *
 * Conventions:
 *  - Fallible functions return sparesim_status; SPARESIM_OK is 0.
 *  - After a failure, sparesim_last_error() returns a thread-local
 *    message valid until the next failing call on the same thread.
 *  - Strings returned through out-parameters are owned by the library;
 *    release them with sparesim_string_free().
 *  - Matrix handles are opaque; release them with sparesim_matrix_free().
 *
 * This header is maintained by hand to match crates/ffi/src/lib.rs; a
 * cbindgen.toml is provided to regenerate it where cbindgen is available.
 */

#ifndef SPARESIM_H
#define SPARESIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sparesim_status {
  SPARESIM_OK = 0,
  SPARESIM_INVALID_ARGUMENT = 1,
  SPARESIM_PARSE = 2,
  SPARESIM_COMPUTE = 3,
} sparesim_status;

typedef enum sparesim_weight_method {
  SPARESIM_WEIGHT_EIGENVECTOR = 0,
  SPARESIM_WEIGHT_COLUMN_NORMALIZATION = 1,
  SPARESIM_WEIGHT_ROW_GEOMETRIC_MEAN = 2,
} sparesim_weight_method;

/* Opaque validated pairwise-comparison matrix. */
typedef struct sparesim_matrix sparesim_matrix;

typedef struct sparesim_consistency {
  double lambda_max;
  double inconsistency_index;
  double random_index;
  double inconsistency_ratio;
  /* 1 when the ratio is acceptable (at most 0.1), else 0. */
  uint8_t acceptable;
} sparesim_consistency;

/* ABI version of this library; bumped on breaking header changes. */
uint32_t sparesim_abi_version(void);

/* Thread-local message for the most recent failure; never null. */
const char *sparesim_last_error(void);

/* Parse and validate a judgment matrix from JSON:
 *   {"criteria": ["name", ...], "matrix": [[...], ...]}
 * On success *out owns a new handle. */
sparesim_status sparesim_matrix_from_json(const char *json,
                                          sparesim_matrix **out);

void sparesim_matrix_free(sparesim_matrix *handle);

/* Matrix dimension; 0 for a null handle. */
size_t sparesim_matrix_dim(const sparesim_matrix *handle);

/* Extract criterion weights into out_weights[0..len); len must equal the
 * matrix dimension. Weights are positive and sum to 1. */
sparesim_status sparesim_matrix_weights(const sparesim_matrix *handle,
                                        sparesim_weight_method method,
                                        double *out_weights, size_t len);

/* Consistency diagnostics with eigenvector weights. */
sparesim_status sparesim_matrix_consistency(const sparesim_matrix *handle,
                                            sparesim_consistency *out);

/* Fit all applicable probability families to len nonnegative observations
 * and rank by information criterion. On success *out_json holds
 *   {"candidates": [...], "skipped": [...]}
 * with candidates sorted best first. */
sparesim_status sparesim_fit_series(const double *values, size_t len,
                                    char **out_json);

/* Replicated (ROP, ROQ) simulation from a JSON request:
 *   {"policy": {"rop": R, "roq": Q},
 *    "demand": {"kind": "...", ...},
 *    "lead": {"kind": "...", ...},
 *    "costs": {"holding": H, "ordering": O, "shortage": S},
 *    "config": {"horizon_years": Y, "seed": N, ...},
 *    "replications": R}
 * On success *out_json holds per-metric replication statistics. */
sparesim_status sparesim_simulate(const char *request_json, char **out_json);

/* Release a string returned by this library. Null is a no-op. */
void sparesim_string_free(char *s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPARESIM_H */
