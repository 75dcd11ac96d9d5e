#ifndef ALCH_ALCH_H
#define ALCH_ALCH_H

/*
 * C interface to the alch matrix offload server and client.
 *
 * Every function returns an alch_status; ALCH_OK is zero. On failure the
 * message of the last error on the calling thread is available from
 * alch_last_error(). Objects are opaque and freed with their *_free call.
 * Matrices are row-major arrays of doubles.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(ALCH_BUILDING_LIBRARY)
#define ALCH_API __attribute__((visibility("default")))
#else
#define ALCH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum alch_status {
    ALCH_OK = 0,
    ALCH_VERSION_MISMATCH = 1,
    ALCH_INSUFFICIENT_WORKERS = 2,
    ALCH_RESOURCE_EXHAUSTED = 3,
    ALCH_INCOMPLETE_MATRIX = 4,
    ALCH_UNKNOWN_ROUTINE = 5,
    ALCH_SCHEMA_VIOLATION = 6,
    ALCH_NUMERICAL_FAILURE = 7,
    ALCH_UNKNOWN_MATRIX = 8,
    ALCH_INVALID_REQUEST = 9,
    ALCH_UNKNOWN_LIBRARY = 10,
    ALCH_ROW_OUT_OF_RANGE = 11,
    ALCH_DUPLICATE_ROW = 12,
    ALCH_WIDTH_MISMATCH = 13,
    ALCH_PROTOCOL = 14,
    ALCH_INTERNAL = 15,
    ALCH_CONNECTION = 100,
    ALCH_INVALID_ARGUMENT = 101,
    ALCH_INVALID_HANDLE = 102,
    ALCH_IO = 103,
    ALCH_NOT_FOUND = 104
} alch_status;

typedef struct alch_server alch_server;
typedef struct alch_session alch_session;
typedef struct alch_matrix alch_matrix;
typedef struct alch_params alch_params;
typedef struct alch_result alch_result;

/* Message of the last failed call on this thread ("" if none). */
ALCH_API const char* alch_last_error(void);
ALCH_API const char* alch_status_name(alch_status status);
/* "trace", "debug", "info", "warn", "error" or "off". */
ALCH_API alch_status alch_set_log_level(const char* level);

/* ---- server ---- */

/* host NULL means 127.0.0.1; port 0 binds an ephemeral port; memory_budget 0 means the default (8 GiB). */
ALCH_API alch_status alch_server_start(const char* host, uint16_t port, uint16_t workers,
                                       uint64_t memory_budget, alch_server** out);
ALCH_API uint16_t alch_server_port(const alch_server* server);
ALCH_API size_t alch_server_live_matrices(const alch_server* server);
/* Stops (if running) and frees. */
ALCH_API void alch_server_free(alch_server* server);

/* ---- session ---- */

/* batch_rows 0 means the default (128); timeout_ms 0 waits forever. */
ALCH_API alch_status alch_connect(const char* host, uint16_t port, uint16_t workers, uint32_t batch_rows,
                                  int timeout_ms, alch_session** out);
ALCH_API uint32_t alch_session_id(const alch_session* session);
ALCH_API size_t alch_session_worker_count(const alch_session* session);
/* Idempotent; invalidates every matrix of the session. */
ALCH_API void alch_session_close(alch_session* session);
/* Closes (if open) and frees. */
ALCH_API void alch_session_free(alch_session* session);

/* ---- matrices ---- */

/* Uploads `rows` rows of `cols` values. `indices` may be NULL (row i has
 * index i) or give the row index of each of the `rows` rows of `values`. */
ALCH_API alch_status alch_send_matrix(alch_session* session, uint64_t rows, uint64_t cols,
                                      const uint64_t* indices, const double* values, alch_matrix** out);
ALCH_API uint64_t alch_matrix_id(const alch_matrix* matrix);
ALCH_API void alch_matrix_dims(const alch_matrix* matrix, uint64_t* rows, uint64_t* cols);
/* Writes rows*cols values into `out`; `capacity` is its length in doubles. */
ALCH_API alch_status alch_fetch_matrix(alch_session* session, const alch_matrix* matrix, double* out,
                                       size_t capacity);
ALCH_API alch_status alch_release_matrix(alch_session* session, alch_matrix* matrix);
/* Frees the local handle only; the server copy lives until released or the session closes. */
ALCH_API void alch_matrix_free(alch_matrix* matrix);

/* ---- routine parameters ---- */

ALCH_API alch_params* alch_params_new(void);
ALCH_API void alch_params_free(alch_params* params);
ALCH_API alch_status alch_params_set_f64(alch_params* params, const char* key, double value);
ALCH_API alch_status alch_params_set_i64(alch_params* params, const char* key, int64_t value);
ALCH_API alch_status alch_params_set_str(alch_params* params, const char* key, const char* value);
ALCH_API alch_status alch_params_set_bool(alch_params* params, const char* key, int value);

/* ---- tasks ---- */

/* Runs `routine` of `library` (registered on first use). `params` may be NULL. */
ALCH_API alch_status alch_run(alch_session* session, const char* library, const char* routine,
                              const alch_matrix* const* inputs, size_t input_count, const alch_params* params,
                              alch_result** out);
ALCH_API size_t alch_result_output_count(const alch_result* result);
/* Moves output `index` out of the result; the caller frees it. */
ALCH_API alch_status alch_result_take_output(alch_result* result, size_t index, alch_matrix** out);
/* Scalar getters return ALCH_NOT_FOUND for a missing key or a different type. */
ALCH_API alch_status alch_result_get_f64(const alch_result* result, const char* key, double* out);
ALCH_API alch_status alch_result_get_i64(const alch_result* result, const char* key, int64_t* out);
ALCH_API alch_status alch_result_get_bool(const alch_result* result, const char* key, int* out);
/* The string stays valid until the result is freed. */
ALCH_API alch_status alch_result_get_str(const alch_result* result, const char* key, const char** out);
ALCH_API void alch_result_free(alch_result* result);

/* ---- matrix files ---- */

ALCH_API alch_status alch_binfile_write(const char* path, uint64_t rows, uint64_t cols, const double* values);
ALCH_API alch_status alch_binfile_info(const char* path, uint64_t* rows, uint64_t* cols);
ALCH_API alch_status alch_binfile_read(const char* path, double* out, size_t capacity);

/* Writes a synthetic dataset. kind: "gaussian", "lowrank" or "speech-like".
 * rank applies to lowrank, labels to speech-like; 0 picks the default. */
ALCH_API alch_status alch_datagen(const char* kind, uint64_t rows, uint64_t cols, uint64_t seed, uint64_t rank,
                                  uint64_t labels, const char* path);

#ifdef __cplusplus
}
#endif

#endif
