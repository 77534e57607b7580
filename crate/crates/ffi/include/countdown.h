/* C interface to the countdown query engine. Generated by cbindgen; do not edit. */

#ifndef COUNTDOWN_H
#define COUNTDOWN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum CdStatus {
  CD_STATUS_OK = 0,
  // A pointer argument was null or a string was not valid UTF-8.
  CD_STATUS_INVALID_ARGUMENT = 1,
  // Parsing, planning, or execution failed; see cd_engine_last_error.
  CD_STATUS_QUERY_ERROR = 2,
  // Data generation or loading failed; see cd_engine_last_error.
  CD_STATUS_DATA_ERROR = 3,
  // The engine panicked internally; the handle stays usable.
  CD_STATUS_INTERNAL = 4,
  // The output buffer was too small; the required size was written.
  CD_STATUS_BUFFER_TOO_SMALL = 5,
} CdStatus;

// Opaque engine handle: catalog, executor, and optimizer configuration.
typedef struct CdEngine CdEngine;

// Opaque query result: rows plus the rendered plan and push-down report.
typedef struct CdResult CdResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an engine with an empty catalog and default configuration.
struct CdEngine *cd_engine_new(void);

// Frees an engine handle. Passing null is a no-op.
void cd_engine_free(struct CdEngine *engine);

// Message for the most recent failure on this engine, or null. The pointer
// is borrowed and valid until the next engine call.
const char *cd_engine_last_error(const struct CdEngine *engine);

// Generates and registers a synthetic database. `schema` is "tpch_lite" or
// "ssb_lite".
enum CdStatus cd_engine_generate(struct CdEngine *engine,
                                 const char *schema,
                                 double scale,
                                 double skew,
                                 double correlation,
                                 uint64_t seed);

// Loads every table listed in a directory's manifest (the layout written
// by the CLI `gen` command).
enum CdStatus cd_engine_load_dir(struct CdEngine *engine, const char *dir);

// Sets the optimizer configuration. `estimator` is one of exact, uniform,
// equiwidth, equidepth, cms, sample. When `max_selectivity_abs` is
// negative the ratio applies, otherwise the absolute row bound does.
enum CdStatus cd_engine_configure(struct CdEngine *engine,
                                  const char *estimator,
                                  bool pushdown_enabled,
                                  uint64_t min_table_size,
                                  double max_selectivity_ratio,
                                  int64_t max_selectivity_abs);

// Caps the executor's per-operator output rows.
enum CdStatus cd_engine_set_max_rows(struct CdEngine *engine, uint64_t max_rows);

// Parses, optimizes, and executes a query. On success `*out` owns a result
// handle that must be freed with `cd_result_free`.
enum CdStatus cd_engine_query(struct CdEngine *engine, const char *sql, struct CdResult **out);

// Frees a result handle. Passing null is a no-op.
void cd_result_free(struct CdResult *result);

uint64_t cd_result_row_count(const struct CdResult *result);

uint64_t cd_result_column_count(const struct CdResult *result);

// Borrowed column name, or null when out of range.
const char *cd_result_column_name(const struct CdResult *result, uint64_t column);

// Wall time of the query, query string to finished execution, in
// microseconds.
uint64_t cd_result_micros(const struct CdResult *result);

// Borrowed rendering of the final plan tree.
const char *cd_result_plan(const struct CdResult *result);

// Borrowed push-down decision report, one line per table.
const char *cd_result_report(const struct CdResult *result);

// Renders one cell as text into `buf`. `*written` receives the full length
// including the trailing NUL; when `cap` is too small the content is
// truncated and `BufferTooSmall` is returned.
enum CdStatus cd_result_cell(const struct CdResult *result,
                             uint64_t row,
                             uint64_t column,
                             char *buf,
                             uintptr_t cap,
                             uintptr_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUNTDOWN_H */
