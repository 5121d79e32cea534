#ifndef STUDYSCOPE_H
#define STUDYSCOPE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StudyscopeStatus {
  STUDYSCOPE_STATUS_OK = 0,
  STUDYSCOPE_STATUS_NULL_ARGUMENT = 1,
  STUDYSCOPE_STATUS_INVALID_UTF8 = 2,
  STUDYSCOPE_STATUS_IO = 3,
  STUDYSCOPE_STATUS_PARSE = 4,
  STUDYSCOPE_STATUS_VALIDATION = 5,
  STUDYSCOPE_STATUS_UNKNOWN_STUDY = 6,
  STUDYSCOPE_STATUS_UNKNOWN_CRITERION = 7,
  STUDYSCOPE_STATUS_INVALID_FILTER = 8,
  STUDYSCOPE_STATUS_MATRIX_ABSENT = 9,
  STUDYSCOPE_STATUS_INTERNAL = 10,
} StudyscopeStatus;

// Opaque snapshot handle.
typedef struct StudyscopeSnapshot StudyscopeSnapshot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into this library on the same thread.
const char *studyscope_last_error(void);

// Build a snapshot from a TOML config file.
//
// # Safety
// `config_path` is a NUL-terminated string; `out` is writable.
enum StudyscopeStatus studyscope_snapshot_open_config(const char *config_path,
                                                      struct StudyscopeSnapshot **out);

// Build a snapshot from individual input files. Every path except
// `corpus_path` may be NULL.
//
// # Safety
// Non-NULL paths are NUL-terminated strings; `out` is writable.
enum StudyscopeStatus studyscope_snapshot_open_files(const char *schema_path,
                                                     const char *corpus_path,
                                                     const char *abstracts_path,
                                                     const char *bibliography_path,
                                                     const char *references_dir,
                                                     struct StudyscopeSnapshot **out);

// Load a snapshot previously saved as JSON.
//
// # Safety
// `path` is a NUL-terminated string; `out` is writable.
enum StudyscopeStatus studyscope_snapshot_load(const char *path, struct StudyscopeSnapshot **out);

// # Safety
// `snap` is NULL or a handle from one of the open functions, not yet freed.
void studyscope_snapshot_free(struct StudyscopeSnapshot *snap);

// # Safety
// `snap` is a live handle; `out` is writable.
enum StudyscopeStatus studyscope_snapshot_id(const struct StudyscopeSnapshot *snap, char **out);

// Number of records; 0 for a NULL handle.
//
// # Safety
// `snap` is NULL or a live handle.
size_t studyscope_snapshot_len(const struct StudyscopeSnapshot *snap);

// Matching study ids as a JSON array. `filter_json` may be NULL.
//
// # Safety
// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
enum StudyscopeStatus studyscope_filter(const struct StudyscopeSnapshot *snap,
                                        const char *filter_json,
                                        char **out);

// Distribution of one criterion over the filtered records, as JSON.
//
// # Safety
// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
enum StudyscopeStatus studyscope_distribution(const struct StudyscopeSnapshot *snap,
                                              const char *filter_json,
                                              const char *criterion,
                                              size_t max_bars,
                                              char **out);

// Neighbors of `study_id` at or above `threshold`, as JSON. `mode` is
// "db" or "abstract".
//
// # Safety
// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
enum StudyscopeStatus studyscope_neighbors(const struct StudyscopeSnapshot *snap,
                                           const char *study_id,
                                           const char *mode,
                                           double threshold,
                                           char **out);

// CSV export of the filtered records. `columns_json` is a JSON array of
// column names, or NULL for every column.
//
// # Safety
// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
enum StudyscopeStatus studyscope_export_csv(const struct StudyscopeSnapshot *snap,
                                            const char *filter_json,
                                            const char *columns_json,
                                            char **out);

// # Safety
// `s` is NULL or a string returned by this library, not yet freed.
void studyscope_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STUDYSCOPE_H */
