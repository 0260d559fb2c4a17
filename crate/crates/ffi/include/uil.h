/* SPDX-License-Identifier: Apache-2.0 */

#ifndef UIL_H
#define UIL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum UilStatus {
  UIL_STATUS_OK = 0,
  UIL_STATUS_NULL_ARGUMENT = 1,
  UIL_STATUS_INVALID_UTF8 = 2,
  UIL_STATUS_PARSE = 3,
  UIL_STATUS_INVALID = 4,
  UIL_STATUS_PIPELINE = 5,
  UIL_STATUS_DATA = 6,
  UIL_STATUS_SIMULATION = 7,
  UIL_STATUS_PANIC = 8,
} UilStatus;

/**
 * A parsed, validated program.
 */
typedef struct UilProgram UilProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates `source`. On success `*out` owns a new program that
 * must be released with `uil_program_free`.
 *
 * # Safety
 * `source` must be a nul-terminated string and `out` a writable pointer.
 */
enum UilStatus uil_program_parse(const char *source, struct UilProgram **out);

/**
 * Releases a program. Null is ignored.
 *
 * # Safety
 * `program` must come from `uil_program_parse` and not be used afterwards.
 */
void uil_program_free(struct UilProgram *program);

/**
 * Replaces the program with the result of a pipeline: either a preset name
 * (`B`, `SH`, `SC`, `SH-SC`, `SC-SH`) or a comma-separated pass list.
 *
 * # Safety
 * `program` must be a live handle and `pipeline` a nul-terminated string.
 */
enum UilStatus uil_program_run_pipeline(struct UilProgram *program, const char *pipeline);

/**
 * Prints the program as text into `*out`; release with `uil_string_free`.
 *
 * # Safety
 * `program` must be a live handle and `out` a writable pointer.
 */
enum UilStatus uil_program_print(const struct UilProgram *program, char **out);

/**
 * Simulates the program. `data_json` may be null for no initial data;
 * `cycle_limit` 0 uses the default. On success `*cycles` holds the cycle
 * count and `*final_state_json` the final state, to be released with
 * `uil_string_free`. Either output pointer may be null.
 *
 * # Safety
 * `program` must be a live handle; non-null pointers must be valid.
 */
enum UilStatus uil_program_simulate(const struct UilProgram *program,
                                    const char *data_json,
                                    uint64_t cycle_limit,
                                    uint64_t *cycles,
                                    char **final_state_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void uil_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *uil_last_error(void);

/**
 * Library version as a static string.
 */
const char *uil_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UIL_H */
