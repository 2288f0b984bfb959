#ifndef EBNC_H
#define EBNC_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EbncStatus {
  EBNC_STATUS_OK = 0,
  EBNC_STATUS_NULL_POINTER = 1,
  EBNC_STATUS_INVALID_UTF8 = 2,
  EBNC_STATUS_IO = 3,
  EBNC_STATUS_DATA = 4,
  EBNC_STATUS_NETWORK = 5,
  EBNC_STATUS_CAP_EXCEEDED = 6,
  EBNC_STATUS_DIMENSION = 7,
  EBNC_STATUS_FIT = 8,
  EBNC_STATUS_VERIFICATION = 9,
  EBNC_STATUS_INVALID_ARGUMENT = 10,
  EBNC_STATUS_BUFFER_TOO_SMALL = 11,
  EBNC_STATUS_PANIC = 12,
} EbncStatus;

typedef enum EbncMethod {
  /**
   * Blockwise when every variable is binary, else global.
   */
  EBNC_METHOD_AUTO = 0,
  EBNC_METHOD_GLOBAL = 1,
  EBNC_METHOD_BLOCKWISE = 2,
} EbncMethod;

typedef enum EbncScoreMethod {
  EBNC_SCORE_METHOD_BIC = 0,
  EBNC_SCORE_METHOD_LAPLACE = 1,
} EbncScoreMethod;

/**
 * A classifier: an inner network plus a designated class node.
 */
typedef struct EbncClassifier EbncClassifier;

/**
 * A complete dataset bound to a network's schema.
 */
typedef struct EbncDataset EbncDataset;

/**
 * A validated Bayesian network.
 */
typedef struct EbncNetwork EbncNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *ebnc_last_error(void);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ebnc_string_free(char *s);

/**
 * Parses a network from its text format.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out_network` must be writable.
 */
enum EbncStatus ebnc_network_parse(const char *source, struct EbncNetwork **out_network);

/**
 * # Safety
 * `network` must come from `ebnc_network_parse` or be null.
 */
void ebnc_network_free(struct EbncNetwork *network);

/**
 * Number of variables, or 0 for a null handle.
 *
 * # Safety
 * `network` must be a live handle or null.
 */
size_t ebnc_network_variable_count(const struct EbncNetwork *network);

/**
 * Serializes the network back to its text format.
 *
 * # Safety
 * `network` must be a live handle; `out_text` must be writable.
 */
enum EbncStatus ebnc_network_to_text(const struct EbncNetwork *network, char **out_text);

/**
 * Builds a classifier for the variable `class_name` of `network`. The
 * network is copied; the handle may be freed afterwards.
 *
 * # Safety
 * `network` must be a live handle, `class_name` a nul-terminated string and
 * `out_classifier` writable.
 */
enum EbncStatus ebnc_classifier_new(const struct EbncNetwork *network,
                                    const char *class_name,
                                    struct EbncClassifier **out_classifier);

/**
 * # Safety
 * `classifier` must come from `ebnc_classifier_new` or be null.
 */
void ebnc_classifier_free(struct EbncClassifier *classifier);

/**
 * Number of inputs, or 0 for a null handle.
 *
 * # Safety
 * `classifier` must be a live handle or null.
 */
size_t ebnc_classifier_input_count(const struct EbncClassifier *classifier);

/**
 * Number of class states, or 0 for a null handle.
 *
 * # Safety
 * `classifier` must be a live handle or null.
 */
size_t ebnc_classifier_class_states(const struct EbncClassifier *classifier);

/**
 * Writes the `r − 1` log odds of each class state against state 0 for the
 * input states `x` (in input order).
 *
 * # Safety
 * `x` must hold `x_len` values and `out_values` room for `out_len`.
 */
enum EbncStatus ebnc_classifier_log_odds(const struct EbncClassifier *classifier,
                                         const size_t *x,
                                         size_t x_len,
                                         double *out_values,
                                         size_t out_len);

/**
 * Writes the `r` class probabilities given input states `x`.
 *
 * # Safety
 * `x` must hold `x_len` values and `out_values` room for `out_len`.
 */
enum EbncStatus ebnc_classifier_posterior(const struct EbncClassifier *classifier,
                                          const size_t *x,
                                          size_t x_len,
                                          double *out_values,
                                          size_t out_len);

/**
 * Most probable class state given input states `x`.
 *
 * # Safety
 * `x` must hold `x_len` values; `out_state` must be writable.
 */
enum EbncStatus ebnc_classifier_classify(const struct EbncClassifier *classifier,
                                         const size_t *x,
                                         size_t x_len,
                                         size_t *out_state);

/**
 * Model dimension of the classifier. `cap_rows` of 0 selects the default
 * cap.
 *
 * # Safety
 * `classifier` must be a live handle; `out_dimension` must be writable.
 */
enum EbncStatus ebnc_dimension(const struct EbncClassifier *classifier,
                               enum EbncMethod method,
                               uint64_t cap_rows,
                               size_t *out_dimension);

/**
 * Dimension report as text: method, `d`, block ranks and the basis.
 * Free the result with `ebnc_string_free`.
 *
 * # Safety
 * `classifier` must be a live handle; `out_text` must be writable.
 */
enum EbncStatus ebnc_dimension_report(const struct EbncClassifier *classifier,
                                      enum EbncMethod method,
                                      uint64_t cap_rows,
                                      char **out_text);

/**
 * Parses CSV text (header row, state labels) against the variables of
 * `network`.
 *
 * # Safety
 * `network` must be a live handle, `csv` a nul-terminated string and
 * `out_dataset` writable.
 */
enum EbncStatus ebnc_dataset_parse(const struct EbncNetwork *network,
                                   const char *csv,
                                   struct EbncDataset **out_dataset);

/**
 * # Safety
 * `dataset` must come from `ebnc_dataset_parse` or be null.
 */
void ebnc_dataset_free(struct EbncDataset *dataset);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be a live handle or null.
 */
size_t ebnc_dataset_len(const struct EbncDataset *dataset);

/**
 * Local score of the classifier's class node on `dataset`: BIC, or the
 * Laplace approximation under the default prior. `restarts` random starts
 * follow the zero start, drawn from `seed`.
 *
 * # Safety
 * Handles must be live; `out_score` must be writable.
 */
enum EbncStatus ebnc_score(const struct EbncClassifier *classifier,
                           const struct EbncDataset *dataset,
                           enum EbncScoreMethod method,
                           size_t restarts,
                           uint64_t seed,
                           double *out_score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EBNC_H */
