#ifndef SYNSRL_H
#define SYNSRL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SynsrlStatus {
  SYNSRL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SYNSRL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SYNSRL_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent input data.
   */
  SYNSRL_STATUS_DATA_ERROR = 3,
  /**
   * Bad settings, unknown mode, or a model that does not fit.
   */
  SYNSRL_STATUS_CONFIG_ERROR = 4,
  /**
   * Any other failure, including a caught panic.
   */
  SYNSRL_STATUS_INTERNAL_ERROR = 5,
} SynsrlStatus;

/**
 * A loaded model. Create with [`synsrl_model_load`], release with
 * [`synsrl_model_free`].
 */
typedef struct SynsrlModel SynsrlModel;

/**
 * Span-level scores; precision, recall and f1 are percentages and comp
 * is the fraction of predicates tagged perfectly.
 */
typedef struct SynsrlScores {
  double precision;
  double recall;
  double f1;
  double comp;
  uint64_t correct;
  uint64_t predicted;
  uint64_t gold;
} SynsrlScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if the last
 * call succeeded. Valid until the next synsrl call on the same thread.
 */
const char *synsrl_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *synsrl_version(void);

/**
 * Loads a checkpoint written by `synsrl train`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SynsrlStatus synsrl_model_load(const char *path, struct SynsrlModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or come from [`synsrl_model_load`] and not be used
 * afterwards.
 */
void synsrl_model_free(struct SynsrlModel *model);

/**
 * Tags every predicate marked in the first column of `predicates`
 * (CoNLL-2005 props layout) over the trees in `conllx`, and returns the
 * predicted props text in `out`.
 *
 * # Safety
 * `model` must come from [`synsrl_model_load`]; the strings must be
 * nul-terminated; `out` must be a valid pointer.
 */
enum SynsrlStatus synsrl_model_predict(const struct SynsrlModel *model,
                                       const char *conllx,
                                       const char *predicates,
                                       char **out);

/**
 * Scores predicted props text against gold props text.
 *
 * # Safety
 * The strings must be nul-terminated and `out` a valid pointer.
 */
enum SynsrlStatus synsrl_evaluate(const char *gold, const char *pred, struct SynsrlScores *out);

/**
 * Tab-separated tree features (`mode` is "sdp", "tpf" or "pe") for each
 * token and each predicate marked in `predicates`, or for every token
 * pair when `predicates` is null. `clip` bounds TPF distances.
 *
 * # Safety
 * `conllx` and `mode` must be nul-terminated; `predicates` must be null
 * or nul-terminated; `out` must be a valid pointer.
 */
enum SynsrlStatus synsrl_features(const char *conllx,
                                  const char *predicates,
                                  const char *mode,
                                  uint32_t clip,
                                  char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned through an `out` argument of
 * this library, not freed before.
 */
void synsrl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNSRL_H */
