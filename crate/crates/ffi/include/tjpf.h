#ifndef TJPF_H
#define TJPF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TjpfStatus {
  TJPF_STATUS_OK = 0,
  TJPF_STATUS_NULL_POINTER = 1,
  TJPF_STATUS_INVALID_ARGUMENT = 2,
  TJPF_STATUS_CONFIG = 3,
  TJPF_STATUS_FILTER = 4,
  TJPF_STATUS_MODEL = 5,
  TJPF_STATUS_IO = 6,
  TJPF_STATUS_PANIC = 7,
} TjpfStatus;

/**
 * A validated experiment configuration.
 */
typedef struct TjpfExperiment TjpfExperiment;

/**
 * A stochastic Lorenz '63 model.
 */
typedef struct TjpfLorenz63 TjpfLorenz63;

/**
 * Results of a finished run.
 */
typedef struct TjpfRun TjpfRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread; empty after a successful call.
 * The pointer stays valid until the next call on the same thread.
 */
const char *tjpf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tjpf_version(void);

/**
 * Parses a JSON experiment configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `out` a valid pointer.
 */
enum TjpfStatus tjpf_experiment_from_json(const char *json, struct TjpfExperiment **out);

/**
 * Looks up a named preset.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `out` a valid pointer.
 */
enum TjpfStatus tjpf_experiment_from_preset(const char *name, struct TjpfExperiment **out);

/**
 * Sets the truth seed and derives the ensemble seed from it.
 *
 * # Safety
 * `exp` must be a live handle.
 */
enum TjpfStatus tjpf_experiment_set_seed(struct TjpfExperiment *exp, uint64_t seed);

/**
 * Overrides the run length. Must stay at least one assimilation interval.
 *
 * # Safety
 * `exp` must be a live handle.
 */
enum TjpfStatus tjpf_experiment_set_steps(struct TjpfExperiment *exp, size_t steps);

/**
 * Writes the configuration as JSON into `buf` (NUL-terminated, truncated to
 * `len`). Returns the full length needed, excluding the NUL, in `needed`.
 *
 * # Safety
 * `exp` must be a live handle; `buf` may be null when `len` is 0.
 */
enum TjpfStatus tjpf_experiment_to_json(const struct TjpfExperiment *exp,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

/**
 * # Safety
 * `exp` must be null or a handle not yet freed.
 */
void tjpf_experiment_free(struct TjpfExperiment *exp);

/**
 * Runs the experiment. On a filter or model failure the partial outputs
 * are written (when an output directory is set) and no run handle is made.
 *
 * # Safety
 * `exp` must be a live handle; `out_dir` null or a NUL-terminated path;
 * `out` a valid pointer.
 */
enum TjpfStatus tjpf_experiment_run(const struct TjpfExperiment *exp,
                                    const char *out_dir,
                                    struct TjpfRun **out);

/**
 * Number of recorded steps.
 *
 * # Safety
 * `run` must be a live handle.
 */
size_t tjpf_run_len(const struct TjpfRun *run);

/**
 * Number of assimilation times.
 *
 * # Safety
 * `run` must be a live handle.
 */
size_t tjpf_run_n_analyses(const struct TjpfRun *run);

/**
 * Copies the per-step full-state RMSE into `dst` (at least `tjpf_run_len`
 * values).
 *
 * # Safety
 * `run` must be a live handle, `dst` valid for `len` doubles.
 */
enum TjpfStatus tjpf_run_rmse(const struct TjpfRun *run, double *dst, size_t len);

/**
 * Copies the per-step ensemble spread into `dst`.
 *
 * # Safety
 * `run` must be a live handle, `dst` valid for `len` doubles.
 */
enum TjpfStatus tjpf_run_es(const struct TjpfRun *run, double *dst, size_t len);

/**
 * Writes all output files of the run into `dir`.
 *
 * # Safety
 * `run` must be a live handle, `dir` a NUL-terminated path.
 */
enum TjpfStatus tjpf_run_write(const struct TjpfRun *run, const char *dir);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void tjpf_run_free(struct TjpfRun *run);

/**
 * Creates a Lorenz '63 model `dx = alpha (y - x)`, `dy = (beta - z) x - y`,
 * `dz = x y - gamma z`,
 * step `dt` and additive model-error std `sigma`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TjpfStatus tjpf_lorenz63_new(double alpha,
                                  double beta,
                                  double gamma,
                                  double dt,
                                  double sigma,
                                  struct TjpfLorenz63 **out);

/**
 * One stochastic step: `next = M(state, noise)` with `noise` three
 * standard normals (pass null for a deterministic RK4 step).
 *
 * # Safety
 * `model` must be a live handle; `state` and `next` valid for 3 doubles;
 * `noise` null or valid for 3 doubles.
 */
enum TjpfStatus tjpf_lorenz63_step(const struct TjpfLorenz63 *model,
                                   const double *state,
                                   const double *noise,
                                   double *next);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void tjpf_lorenz63_free(struct TjpfLorenz63 *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TJPF_H */
