#ifndef STPD_H
#define STPD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call. Input, metric and missing-score
 failures share their numeric values with the CLI exit codes.
 */
typedef enum StpdStatus {
  STPD_STATUS_OK = 0,
  STPD_STATUS_NULL_POINTER = 1,
  STPD_STATUS_INPUT = 2,
  STPD_STATUS_METRIC = 3,
  STPD_STATUS_MISSING_SCORES = 4,
  STPD_STATUS_INVALID_UTF8 = 5,
  STPD_STATUS_INTERNAL = 6,
} StpdStatus;

/*
 A dense optical flow field.
 */
typedef struct StpdFlow StpdFlow;

/*
 A loaded frame sequence.
 */
typedef struct StpdSequence StpdSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the most recent failure on this thread, or an empty
 string. Valid until the next `stpd_` call on the same thread.
 */
const char *stpd_last_error_message(void);

/*
 Load a numbered PNG/BMP directory or a `.y4m` file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum StpdStatus stpd_sequence_load(const char *path, struct StpdSequence **out);

/*
 Build a gray 8-bit sequence from `frames` consecutive row-major
 `width * height` byte planes.

 # Safety
 `data` must point to `frames * width * height` readable bytes.
 */
enum StpdStatus stpd_sequence_from_gray_u8(const uint8_t *data,
                                           uintptr_t width,
                                           uintptr_t height,
                                           uintptr_t frames,
                                           struct StpdSequence **out);

/*
 Release a sequence; NULL is ignored.

 # Safety
 `seq` must come from this library and not be used afterwards.
 */
void stpd_sequence_free(struct StpdSequence *seq);

/*
 # Safety
 `seq` must be a live handle; out-pointers must be writable.
 */
enum StpdStatus stpd_sequence_dims(const struct StpdSequence *seq,
                                   uintptr_t *frames,
                                   uintptr_t *width,
                                   uintptr_t *height,
                                   uintptr_t *channels);

/*
 Straightness (radians) of a trajectory of `n_points` row-major points
 of dimension `dim`. Writes `n_points - 2` node values to
 `out_straightness` and their mean to `out_mean`.

 # Safety
 `points` must hold `n_points * dim` values and `out_straightness`
 room for `n_points - 2`.
 */
enum StpdStatus stpd_straightness(const double *points,
                                  uintptr_t n_points,
                                  uintptr_t dim,
                                  double *out_straightness,
                                  double *out_mean);

/*
 PQ_Temporal of a sequence with the default perceptual model.

 # Safety
 `seq` must be a live handle and `out` writable.
 */
enum StpdStatus stpd_pq_temporal(const struct StpdSequence *seq, double *out);

/*
 MSE_Pix on the 0–255 scale.

 # Safety
 Handles must be live and `out` writable.
 */
enum StpdStatus stpd_mse_pix(const struct StpdSequence *reference,
                             const struct StpdSequence *test,
                             double *out);

/*
 MSE_OF and tOF with natively estimated flow (default parameters).

 # Safety
 Handles must be live; out-pointers writable.
 */
enum StpdStatus stpd_mse_of_native(const struct StpdSequence *reference,
                                   const struct StpdSequence *test,
                                   double *out_mse_of,
                                   double *out_t_of);

/*
 D_ST = mse_pix + alpha * mse_of.
 */
double stpd_d_st(double mse_pix, double mse_of, double alpha);

/*
 P_ST = pq_spatial / pq_temporal; fails when pq_temporal <= 0.

 # Safety
 `out` must be writable.
 */
enum StpdStatus stpd_p_st(double pq_spatial, double pq_temporal, double *out);

/*
 Read a Middlebury `.flo` file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum StpdStatus stpd_flow_read(const char *path, struct StpdFlow **out);

/*
 Write a flow field as `.flo`.

 # Safety
 `flow` must be a live handle; `path` NUL-terminated.
 */
enum StpdStatus stpd_flow_write(const struct StpdFlow *flow, const char *path);

/*
 # Safety
 `flow` must be a live handle; out-pointers writable.
 */
enum StpdStatus stpd_flow_dims(const struct StpdFlow *flow, uintptr_t *width, uintptr_t *height);

/*
 Copy the horizontal and vertical components (row-major) into caller
 buffers of `len` elements each; `len` must equal width * height.

 # Safety
 `u` and `v` must each have room for `len` floats.
 */
enum StpdStatus stpd_flow_copy(const struct StpdFlow *flow, float *u, float *v, uintptr_t len);

/*
 Release a flow field; NULL is ignored.

 # Safety
 `flow` must come from this library and not be used afterwards.
 */
void stpd_flow_free(struct StpdFlow *flow);

/*
 Full JSON report with default settings.

 `lpips_csv` (per-frame LPIPS scores) and `flow_dir` (external `.flo`
 files) may be NULL. With `partial` non-zero, failing measures are
 recorded as unavailable instead of failing the call. The string is
 released with `stpd_string_free`.

 # Safety
 Handles must be live, non-NULL strings NUL-terminated, `out` writable.
 */
enum StpdStatus stpd_report_json(const struct StpdSequence *reference,
                                 const struct StpdSequence *test,
                                 const char *lpips_csv,
                                 const char *flow_dir,
                                 int32_t partial,
                                 char **out);

/*
 Release a string returned by this library; NULL is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void stpd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STPD_H */
