#ifndef SWI_H
#define SWI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SwiStatus {
  SWI_STATUS_OK = 0,
  SWI_STATUS_NULL_POINTER = 1,
  SWI_STATUS_INVALID_ARGUMENT = 2,
  SWI_STATUS_IO = 3,
  SWI_STATUS_INCONSISTENT = 4,
  SWI_STATUS_DIMENSION_MISMATCH = 5,
  SWI_STATUS_FORMAT = 6,
  SWI_STATUS_NUMERICAL = 7,
  SWI_STATUS_PANIC = 8,
} SwiStatus;

typedef enum SwiFilterKind {
  SWI_FILTER_KIND_NONE = 0,
  SWI_FILTER_KIND_GAUSSIAN = 1,
  SWI_FILTER_KIND_JOINT_BILATERAL = 2,
} SwiFilterKind;

typedef struct SwiDepthMap SwiDepthMap;

typedef struct SwiFrameStack SwiFrameStack;

typedef struct SwiOptics SwiOptics;

typedef struct SwiSchedule SwiSchedule;

/**
 * Envelope filter settings; sigmas in µm on the object.
 */
typedef struct SwiFilterSpec {
  enum SwiFilterKind kind;
  double spatial_sigma_um;
  double intensity_sigma;
  double pixel_pitch_um;
} SwiFilterSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *swi_last_error_message(void);

/**
 * Optics from two wavelengths in nm.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SwiStatus swi_optics_new(double lambda1_nm, double lambda2_nm, struct SwiOptics **out);

/**
 * Optics with a chosen synthetic wavelength in µm.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SwiStatus swi_optics_from_synthetic(double lambda1_nm,
                                         double lambda_s_um,
                                         struct SwiOptics **out);

/**
 * Synthetic wavelength in µm, or NaN for a null handle.
 *
 * # Safety
 * `optics` must be NULL or a live handle.
 */
double swi_optics_lambda_s(const struct SwiOptics *optics);

/**
 * Unambiguous depth range `λ_s/2` in µm, or NaN for a null handle.
 *
 * # Safety
 * `optics` must be NULL or a live handle.
 */
double swi_optics_unambiguous_range(const struct SwiOptics *optics);

/**
 * # Safety
 * `optics` must be NULL or a handle not yet freed.
 */
void swi_optics_free(struct SwiOptics *optics);

/**
 * # Safety
 * `optics` must be a live handle and `out` a valid pointer.
 */
enum SwiStatus swi_schedule_new(const struct SwiOptics *optics,
                                size_t m,
                                size_t n,
                                double l0_um,
                                struct SwiSchedule **out);

/**
 * `M·N`, or 0 for a null handle.
 *
 * # Safety
 * `schedule` must be NULL or a live handle.
 */
size_t swi_schedule_frame_count(const struct SwiSchedule *schedule);

/**
 * Mirror position for synthetic shift `n` and carrier shift `m`, µm.
 *
 * # Safety
 * `schedule` must be a live handle and `out` a valid pointer.
 */
enum SwiStatus swi_schedule_position(const struct SwiSchedule *schedule,
                                     size_t n,
                                     size_t m,
                                     double *out);

/**
 * # Safety
 * `schedule` must be NULL or a handle not yet freed.
 */
void swi_schedule_free(struct SwiSchedule *schedule);

/**
 * Loads a frame-stack directory (`frame_n{n}_m{m}.pfm` plus `stack.json`).
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SwiStatus swi_frame_stack_load(const char *dir, struct SwiFrameStack **out);

/**
 * Builds a stack from `M·N` row-major frames stored back to back in
 * `data`, ordered `frames[n·M + m]`.
 *
 * # Safety
 * `data` must point to `len` doubles; handles must be live.
 */
enum SwiStatus swi_frame_stack_new(const struct SwiOptics *optics,
                                   const struct SwiSchedule *schedule,
                                   size_t width,
                                   size_t height,
                                   const double *data,
                                   size_t len,
                                   struct SwiFrameStack **out);

/**
 * # Safety
 * `stack` must be NULL or a live handle.
 */
size_t swi_frame_stack_width(const struct SwiFrameStack *stack);

/**
 * # Safety
 * `stack` must be NULL or a live handle.
 */
size_t swi_frame_stack_height(const struct SwiFrameStack *stack);

/**
 * # Safety
 * `stack` must be NULL or a handle not yet freed.
 */
void swi_frame_stack_free(struct SwiFrameStack *stack);

/**
 * Runs the full phase retrieval pipeline. `guide` holds `width·height`
 * intensities and may be NULL unless the filter is joint bilateral.
 *
 * # Safety
 * Handles must be live; `guide` must be NULL or point to `guide_len` doubles.
 */
enum SwiStatus swi_reconstruct(const struct SwiFrameStack *stack,
                               struct SwiFilterSpec filter,
                               const double *guide,
                               size_t guide_len,
                               struct SwiDepthMap **out);

/**
 * Depth map from row-major values; `mask` may be NULL (all valid), nonzero
 * bytes mark valid pixels. Non-finite depths are masked.
 *
 * # Safety
 * `depth` must point to `width·height` doubles and `mask`, if not NULL, to
 * as many bytes.
 */
enum SwiStatus swi_depth_new(size_t width,
                             size_t height,
                             const double *depth,
                             const uint8_t *mask,
                             struct SwiDepthMap **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SwiStatus swi_depth_load_pfm(const char *path, struct SwiDepthMap **out);

/**
 * Writes a little-endian PFM; masked pixels are stored as NaN.
 *
 * # Safety
 * `depth` must be a live handle and `path` a NUL-terminated string.
 */
enum SwiStatus swi_depth_save_pfm(const struct SwiDepthMap *depth, const char *path);

/**
 * # Safety
 * `depth` must be NULL or a live handle.
 */
size_t swi_depth_width(const struct SwiDepthMap *depth);

/**
 * # Safety
 * `depth` must be NULL or a live handle.
 */
size_t swi_depth_height(const struct SwiDepthMap *depth);

/**
 * Copies depths and mask (1 valid, 0 masked) into caller buffers of `len`
 * elements; either buffer may be NULL.
 *
 * # Safety
 * Non-NULL buffers must hold `len` elements.
 */
enum SwiStatus swi_depth_copy(const struct SwiDepthMap *depth,
                              double *values,
                              uint8_t *mask,
                              size_t len);

/**
 * # Safety
 * `depth` must be NULL or a handle not yet freed.
 */
void swi_depth_free(struct SwiDepthMap *depth);

/**
 * RMSE over jointly valid pixels.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SwiStatus swi_rmse(const struct SwiDepthMap *est, const struct SwiDepthMap *gt, double *out);

/**
 * Median absolute error over jointly valid pixels.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SwiStatus swi_medae(const struct SwiDepthMap *est, const struct SwiDepthMap *gt, double *out);

/**
 * RMSE with residuals wrapped to the unambiguous range.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SwiStatus swi_wrapped_rmse(const struct SwiDepthMap *est,
                                const struct SwiDepthMap *gt,
                                const struct SwiOptics *optics,
                                double *out);

/**
 * Per-axis downsampling factor of an equal-time point-scanning system.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SwiStatus swi_scanning_equivalent_factor(double scan_rate_hz,
                                              size_t images_per_depth,
                                              double total_time_s,
                                              size_t image_width,
                                              size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWI_H */
