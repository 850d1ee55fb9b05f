#ifndef UNILAYOUT_H
#define UNILAYOUT_H

/* Generated by cbindgen from the unilayout-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UlStatus {
  UL_STATUS_OK = 0,
  UL_STATUS_NULL_POINTER = 1,
  UL_STATUS_INVALID_UTF8 = 2,
  // Malformed layout, configuration or document.
  UL_STATUS_INVALID_INPUT = 3,
  UL_STATUS_IO = 4,
  UL_STATUS_OUT_OF_RANGE = 5,
  UL_STATUS_INTERNAL = 6,
  UL_STATUS_PANIC = 7,
} UlStatus;

typedef enum UlTask {
  UL_TASK_BFEF = 0,
  UL_TASK_BCEF = 1,
  UL_TASK_BFEC = 2,
  UL_TASK_BCEC = 3,
} UlTask;

typedef enum UlMargin {
  UL_MARGIN_DPO = 0,
  UL_MARGIN_FIXED = 1,
  UL_MARGIN_DYNAMIC = 2,
} UlMargin;

// A layout together with its optional background and saliency map.
typedef struct UlLayout UlLayout;

// The outcome of judging a layout.
typedef struct UlVerdict UlVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *ul_last_error(void);

// Library version as a static string.
const char *ul_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ul_string_free(char *s);

// Creates an empty layout.
//
// # Safety
// `out` must be a valid pointer.
enum UlStatus ul_layout_new(uint32_t canvas_w,
                            uint32_t canvas_h,
                            enum UlTask task,
                            struct UlLayout **out);

// Parses a layout document from JSON. Raster paths in the document are
// ignored; use [`ul_layout_load`] to read them.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum UlStatus ul_layout_from_json(const char *json, struct UlLayout **out);

// Reads a layout file together with its raster sidecars.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum UlStatus ul_layout_load(const char *path, struct UlLayout **out);

// Parses model output in the layout grammar.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum UlStatus ul_layout_parse(const char *text,
                              uint32_t canvas_w,
                              uint32_t canvas_h,
                              enum UlTask task,
                              struct UlLayout **out);

// Releases a layout. NULL is ignored.
//
// # Safety
// `layout` must come from this library and not have been freed.
void ul_layout_free(struct UlLayout *layout);

// Appends an element with box `[x_min, x_max) x [y_min, y_max)`.
//
// # Safety
// `layout` must be a live handle and `category` a NUL-terminated string.
enum UlStatus ul_layout_push(struct UlLayout *layout,
                             const char *category,
                             uint32_t x_min,
                             uint32_t y_min,
                             uint32_t x_max,
                             uint32_t y_max);

// Number of elements.
//
// # Safety
// `layout` must be a live handle and `out` a valid pointer.
enum UlStatus ul_layout_len(const struct UlLayout *layout, size_t *out);

// Layout document as JSON; free with [`ul_string_free`].
//
// # Safety
// `layout` must be a live handle and `out` a valid pointer.
enum UlStatus ul_layout_to_json(const struct UlLayout *layout, char **out);

// Layout in the prompt grammar; free with [`ul_string_free`].
//
// # Safety
// `layout` must be a live handle and `out` a valid pointer.
enum UlStatus ul_layout_serialize(const struct UlLayout *layout, char **out);

// Judges a layout. `config_toml` may be NULL for the default rule set.
//
// # Safety
// `layout` must be a live handle, `config_toml` NULL or a NUL-terminated
// string, and `out` a valid pointer.
enum UlStatus ul_qualify(const struct UlLayout *layout,
                         const char *config_toml,
                         struct UlVerdict **out);

// Releases a verdict. NULL is ignored.
//
// # Safety
// `verdict` must come from this library and not have been freed.
void ul_verdict_free(struct UlVerdict *verdict);

// # Safety
// `verdict` must be a live handle and `out` a valid pointer.
enum UlStatus ul_verdict_is_qualified(const struct UlVerdict *verdict, bool *out);

// Layout reward in `[0, 1]`.
//
// # Safety
// `verdict` must be a live handle and `out` a valid pointer.
enum UlStatus ul_verdict_score(const struct UlVerdict *verdict, double *out);

// # Safety
// `verdict` must be a live handle and `out` a valid pointer.
enum UlStatus ul_verdict_violation_count(const struct UlVerdict *verdict, size_t *out);

// Full verdict with its report as JSON; free with [`ul_string_free`].
//
// # Safety
// `verdict` must be a live handle and `out` a valid pointer.
enum UlStatus ul_verdict_to_json(const struct UlVerdict *verdict, char **out);

// Mean pairwise overlap of a layout.
//
// # Safety
// `layout` must be a live handle and `out` a valid pointer.
enum UlStatus ul_metric_overlap(const struct UlLayout *layout, double *out);

// Alignment score of a layout.
//
// # Safety
// `layout` must be a live handle and `out` a valid pointer.
enum UlStatus ul_metric_alignment(const struct UlLayout *layout, double *out);

// Maximum mean IoU between a generated layout and a reference.
//
// # Safety
// Both layouts must be live handles and `out` a valid pointer.
enum UlStatus ul_metric_max_iou(const struct UlLayout *generated,
                                const struct UlLayout *reference,
                                double *out);

// The dynamic-margin transform `e^d - e^-d`.
double ul_f_transform(double delta);

// Preference loss from policy/reference log-ratios of winner and loser.
// `fixed_margin` is read only for [`UlMargin::Fixed`].
//
// # Safety
// `out` must be a valid pointer.
enum UlStatus ul_preference_loss(enum UlMargin kind,
                                 double fixed_margin,
                                 double beta,
                                 double ratio_winner,
                                 double ratio_loser,
                                 double delta,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNILAYOUT_H */
