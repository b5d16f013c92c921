#ifndef DEPTHTRACK_H
#define DEPTHTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every call. Values 3 to 9 match the command-line exit codes.
 */
typedef enum DtStatus {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  /**
   * The tracker has no particle set yet; call `dt_tracker_init`.
   */
  DT_STATUS_NOT_INITIALIZED = 2,
  DT_STATUS_IO = 3,
  DT_STATUS_FORMAT = 4,
  DT_STATUS_INVALID_ARGUMENT = 5,
  DT_STATUS_DIMENSION_MISMATCH = 6,
  DT_STATUS_UNTRACKABLE = 7,
  DT_STATUS_TIMESTAMP_MISMATCH = 8,
  DT_STATUS_OTHER = 9,
  DT_STATUS_PANIC = 10,
} DtStatus;

/**
 * Opaque triangle mesh.
 */
typedef struct DtMesh DtMesh;

/**
 * Opaque tracker together with its current particle set.
 */
typedef struct DtTracker DtTracker;

/**
 * Per-frame diagnostics of [`dt_tracker_step`].
 */
typedef struct DtDiagnostics {
  double log_evidence;
  double ess;
  /**
   * NaN when no particle saw the object.
   */
  double mean_p_vis;
  bool tracking_lost;
  bool resampled;
} DtDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len − 1` bytes) and returns the full message
 * length in bytes, excluding the terminator. `buf` may be NULL to query the
 * length.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t dt_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dt_version(void);

/**
 * Loads a Wavefront OBJ mesh.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DtStatus dt_mesh_load_obj(const char *path, struct DtMesh **out);

/**
 * Builds a mesh from `vertex_count` xyz triples and `triangle_count`
 * index triples.
 *
 * # Safety
 * `vertices` must hold `3 · vertex_count` doubles, `indices`
 * `3 · triangle_count` integers, and `out` must be valid.
 */
enum DtStatus dt_mesh_new(const double *vertices,
                          size_t vertex_count,
                          const uint32_t *indices,
                          size_t triangle_count,
                          struct DtMesh **out);

/**
 * Number of triangles kept after degenerate ones were dropped.
 *
 * # Safety
 * `mesh` must be a live handle or NULL.
 */
size_t dt_mesh_triangle_count(const struct DtMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a handle not yet freed.
 */
void dt_mesh_free(struct DtMesh *mesh);

/**
 * Creates a tracker for `mesh`. `config_toml` is the text of a run
 * configuration or NULL for the defaults; `DEPTHTRACK_*` environment
 * overrides apply either way. The mesh is copied.
 *
 * # Safety
 * `mesh` must be a live handle, `config_toml` NULL or NUL-terminated, and
 * `out` valid.
 */
enum DtStatus dt_tracker_new(const struct DtMesh *mesh,
                             const char *config_toml,
                             struct DtTracker **out);

/**
 * Configured image width and height.
 *
 * # Safety
 * `tracker` must be a live handle; `width` and `height` valid pointers.
 */
enum DtStatus dt_tracker_image_size(const struct DtTracker *tracker,
                                    uint32_t *width,
                                    uint32_t *height);

/**
 * (Re)starts tracking from a Gaussian prior around `pose` (7 doubles)
 * with the configured prior spread.
 *
 * # Safety
 * `tracker` must be a live handle and `pose` point to 7 doubles.
 */
enum DtStatus dt_tracker_init(struct DtTracker *tracker, const double *pose, double timestamp);

/**
 * Advances the filter by one depth frame of `width · height` values taken
 * `dt` seconds after the previous one. `control` is NULL or 6 doubles and
 * is used only in controlled mode. Writes the pose estimate (7 doubles) and,
 * if `diagnostics` is not NULL, the frame diagnostics.
 *
 * # Safety
 * `tracker` must be a live handle, `depths` hold `width · height` floats,
 * `control` be NULL or hold 6 doubles, `pose_out` have room for 7 doubles
 * and `diagnostics` be NULL or valid.
 */
enum DtStatus dt_tracker_step(struct DtTracker *tracker,
                              const float *depths,
                              uint32_t width,
                              uint32_t height,
                              double timestamp,
                              double dt,
                              const double *control,
                              double *pose_out,
                              struct DtDiagnostics *diagnostics);

/**
 * # Safety
 * `tracker` must be NULL or a handle not yet freed.
 */
void dt_tracker_free(struct DtTracker *tracker);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPTHTRACK_H */
