#ifndef HICONTRAST_H
#define HICONTRAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HC_STATUS_NULL_POINTER = 1,
  /**
   * A string was not UTF-8, an array had the wrong length or an index was out of range.
   */
  HC_STATUS_INVALID_ARGUMENT = 2,
  HC_STATUS_GEOMETRY = 3,
  HC_STATUS_RESOLUTION = 4,
  HC_STATUS_VALIDATION = 5,
  HC_STATUS_PARSE = 6,
  HC_STATUS_CONFIG = 7,
  HC_STATUS_SOLVER = 8,
  HC_STATUS_INTERNAL = 9,
  HC_STATUS_UNSUPPORTED = 10,
  HC_STATUS_DIMENSION = 11,
  HC_STATUS_IO = 12,
  /**
   * The library panicked; the handle arguments should be treated as poisoned.
   */
  HC_STATUS_PANIC = 13,
} HcStatus;

/**
 * Triangulation with subdomain tags.
 */
typedef struct HcMesh HcMesh;

/**
 * Scalar high-contrast problem with its assembled operators and characteristic basis.
 */
typedef struct HcPressure HcPressure;

/**
 * Expansion terms `u_0, ..., u_J` of a scalar problem.
 */
typedef struct HcSeries HcSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hc_version(void);

/**
 * Message of the most recent failure on this thread, or null if none occurred.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *hc_last_error(void);

/**
 * Generates a mesh from a JSON geometry description
 * (`{"outer": {...}, "inclusions": [...], "target_h": h}`).
 *
 * # Safety
 * `geometry_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HcStatus hc_mesh_generate(const char *geometry_json, struct HcMesh **out);

/**
 * Reads a mesh JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HcStatus hc_mesh_load(const char *path, struct HcMesh **out);

/**
 * Writes a mesh JSON file.
 *
 * # Safety
 * `mesh` must come from this library and `path` be a NUL-terminated string.
 */
enum HcStatus hc_mesh_save(const struct HcMesh *mesh, const char *path);

/**
 * Number of nodes, triangles and inclusions.
 *
 * # Safety
 * `mesh` must come from this library; each output pointer may be null to skip it.
 */
enum HcStatus hc_mesh_sizes(const struct HcMesh *mesh,
                            size_t *nodes,
                            size_t *triangles,
                            size_t *inclusions);

/**
 * Copies node coordinates as interleaved `x, y` pairs; `len` must be twice the node count.
 *
 * # Safety
 * `mesh` must come from this library and `xy` point to `len` writable doubles.
 */
enum HcStatus hc_mesh_coordinates(const struct HcMesh *mesh, double *xy, size_t len);

/**
 * Releases a mesh; null is ignored.
 *
 * # Safety
 * `mesh` must be null or come from this library and not be used afterwards.
 */
void hc_mesh_free(struct HcMesh *mesh);

/**
 * Sets up the scalar problem `-div(κ∇u) = f`, `u = g` on the outer boundary, on a copy
 * of `mesh`. `source_json` and `boundary_json` are function descriptions such as
 * `{"kind": "constant", "value": 1}`; null means zero. `solver_tol <= 0` selects the default.
 *
 * # Safety
 * `mesh` must come from this library, the strings be NUL-terminated or null, and `out` valid.
 */
enum HcStatus hc_pressure_new(const struct HcMesh *mesh,
                              const char *source_json,
                              const char *boundary_json,
                              double solver_tol,
                              struct HcPressure **out);

/**
 * Releases a scalar problem; null is ignored.
 *
 * # Safety
 * `problem` must be null or come from this library and not be used afterwards.
 */
void hc_pressure_free(struct HcPressure *problem);

/**
 * Number of nodal values in every field of `problem`.
 *
 * # Safety
 * `problem` must come from this library and `len` be valid.
 */
enum HcStatus hc_pressure_field_len(const struct HcPressure *problem, size_t *len);

/**
 * Computes the terms `u_0, ..., u_order`.
 *
 * # Safety
 * `problem` must come from this library and `out` be valid.
 */
enum HcStatus hc_pressure_expand(const struct HcPressure *problem,
                                 size_t order,
                                 struct HcSeries **out);

/**
 * Solves the full problem at contrast `eta` directly.
 *
 * # Safety
 * `problem` must come from this library and `u` point to `len` writable doubles.
 */
enum HcStatus hc_pressure_solve_direct(const struct HcPressure *problem,
                                       double eta,
                                       double *u,
                                       size_t len);

/**
 * `‖reference − approx‖_{H¹} / ‖reference‖_{H¹}`.
 *
 * # Safety
 * `problem` must come from this library, both arrays hold `len` doubles and `error` be valid.
 */
enum HcStatus hc_pressure_relative_h1_error(const struct HcPressure *problem,
                                            const double *reference,
                                            const double *approx,
                                            size_t len,
                                            double *error);

/**
 * Number of computed terms (`J + 1`).
 *
 * # Safety
 * `series` must come from this library and `count` be valid.
 */
enum HcStatus hc_series_num_terms(const struct HcSeries *series, size_t *count);

/**
 * Copies term `j`.
 *
 * # Safety
 * `series` must come from this library and `u` point to `len` writable doubles.
 */
enum HcStatus hc_series_term(const struct HcSeries *series, size_t j, double *u, size_t len);

/**
 * Writes `Σ_{j ≤ order} eta^{-j} u_j`.
 *
 * # Safety
 * `series` must come from this library and `u` point to `len` writable doubles.
 */
enum HcStatus hc_series_partial_sum(const struct HcSeries *series,
                                    size_t order,
                                    double eta,
                                    double *u,
                                    size_t len);

/**
 * Releases a series; null is ignored.
 *
 * # Safety
 * `series` must be null or come from this library and not be used afterwards.
 */
void hc_series_free(struct HcSeries *series);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HICONTRAST_H */
