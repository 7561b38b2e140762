/* C interface for the fleb spectral laboratory.
 *
 * Every function returns FLEB_OK (0) or a negative error code; results are
 * written through out-pointers. Handles are created and released by this
 * library only. fleb_last_error() describes the most recent failure on the
 * calling thread.
 */

#ifndef FLEB_H
#define FLEB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define FLEB_OK 0
#define FLEB_ERR_NULL (-1)
#define FLEB_ERR_VALIDATION (-2)
#define FLEB_ERR_RESOLUTION (-3)
#define FLEB_ERR_IO (-4)
#define FLEB_ERR_PANIC (-5)

/* Opaque periodic grid. */
typedef struct FlebGrid FlebGrid;

/* Opaque complex-valued function sampled on a grid. */
typedef struct FlebFunction FlebFunction;

/* Copy the most recent error message on this thread into buf
 * (NUL-terminated, truncated to len bytes). */
int32_t fleb_last_error(char *buf, size_t len);

/* Create a periodic grid: dim in 1..=3, box edge extent > 0, points per
 * axis a power of two and at least 8. Release with fleb_grid_free. */
int32_t fleb_grid_new(size_t dim, double extent, size_t points,
                      FlebGrid **out);

/* Release a grid handle. Null is ignored. */
void fleb_grid_free(FlebGrid *grid);

/* Sample a centered Gaussian exp(-|x|^2 / (2 width^2)) on the grid.
 * Release with fleb_function_free. */
int32_t fleb_gaussian_new(const FlebGrid *grid, double width,
                          FlebFunction **out);

/* Release a function handle. Null is ignored. */
void fleb_function_free(FlebFunction *f);

/* Free Schrodinger evolution U(t) f as a new handle. */
int32_t fleb_propagate(const FlebFunction *f, double t, FlebFunction **out);

/* Cell-weighted L^2 norm. */
int32_t fleb_l2_norm(const FlebFunction *f, double *out);

/* Relative L^2 distance between two functions on the same grid. */
int32_t fleb_relative_l2_error(const FlebFunction *a, const FlebFunction *b,
                               double *out);

/* Fourier-Lebesgue norm with regularity s and exponent r >= 2. */
int32_t fleb_fourier_lebesgue_norm(const FlebFunction *f, double s, double r,
                                   double *out);

/* Run an experiment from a JSON config (same schema as the CLI) and return
 * the JSON results payload as a NUL-terminated string in *out. Free it with
 * fleb_string_free. When has_seed_override is nonzero, seed_override
 * replaces the config seed. */
int32_t fleb_run_experiment(const char *config_json, int32_t has_seed_override,
                            uint64_t seed_override, char **out);

/* Release a string returned by fleb_run_experiment. Null is ignored. */
void fleb_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* FLEB_H */
