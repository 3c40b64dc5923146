/* gapflow public C API.
 *
 * Spectral toolkit for dislocated periodic Schroedinger operators on the
 * tube R x (R/Z): operator assembly, eigenvalue counting and window spectra,
 * the dislocation sweep experiments, and the acceptance suite.
 *
 * Every fallible call returns a gf_status; on failure gf_last_error() holds
 * a thread-local message until the next failing call on the same thread.
 * Handles are opaque and must be released with their matching free function.
 * All functions are thread-safe on distinct handles; a single handle must
 * not be mutated concurrently.
 */
#ifndef GAPFLOW_H
#define GAPFLOW_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gf_status {
  GF_OK = 0,
  GF_INVALID_ARGUMENT = 1, /* bad parameter at the call boundary */
  GF_DOMAIN = 2,           /* input outside the mathematical domain */
  GF_CONFIG = 3,           /* configuration text failed validation */
  GF_CAPACITY = 4,         /* problem size over a documented cap */
  GF_NUMERIC = 5,          /* computation failed to certify its result */
  GF_IO = 6,               /* file system failure */
  GF_INTERNAL = 7
} gf_status;

/* Library version, "major.minor.patch". Static storage; do not free. */
const char* gf_version(void);

/* Message for the most recent failing call on this thread; empty string if
 * none. Static thread-local storage; do not free. */
const char* gf_last_error(void);

/* Releases a string returned through a char** out parameter. */
void gf_string_free(char* s);

/* ---- run configuration -------------------------------------------------- */

typedef struct gf_config gf_config;

/* Parses the documented flat key = value schema. On GF_CONFIG the message in
 * gf_last_error() enumerates every validation error, not just the first. */
gf_status gf_config_parse_text(const char* text, gf_config** out);
gf_status gf_config_parse_file(const char* path, gf_config** out);

/* Applies one key = value override on top of a parsed config. */
gf_status gf_config_set(gf_config* cfg, const char* key, const char* value);

/* Looks up the canonical value of one key ("auto" for auto-resolved fields).
 * Unknown keys return GF_INVALID_ARGUMENT. */
gf_status gf_config_get(const gf_config* cfg, const char* key, char** out);

/* Canonical serialization: every key, stable order, 17-significant-digit
 * floats. parse(serialize(c)) == c. */
gf_status gf_config_serialize(const gf_config* cfg, char** out);

/* FNV-1a 64 hash of the canonical serialization, 16 hex digits. */
gf_status gf_config_hash(const gf_config* cfg, char** out);

void gf_config_free(gf_config* cfg);

/* Runs the configured experiment. Output files (CSV/JSON plus manifest.json)
 * land in the config's output directory. *exit_code receives the experiment
 * exit status: 0 on success, 1 when a verify run had failing criteria. */
gf_status gf_run(const gf_config* cfg, int* exit_code);

/* Runs acceptance criteria directly (indices 1..10; n = 0 runs all ten).
 * Streams one PASS/FAIL line per criterion to stdout when verbose != 0.
 * *all_passed receives 1 iff every selected criterion passed. */
gf_status gf_verify(const int* criteria, size_t n, int threads, int verbose,
                    int* all_passed);

/* ---- operators ----------------------------------------------------------- */

typedef struct gf_operator gf_operator;

/* Dislocated Hamiltonian -Laplace + V_t on the truncated tube
 * (x_lo, x_hi) x (R/Z) with Dirichlet ends: nx axial intervals, ny transverse
 * nodes (ny >= 4). V_t follows the named preset family (free, mathieu,
 * product, quasiperiodic, halfspace, step) with parameters q, q2, phase, eps,
 * shift; t is snapped to the axial grid. */
gf_status gf_assemble(const char* preset, double q, double q2, double phase,
                      double eps, double shift, double t, double x_lo, double x_hi,
                      int nx, int ny, gf_operator** out);

void gf_operator_free(gf_operator* op);

gf_status gf_operator_dim(const gf_operator* op, int64_t* dim);

/* Exact number of eigenvalues strictly below energy (matrix inertia). */
gf_status gf_count_below(const gf_operator* op, double energy, int64_t* count);

/* Eigenvalues in [lo, hi), ascending, inertia-certified complete. On entry
 * *n_inout is the capacity of values; on success it receives the count.
 * GF_CAPACITY when the window holds more than the supplied capacity. */
gf_status gf_window_eigenvalues(const gf_operator* op, double lo, double hi,
                                double* values, size_t* n_inout);

/* The n lowest eigenvalues, ascending. */
gf_status gf_lowest_eigenvalues(const gf_operator* op, double* values, size_t n);

/* ---- kernels -------------------------------------------------------------- */

/* Modified Bessel function K0; quiet NaN for r <= 0. */
double gf_bessel_k0(double r);

#ifdef __cplusplus
}
#endif

#endif /* GAPFLOW_H */
