#ifndef QUT_QUT_H
#define QUT_QUT_H

/* C interface to the quasi-uniform tridiagonal (QUT) eigensolver.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching _free function. Every fallible call returns a qut_status; on
 * failure qut_last_error() describes the most recent error on the calling
 * thread. Eigenvalues are ordered descending throughout. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(QUT_BUILDING_LIBRARY)
#    define QUT_API __declspec(dllexport)
#  else
#    define QUT_API __declspec(dllimport)
#  endif
#else
#  define QUT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qut_status {
  QUT_OK = 0,
  QUT_ERR_INVALID_ARGUMENT,
  QUT_ERR_ZERO_COUPLING,
  QUT_ERR_BLOCK_MISMATCH,
  QUT_ERR_BAD_INDICES,
  QUT_ERR_EMPTY_BLOCK,
  QUT_ERR_DEGREE_OVERFLOW,
  QUT_ERR_ZERO_AMPLITUDE,
  QUT_ERR_NEGATIVE_DOS,
  QUT_ERR_NEGATIVE_SQUARE,
  QUT_ERR_COUNT_MISMATCH,
  QUT_ERR_CONVERGENCE_FAILURE,
  QUT_ERR_PARSE,
  QUT_ERR_NO_VECTORS,
  QUT_ERR_INTERNAL
} qut_status;

typedef enum qut_branch {
  QUT_BRANCH_IN_BAND = 0,
  QUT_BRANCH_OUT_OF_BAND,
  QUT_BRANCH_BAND_EDGE
} qut_branch;

typedef struct qut_matrix qut_matrix;
typedef struct qut_spectrum qut_spectrum;

typedef struct qut_solve_options {
  int want_vectors;
  /* One fixed-point step per root instead of converged roots. */
  int single_iteration;
  /* 0 or 1 runs sequentially; results do not depend on the thread count. */
  unsigned threads;
} qut_solve_options;

/* One eigenmode. k, j, phi, phi_prime and dos are meaningful for in-band
 * modes; p and side (+1 above the band, -1 below) for the others. */
typedef struct qut_mode {
  qut_branch branch;
  double lambda;
  double lambda_normalized;
  double k;
  long j;
  double p;
  int side;
  double phi;
  double phi_prime;
  double dos;
  double residual;
  double o_first;
  double o_first_sq;
  double o_last_sq;
} qut_mode;

typedef struct qut_diagnostics {
  size_t grid_refinements;
  size_t bisection_fallbacks;
  size_t band_edge_modes;
  size_t tangent_pairs;
  size_t clustered_modes;
  size_t negative_dos_modes;
  size_t twisted_in_band;
  double max_residual;
  double max_norm_deviation;
} qut_diagnostics;

QUT_API const char* qut_version(void);
QUT_API const char* qut_status_string(qut_status status);
/* Message of the last failed call on this thread; empty if none. */
QUT_API const char* qut_last_error(void);

/* Matrices. A preset is "two-edge", "deep-edge" or "asymmetric" with
 * parameters x, y, z (z is ignored by the first two). */
QUT_API qut_status qut_matrix_from_json(const char* json, qut_matrix** out);
QUT_API qut_status qut_matrix_from_preset(const char* preset, size_t ell, double x, double y,
                                          double z, qut_matrix** out);
/* Uniform bulk plus explicit boundary rows; left_b[i] couples row i+1 to row
 * i+2, right_b[i] couples right row i to the row before it. */
QUT_API qut_status qut_matrix_create(size_t ell, double bulk_a, double bulk_b,
                                     const double* left_a, const double* left_b, size_t left_len,
                                     const double* right_a, const double* right_b,
                                     size_t right_len, qut_matrix** out);
QUT_API void qut_matrix_free(qut_matrix* m);
QUT_API size_t qut_matrix_size(const qut_matrix* m);
/* 1-based first and last rows of the uniform block. */
QUT_API qut_status qut_matrix_block(const qut_matrix* m, size_t* u, size_t* v);
/* diag receives ell values, offdiag ell - 1. */
QUT_API qut_status qut_matrix_entries(const qut_matrix* m, double* diag, double* offdiag);

/* Entries of a preset without validation (a zero coupling is allowed). */
QUT_API qut_status qut_preset_entries(const char* preset, size_t ell, double x, double y, double z,
                                      double* diag, double* offdiag);

/* Analytic solver. */
QUT_API void qut_solve_options_init(qut_solve_options* options);
QUT_API qut_status qut_solve(const qut_matrix* m, const qut_solve_options* options,
                             qut_spectrum** out);
QUT_API void qut_spectrum_free(qut_spectrum* s);
QUT_API size_t qut_spectrum_size(const qut_spectrum* s);
QUT_API qut_status qut_spectrum_mode(const qut_spectrum* s, size_t index, qut_mode* out);
QUT_API qut_status qut_spectrum_eigenvalues(const qut_spectrum* s, double* out);
QUT_API qut_status qut_spectrum_counts(const qut_spectrum* s, size_t* in_band, size_t* above,
                                       size_t* below);
QUT_API int qut_spectrum_has_vectors(const qut_spectrum* s);
/* Eigenvector of mode `index` in the original frame; ell values. */
QUT_API qut_status qut_spectrum_vector(const qut_spectrum* s, size_t index, double* out);
QUT_API qut_status qut_spectrum_diagnostics(const qut_spectrum* s, qut_diagnostics* out);
QUT_API size_t qut_spectrum_warning_count(const qut_spectrum* s);
QUT_API const char* qut_spectrum_warning(const qut_spectrum* s, size_t index);

/* Density of states (ell + 1 - 2 phi'_k)/pi on `samples` uniform points of
 * [0, pi], and its trapezoid integral. */
QUT_API qut_status qut_dos_curve(const qut_matrix* m, size_t samples, double* k, double* rho,
                                 double* integral);

/* (2/pi) int_0^pi y^2 sin^2 k / ([(2-y^2) cos k - x]^2 + y^4 sin^2 k) dk;
 * points >= 64 initial trapezoid intervals. */
QUT_API qut_status qut_norm_integral(double x, double y, size_t points, double* value);

/* Brute-force reference solver on a raw symmetric tridiagonal matrix. vectors
 * may be NULL; otherwise it receives ell x ell values, one row per
 * eigenvalue. */
QUT_API qut_status qut_oracle_eig(const double* diag, const double* offdiag, size_t ell,
                                  double* values, double* vectors);
/* Number of eigenvalues strictly below x. */
QUT_API qut_status qut_oracle_sturm_count(const double* diag, const double* offdiag, size_t ell,
                                          double x, size_t* count);
/* chi(lambda) = sign * exp(log_abs); sign is 0 for an exact zero. */
QUT_API qut_status qut_oracle_char_poly(const double* diag, const double* offdiag, size_t ell,
                                        double lambda, double* sign, double* log_abs);

#ifdef __cplusplus
}
#endif

#endif
