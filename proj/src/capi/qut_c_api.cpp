#include "qut/qut.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "core/boundary_polynomials.hpp"
#include "core/error.hpp"
#include "core/matrix_spec.hpp"
#include "core/oracle.hpp"
#include "core/qut_matrix.hpp"
#include "core/spectrum.hpp"

struct qut_matrix {
  qut::QutMatrix m;
};

struct qut_spectrum {
  qut::Spectrum s;
};

namespace {

thread_local std::string last_error;

qut_status status_of(qut::ErrorCode code) {
  using qut::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return QUT_ERR_INVALID_ARGUMENT;
    case ErrorCode::ZeroCoupling: return QUT_ERR_ZERO_COUPLING;
    case ErrorCode::BlockMismatch: return QUT_ERR_BLOCK_MISMATCH;
    case ErrorCode::BadIndices: return QUT_ERR_BAD_INDICES;
    case ErrorCode::EmptyBlock: return QUT_ERR_EMPTY_BLOCK;
    case ErrorCode::DegreeOverflow: return QUT_ERR_DEGREE_OVERFLOW;
    case ErrorCode::ZeroAmplitude: return QUT_ERR_ZERO_AMPLITUDE;
    case ErrorCode::NegativeDos: return QUT_ERR_NEGATIVE_DOS;
    case ErrorCode::NegativeSquare: return QUT_ERR_NEGATIVE_SQUARE;
    case ErrorCode::CountMismatch: return QUT_ERR_COUNT_MISMATCH;
    case ErrorCode::ConvergenceFailure: return QUT_ERR_CONVERGENCE_FAILURE;
    case ErrorCode::ParseError: return QUT_ERR_PARSE;
  }
  return QUT_ERR_INTERNAL;
}

qut_status fail(qut_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
qut_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const qut::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QUT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QUT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QUT_ERR_INTERNAL, "unknown error");
  }
}

qut_status null_argument(const char* name) {
  return fail(QUT_ERR_INVALID_ARGUMENT, std::string("null argument: ") + name);
}

qut::Preset require_preset(const char* name) {
  if (name == nullptr) throw qut::Error(qut::ErrorCode::InvalidArgument, "null preset name");
  const auto p = qut::preset_from_string(name);
  if (!p) throw qut::Error(qut::ErrorCode::InvalidArgument, std::string("unknown preset '") + name + "'");
  return *p;
}

std::vector<double> copy_list(const double* p, std::size_t n) {
  if (n > 0 && p == nullptr) throw qut::Error(qut::ErrorCode::InvalidArgument, "null boundary list");
  return std::vector<double>(p, p + n);
}

qut::oracle::DenseTridiag raw_tridiag(const double* diag, const double* offdiag, std::size_t ell) {
  if (ell == 0) throw qut::Error(qut::ErrorCode::InvalidArgument, "matrix size must be positive");
  if (diag == nullptr || (ell > 1 && offdiag == nullptr)) {
    throw qut::Error(qut::ErrorCode::InvalidArgument, "null matrix entries");
  }
  qut::oracle::DenseTridiag t;
  t.diag.assign(diag, diag + ell);
  t.offdiag.assign(offdiag, offdiag + (ell - 1));
  return t;
}

qut_status store_matrix(qut::QutMatrix m, qut_matrix** out) {
  *out = new qut_matrix{std::move(m)};
  return QUT_OK;
}

}  // namespace

extern "C" {

const char* qut_version(void) { return "1.0.0"; }

const char* qut_status_string(qut_status status) {
  switch (status) {
    case QUT_OK: return "ok";
    case QUT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QUT_ERR_ZERO_COUPLING: return "zero coupling";
    case QUT_ERR_BLOCK_MISMATCH: return "block mismatch";
    case QUT_ERR_BAD_INDICES: return "bad indices";
    case QUT_ERR_EMPTY_BLOCK: return "empty block";
    case QUT_ERR_DEGREE_OVERFLOW: return "degree overflow";
    case QUT_ERR_ZERO_AMPLITUDE: return "zero amplitude";
    case QUT_ERR_NEGATIVE_DOS: return "negative density of states";
    case QUT_ERR_NEGATIVE_SQUARE: return "negative squared component";
    case QUT_ERR_COUNT_MISMATCH: return "count mismatch";
    case QUT_ERR_CONVERGENCE_FAILURE: return "convergence failure";
    case QUT_ERR_PARSE: return "parse error";
    case QUT_ERR_NO_VECTORS: return "eigenvectors not computed";
    case QUT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qut_last_error(void) { return last_error.c_str(); }

qut_status qut_matrix_from_json(const char* json, qut_matrix** out) {
  if (json == nullptr) return null_argument("json");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { return store_matrix(qut::to_qut(qut::parse_matrix_spec(json)), out); });
}

qut_status qut_matrix_from_preset(const char* preset, size_t ell, double x, double y, double z,
                                  qut_matrix** out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const qut::MatrixSpec spec = qut::preset_spec(require_preset(preset), ell, {x, y, z});
    return store_matrix(qut::to_qut(spec), out);
  });
}

qut_status qut_matrix_create(size_t ell, double bulk_a, double bulk_b, const double* left_a,
                             const double* left_b, size_t left_len, const double* right_a,
                             const double* right_b, size_t right_len, qut_matrix** out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    return store_matrix(qut::make_qut(ell, bulk_a, bulk_b, copy_list(left_a, left_len),
                                      copy_list(left_b, left_len), copy_list(right_a, right_len),
                                      copy_list(right_b, right_len)),
                        out);
  });
}

void qut_matrix_free(qut_matrix* m) { delete m; }

size_t qut_matrix_size(const qut_matrix* m) { return m == nullptr ? 0 : m->m.ell(); }

qut_status qut_matrix_block(const qut_matrix* m, size_t* u, size_t* v) {
  if (m == nullptr) return null_argument("matrix");
  if (u != nullptr) *u = m->m.u;
  if (v != nullptr) *v = m->m.v;
  return QUT_OK;
}

qut_status qut_matrix_entries(const qut_matrix* m, double* diag, double* offdiag) {
  if (m == nullptr) return null_argument("matrix");
  if (diag != nullptr) std::copy(m->m.diag.begin(), m->m.diag.end(), diag);
  if (offdiag != nullptr) std::copy(m->m.offdiag.begin(), m->m.offdiag.end(), offdiag);
  return QUT_OK;
}

qut_status qut_preset_entries(const char* preset, size_t ell, double x, double y, double z,
                              double* diag, double* offdiag) {
  if (diag == nullptr) return null_argument("diag");
  return guarded([&] {
    const qut::MatrixSpec spec = qut::preset_spec(require_preset(preset), ell, {x, y, z});
    std::vector<double> d, o;
    qut::expand_entries(spec, d, o);
    std::copy(d.begin(), d.end(), diag);
    if (offdiag != nullptr) std::copy(o.begin(), o.end(), offdiag);
    return QUT_OK;
  });
}

void qut_solve_options_init(qut_solve_options* options) {
  if (options == nullptr) return;
  options->want_vectors = 0;
  options->single_iteration = 0;
  options->threads = 1;
}

qut_status qut_solve(const qut_matrix* m, const qut_solve_options* options, qut_spectrum** out) {
  if (m == nullptr) return null_argument("matrix");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    qut::SolveOptions opts;
    if (options != nullptr) {
      opts.want_vectors = options->want_vectors != 0;
      opts.single_iteration = options->single_iteration != 0;
      opts.threads = std::max(1u, options->threads);
    }
    *out = new qut_spectrum{qut::diagonalize(m->m, opts)};
    return QUT_OK;
  });
}

void qut_spectrum_free(qut_spectrum* s) { delete s; }

size_t qut_spectrum_size(const qut_spectrum* s) { return s == nullptr ? 0 : s->s.modes.size(); }

qut_status qut_spectrum_mode(const qut_spectrum* s, size_t index, qut_mode* out) {
  if (s == nullptr) return null_argument("spectrum");
  if (out == nullptr) return null_argument("out");
  if (index >= s->s.modes.size()) return fail(QUT_ERR_INVALID_ARGUMENT, "mode index out of range");
  const qut::SpectralMode& md = s->s.modes[index];
  qut_mode r{};
  switch (md.branch) {
    case qut::Branch::InBand: r.branch = QUT_BRANCH_IN_BAND; break;
    case qut::Branch::OutOfBand: r.branch = QUT_BRANCH_OUT_OF_BAND; break;
    case qut::Branch::BandEdge: r.branch = QUT_BRANCH_BAND_EDGE; break;
  }
  r.lambda = md.lambda;
  r.lambda_normalized = md.lambda_normalized;
  r.k = md.k;
  r.j = md.j;
  r.p = md.point.p;
  r.side = md.branch == qut::Branch::InBand ? 0 : (md.lambda_normalized > 0.0 ? 1 : -1);
  r.phi = md.phi;
  r.phi_prime = md.phi_prime;
  r.dos = md.dos_weight;
  r.residual = md.residual;
  r.o_first = s->s.eigvec_first[index];
  r.o_first_sq = md.o_first_sq;
  r.o_last_sq = md.o_last_sq;
  *out = r;
  return QUT_OK;
}

qut_status qut_spectrum_eigenvalues(const qut_spectrum* s, double* out) {
  if (s == nullptr) return null_argument("spectrum");
  if (out == nullptr) return null_argument("out");
  for (std::size_t i = 0; i < s->s.modes.size(); ++i) out[i] = s->s.modes[i].lambda;
  return QUT_OK;
}

qut_status qut_spectrum_counts(const qut_spectrum* s, size_t* in_band, size_t* above, size_t* below) {
  if (s == nullptr) return null_argument("spectrum");
  if (in_band != nullptr) *in_band = s->s.counts.in_band;
  if (above != nullptr) *above = s->s.counts.above;
  if (below != nullptr) *below = s->s.counts.below;
  return QUT_OK;
}

int qut_spectrum_has_vectors(const qut_spectrum* s) {
  return s != nullptr && !s->s.vectors.empty() ? 1 : 0;
}

qut_status qut_spectrum_vector(const qut_spectrum* s, size_t index, double* out) {
  if (s == nullptr) return null_argument("spectrum");
  if (out == nullptr) return null_argument("out");
  if (s->s.vectors.empty()) return fail(QUT_ERR_NO_VECTORS, "eigenvectors were not requested");
  const std::size_t ell = s->s.ell;
  if (index >= ell) return fail(QUT_ERR_INVALID_ARGUMENT, "mode index out of range");
  const auto first = s->s.vectors.begin() + static_cast<std::ptrdiff_t>(index * ell);
  std::copy(first, first + static_cast<std::ptrdiff_t>(ell), out);
  return QUT_OK;
}

qut_status qut_spectrum_diagnostics(const qut_spectrum* s, qut_diagnostics* out) {
  if (s == nullptr) return null_argument("spectrum");
  if (out == nullptr) return null_argument("out");
  const qut::SpectrumDiagnostics& d = s->s.diagnostics;
  out->grid_refinements = d.grid_refinements;
  out->bisection_fallbacks = d.bisection_fallbacks;
  out->band_edge_modes = d.band_edge_modes;
  out->tangent_pairs = d.tangent_pairs;
  out->clustered_modes = d.clustered_modes;
  out->negative_dos_modes = d.negative_dos_modes;
  out->twisted_in_band = d.twisted_in_band;
  out->max_residual = d.max_residual;
  out->max_norm_deviation = d.max_norm_deviation;
  return QUT_OK;
}

size_t qut_spectrum_warning_count(const qut_spectrum* s) {
  return s == nullptr ? 0 : s->s.diagnostics.warnings.size();
}

const char* qut_spectrum_warning(const qut_spectrum* s, size_t index) {
  if (s == nullptr || index >= s->s.diagnostics.warnings.size()) return nullptr;
  return s->s.diagnostics.warnings[index].c_str();
}

qut_status qut_dos_curve(const qut_matrix* m, size_t samples, double* k, double* rho,
                         double* integral) {
  if (m == nullptr) return null_argument("matrix");
  return guarded([&] {
    const qut::BoundaryPolynomials bp = qut::build_boundary_polynomials(qut::normalize(m->m));
    const qut::DosCurve c = qut::dos_curve(bp, samples);
    if (k != nullptr) std::copy(c.k.begin(), c.k.end(), k);
    if (rho != nullptr) std::copy(c.rho.begin(), c.rho.end(), rho);
    if (integral != nullptr) *integral = c.integral;
    return QUT_OK;
  });
}

qut_status qut_norm_integral(double x, double y, size_t points, double* value) {
  if (value == nullptr) return null_argument("value");
  return guarded([&] {
    *value = qut::norm_integral(x, y, points);
    return QUT_OK;
  });
}

qut_status qut_oracle_eig(const double* diag, const double* offdiag, size_t ell, double* values,
                          double* vectors) {
  if (values == nullptr) return null_argument("values");
  return guarded([&] {
    const auto e = qut::oracle::eig_all(raw_tridiag(diag, offdiag, ell), vectors != nullptr);
    std::copy(e.values.begin(), e.values.end(), values);
    if (vectors != nullptr) std::copy(e.vectors.begin(), e.vectors.end(), vectors);
    return QUT_OK;
  });
}

qut_status qut_oracle_sturm_count(const double* diag, const double* offdiag, size_t ell, double x,
                                  size_t* count) {
  if (count == nullptr) return null_argument("count");
  return guarded([&] {
    *count = qut::oracle::sturm_count(raw_tridiag(diag, offdiag, ell), x);
    return QUT_OK;
  });
}

qut_status qut_oracle_char_poly(const double* diag, const double* offdiag, size_t ell,
                                double lambda, double* sign, double* log_abs) {
  if (sign == nullptr || log_abs == nullptr) return null_argument("sign/log_abs");
  return guarded([&] {
    const qut::ScaledReal v = qut::oracle::char_poly_eval(raw_tridiag(diag, offdiag, ell), lambda);
    if (v.mantissa == 0.0) {
      *sign = 0.0;
      *log_abs = -HUGE_VAL;
    } else {
      *sign = v.mantissa > 0.0 ? 1.0 : -1.0;
      *log_abs = v.log_abs();
    }
    return QUT_OK;
  });
}

}  // extern "C"
