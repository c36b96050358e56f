#pragma once

// The analytic solver. In the normalized frame (bulk a = 0, b = 1) every
// eigenvalue inside the band is lambda = 2 cos k with
//
//   Theta(k) = (ell+1) k - 2 phi_k = pi j,
//
// where 2 phi_k = (ell-n) k - arg(u(cos k) + i t(cos k) sin k). Eigenvalues
// outside the band are lambda = +-2 cosh p, roots of the secular function on
// the hyperbolic branch.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "core/boundary_polynomials.hpp"
#include "core/chebyshev.hpp"
#include "core/qut_matrix.hpp"

namespace qut {

enum class Branch { InBand, OutOfBand, BandEdge };

const char* to_string(Branch b) noexcept;

struct SpectralMode {
  Branch branch = Branch::InBand;
  double k = 0.0;                // in-band wavenumber; 0 or pi for a band-edge mode
  long j = 0;                    // in-band root index
  cheb::HyperbolicPoint point;   // out-of-band decay rate and side
  double lambda = 0.0;           // original units once denormalized
  double lambda_normalized = 0.0;
  double phi = 0.0;
  double phi_prime = 0.0;
  double dos_weight = 0.0;       // (ell+1-2 phi')/pi, in-band only
  double residual = 0.0;         // |Theta - pi j| in-band, |S|/scale out of band
  double o_first_sq = 0.0;
  double o_last_sq = 0.0;
};

struct ModeCounts {
  std::size_t in_band = 0;
  std::size_t above = 0;
  std::size_t below = 0;
};

struct SpectrumDiagnostics {
  std::size_t grid_refinements = 0;
  std::size_t bisection_fallbacks = 0;
  std::size_t band_edge_modes = 0;
  std::size_t tangent_pairs = 0;
  std::size_t clustered_modes = 0;
  std::size_t negative_dos_modes = 0;
  std::size_t twisted_in_band = 0;
  double max_residual = 0.0;
  // Largest | ||O_k|| - 1 | over vectors built without explicit normalization.
  double max_norm_deviation = 0.0;
  std::vector<std::string> warnings;
};

struct Spectrum {
  std::size_t ell = 0;
  std::size_t n = 0;
  std::vector<SpectralMode> modes;   // descending eigenvalue
  std::vector<double> eigvec_first;  // O_k1 per mode, nonnegative
  std::vector<double> vectors;       // row-major ell x ell, one row per mode; empty unless requested
  ModeCounts counts;
  SpectrumDiagnostics diagnostics;
};

struct SolveOptions {
  bool want_vectors = false;
  // One fixed-point step from k = pi j/(ell+1) instead of converged roots.
  bool single_iteration = false;
  unsigned threads = 1;
};

struct ShiftValue {
  double phi = 0.0;        // principal branch of the arctangent
  double phi_prime = 0.0;
};

// Throws ZeroAmplitude when u and t sin k vanish together.
ShiftValue shift_phi(const BoundaryPolynomials& bp, const cheb::BandPoint& point);

// Theta'(k) = ell + 1 - 2 phi'_k, continuous through the band edges.
double theta_prime(const BoundaryPolynomials& bp, double k);

struct InBandResult {
  std::vector<SpectralMode> modes;  // ascending k
  std::size_t refinements = 0;
  std::size_t fallbacks = 0;
};

// Roots of Theta(k) = pi j in (0, pi). The scan grid is refined while fewer
// than min_count roots are found.
InBandResult solve_in_band(const BoundaryPolynomials& bp, const SolveOptions& options = {},
                           std::size_t min_count = 0);

// (ell+1-2 phi'_k)/pi. Throws NegativeDos when nonpositive.
double density_of_states(const BoundaryPolynomials& bp, const SpectralMode& mode);

struct DosCurve {
  std::vector<double> k;
  std::vector<double> rho;
  double integral = 0.0;  // trapezoid rule over [0, pi]
};

DosCurve dos_curve(const BoundaryPolynomials& bp, std::size_t samples);

struct OutOfBandCounts {
  std::size_t above = 0;  // eigenvalues >= 2
  std::size_t below = 0;  // eigenvalues <= -2
};

// Sturm counts on the normalized matrix.
OutOfBandCounts expected_out_of_band(const NormalizedQut& m);

// The secular function at lambda = 2 sign cosh p divided by
// sign^n e^{(n+1)p}, with its p-derivative and the magnitude of its terms.
struct SecularValue {
  double value = 0.0;
  double derivative = 0.0;
  double scale = 0.0;
};

SecularValue secular_scaled(const BoundaryPolynomials& bp, const cheb::HyperbolicPoint& point);

// Modes with |lambda| >= 2, including exact band-edge roots. Throws
// CountMismatch when the roots found disagree with the expected counts.
std::vector<SpectralMode> solve_out_of_band(const BoundaryPolynomials& bp, const NormalizedQut& m,
                                            OutOfBandCounts expected,
                                            SpectrumDiagnostics* diagnostics = nullptr);

// Squared first and last eigenvector components of an in-band mode. Throws
// NegativeSquare on a clearly negative value; NaN when the corner polynomial
// does not exist.
std::pair<double, double> eigvec_first_components(const BoundaryPolynomials& bp,
                                                  const SpectralMode& mode);

// chi_corner(lambda)/chi'(lambda) at lambda = 2 xi, for a root lambda. Free of
// the 1/(1-xi^2) poles and usable off the band.
double boundary_square_ratio(const BoundaryPolynomials& bp, const UtPoint& corner, double xi);

// d chi/d lambda at lambda = 2 xi.
double char_poly_derivative(const BoundaryPolynomials& bp, double xi);

// Eigenvector of one mode in the normalized frame. In-band vectors are
// assembled from the boundary recurrences and the bulk plane wave without
// normalization; other modes use a twisted factorization and are normalized.
// Sign convention: first component nonnegative.
std::vector<double> eigvec_full(const BoundaryPolynomials& bp, const NormalizedQut& m,
                                const SpectralMode& mode);

// Solution of (T - lambda) x = gamma_r e_r with r chosen where |gamma_r| is
// smallest, weighted by 1 + penalty[r] when given; normalized.
std::vector<double> twisted_eigvec(const QutMatrix& m, double lambda,
                                   const std::vector<double>* penalty = nullptr,
                                   std::size_t* twist = nullptr);

bool is_mirror_symmetric(const QutMatrix& m);

// Maps eigenvalues and vectors from the normalized frame back.
void denormalize_spectrum(Spectrum& s, const NormalizedQut& m);

// Full pipeline, results in the normalized frame.
Spectrum diagonalize_normalized(const NormalizedQut& m, const SolveOptions& options = {});

Spectrum diagonalize(const QutMatrix& m, const SolveOptions& options = {});

}  // namespace qut
