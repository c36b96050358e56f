#pragma once

// Low-degree boundary polynomials of a normalized QUT matrix. With n the
// size of the uniform block and lambda = 2 xi,
//
//   chi(2 xi) = u(xi) U_n(xi) + t(xi) T_{n+1}(xi),
//
// and the same decomposition, on the same (U_n, T_{n+1}) basis, holds for the
// principal submatrices with the first row removed (upper-left corner
// polynomials) or the last row removed (lower-right corner polynomials).

#include <cstddef>
#include <optional>

#include "core/poly.hpp"
#include "core/qut_matrix.hpp"

namespace qut {

// chi_{u:ell}(2 xi) = p0~ U_n + p1~ U_{n-1}
struct RightExpansion {
  Poly p0;
  Poly p1;
};

// chi(2 xi) = p0 U_n + p1 U_{n-1} + p2 U_{n-2}
struct FullExpansion {
  Poly p0;
  Poly p1;
  Poly p2;
};

struct UtPair {
  Poly u;
  Poly t;
};

struct CornerPolynomials {
  UtPair upper_left;   // chi_{2:ell}
  UtPair lower_right;  // chi_{1:ell-1}
};

// Numerators over the common denominator (1 - xi^2):
//   u* = u_num / (1 - xi^2),  t* = t_num / (1 - xi^2),
// so that d chi(2 xi)/d xi = u* U_n + t* T_{n+1}.
struct StarredPolynomials {
  Poly u_num;
  Poly t_num;
};

// Value and xi-derivative at one point.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }

// u, t and their xi-derivatives at one point.
struct UtPoint {
  double u = 0.0;
  double du = 0.0;
  double t = 0.0;
  double dt = 0.0;
};

struct StarredPoint {
  double u_num = 0.0;
  double t_num = 0.0;
};

struct BoundaryPolynomials {
  std::size_t ell = 0;
  std::size_t n = 0;
  // The normalized matrix, for pointwise evaluation.
  QutMatrix matrix;
  FullExpansion expansion;
  UtPair full;
  // Empty when removing the row would empty the uniform block.
  std::optional<UtPair> upper_left;
  std::optional<UtPair> lower_right;
  StarredPolynomials starred;
};

RightExpansion build_right_expansion(const NormalizedQut& m);
FullExpansion build_full_expansion(const NormalizedQut& m);

// u = p0 + xi p1 + (2 xi^2 - 1) p2,  t = -p1 - 2 xi p2. Throws DegreeOverflow
// if the degrees exceed ell - n and ell - n - 1.
UtPair to_ut(const FullExpansion& e, std::size_t ell, std::size_t n);

// Throws EmptyBlock when either submatrix would lose its whole uniform block.
CornerPolynomials corner_polynomials(const NormalizedQut& m);

StarredPolynomials starred_polynomials(const Poly& u, const Poly& t, std::size_t n);

BoundaryPolynomials build_boundary_polynomials(const NormalizedQut& m);

// Pointwise values from the row recurrences. The monomial coefficients can be
// far larger than the values they produce when the boundary is strong, so the
// solver evaluates through these instead of the polynomials.
UtPoint evaluate_full(const BoundaryPolynomials& bp, double xi);
std::optional<UtPoint> evaluate_upper_left(const BoundaryPolynomials& bp, double xi);
std::optional<UtPoint> evaluate_lower_right(const BoundaryPolynomials& bp, double xi);
StarredPoint starred_at(const UtPoint& p, double xi, std::size_t n);

// chi(2 xi) through the decomposition; valid for any real xi but evaluated by
// plain recurrences, so it overflows for large n when |xi| > 1.
double decomposed_char_poly(const BoundaryPolynomials& bp, double xi);

// d chi / d lambda at lambda = 2 xi, |xi| != 1, through the starred form.
double decomposed_char_poly_derivative(const BoundaryPolynomials& bp, double xi);

}  // namespace qut
