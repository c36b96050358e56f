#include "core/boundary_polynomials.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <sstream>

#include "core/chebyshev.hpp"
#include "core/error.hpp"

namespace qut {

namespace {

// The expansions are written once over a scalar type S, which is either Poly
// (symbolic coefficients) or Dual (value and xi-derivative at one point).
struct PolyField {
  Poly xi() const { return Poly::identity(); }
  Poly constant(double c) const { return Poly::constant(c); }
};

struct DualField {
  double x;
  Dual xi() const { return {x, 1.0}; }
  Dual constant(double c) const { return {c, 0.0}; }
};

template <class S>
using Pair = std::array<S, 2>;

// Coefficients on the basis (U_m, U_{m-1}, U_{m-2}).
template <class S>
using Triple = std::array<S, 3>;

template <class S, class F>
Pair<S> expand_right(std::span<const double> a, std::span<const double> b, std::size_t v0, const F& f) {
  // (cur, prev) hold chi_{u:m} and chi_{u:m-1} as pairs on (U_m, U_{m-1}).
  Pair<S> cur{f.constant(1.0), f.constant(0.0)};
  Pair<S> prev{f.constant(0.0), f.constant(1.0)};
  for (std::size_t row = v0 + 1; row < a.size(); ++row) {
    const S factor = 2.0 * f.xi() - f.constant(a[row]);
    const double b2 = b[row - 1] * b[row - 1];
    Pair<S> next{factor * cur[0] - b2 * prev[0], factor * cur[1] - b2 * prev[1]};
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

// Rows [u0, v0] (0-based) of the given tridiagonal matrix form the uniform
// block; the result is on the basis of that block's size.
template <class S, class F>
Triple<S> expand_full(std::span<const double> a, std::span<const double> b, std::size_t u0,
                      std::size_t v0, const F& f) {
  const Pair<S> right = expand_right<S>(a, b, v0, f);
  // chi_{u:ell} and chi_{u+1:ell}; the latter has block size m - 1, so its
  // pair shifts one slot down the basis.
  Triple<S> near{right[0], right[1], f.constant(0.0)};
  Triple<S> far{f.constant(0.0), right[0], right[1]};
  for (std::size_t row = u0; row-- > 0;) {
    const S factor = 2.0 * f.xi() - f.constant(a[row]);
    const double b2 = b[row] * b[row];
    Triple<S> next;
    for (std::size_t j = 0; j < 3; ++j) next[j] = factor * near[j] - b2 * far[j];
    far = std::move(near);
    near = std::move(next);
  }
  return near;
}

// U_{m-i} = A_i U_m + B_i T_{m+1}
template <class S, class F>
Pair<S> shifted_u_basis(std::size_t i, const F& f) {
  S a_prev = f.constant(1.0), b_prev = f.constant(0.0);
  if (i == 0) return {a_prev, b_prev};
  S a_cur = f.xi(), b_cur = f.constant(-1.0);
  for (std::size_t s = 1; s < i; ++s) {
    S a_next = 2.0 * f.xi() * a_cur - a_prev;
    S b_next = 2.0 * f.xi() * b_cur - b_prev;
    a_prev = std::move(a_cur);
    b_prev = std::move(b_cur);
    a_cur = std::move(a_next);
    b_cur = std::move(b_next);
  }
  return {a_cur, b_cur};
}

// Re-expresses an expansion on (U_{m-d}, U_{m-d-1}, U_{m-d-2}) on (U_m, T_{m+1}).
template <class S, class F>
Pair<S> rebase(const Triple<S>& e, std::size_t d, const F& f) {
  Pair<S> out{f.constant(0.0), f.constant(0.0)};
  for (std::size_t j = 0; j < 3; ++j) {
    const Pair<S> basis = shifted_u_basis<S>(d + j, f);
    out[0] = out[0] + basis[0] * e[j];
    out[1] = out[1] + basis[1] * e[j];
  }
  return out;
}

template <class S, class F>
Pair<S> corner(std::span<const double> a, std::span<const double> b, std::size_t u0, std::size_t v0,
               std::size_t n, const F& f) {
  const std::size_t sub_n = v0 + 1 - u0;
  return rebase<S>(expand_full<S>(a, b, u0, v0, f), n - sub_n, f);
}

// Each submatrix keeps the part of the block that survives the row removal;
// at most one block row is lost.
template <class S, class F>
std::optional<Pair<S>> upper_left_corner(const QutMatrix& q, const F& f) {
  if (q.v < 2) return std::nullopt;
  const std::span<const double> a(q.diag);
  const std::span<const double> b(q.offdiag);
  const std::size_t first = std::max<std::size_t>(q.u, 2);
  return corner<S>(a.subspan(1), b.subspan(1), first - 2, q.v - 2, q.block_size(), f);
}

template <class S, class F>
std::optional<Pair<S>> lower_right_corner(const QutMatrix& q, const F& f) {
  const std::size_t ell = q.ell();
  if (q.u + 1 > ell) return std::nullopt;
  const std::span<const double> a(q.diag);
  const std::span<const double> b(q.offdiag);
  const std::size_t last = std::min(q.v, ell - 1);
  return corner<S>(a.first(ell - 1), b.first(ell - 2), q.u - 1, last - 1, q.block_size(), f);
}

UtPair to_pair(const Pair<Poly>& p) { return {p[0], p[1]}; }

UtPoint to_point(const Pair<Dual>& p) { return {p[0].v, p[0].d, p[1].v, p[1].d}; }

}  // namespace

RightExpansion build_right_expansion(const NormalizedQut& m) {
  const QutMatrix& q = m.inner;
  const Pair<Poly> r = expand_right<Poly>(q.diag, q.offdiag, q.v - 1, PolyField{});
  return {r[0], r[1]};
}

FullExpansion build_full_expansion(const NormalizedQut& m) {
  const QutMatrix& q = m.inner;
  const Triple<Poly> e = expand_full<Poly>(q.diag, q.offdiag, q.u - 1, q.v - 1, PolyField{});
  return {e[0], e[1], e[2]};
}

UtPair to_ut(const FullExpansion& e, std::size_t ell, std::size_t n) {
  UtPair out;
  out.u = e.p0 + Poly::identity() * e.p1 + Poly{-1.0, 0.0, 2.0} * e.p2;
  out.t = -e.p1 - 2.0 * Poly::identity() * e.p2;
  const int width = static_cast<int>(ell) - static_cast<int>(n);
  if (out.u.degree() > width || out.t.degree() > width - 1) {
    std::ostringstream msg;
    msg << "boundary polynomial degrees (" << out.u.degree() << ", " << out.t.degree()
        << ") exceed the bound for boundary width " << width;
    throw Error(ErrorCode::DegreeOverflow, msg.str());
  }
  return out;
}

CornerPolynomials corner_polynomials(const NormalizedQut& m) {
  auto ul = upper_left_corner<Poly>(m.inner, PolyField{});
  if (!ul) throw Error(ErrorCode::EmptyBlock, "removing the first row leaves no uniform block");
  auto lr = lower_right_corner<Poly>(m.inner, PolyField{});
  if (!lr) throw Error(ErrorCode::EmptyBlock, "removing the last row leaves no uniform block");
  return {to_pair(*ul), to_pair(*lr)};
}

StarredPolynomials starred_polynomials(const Poly& u, const Poly& t, std::size_t n) {
  const Poly one_minus_xi2{1.0, 0.0, -1.0};
  const double np1 = static_cast<double>(n + 1);
  StarredPolynomials out;
  out.u_num = one_minus_xi2 * u.derivative() + Poly::identity() * u + np1 * (one_minus_xi2 * t);
  out.t_num = one_minus_xi2 * t.derivative() - np1 * u;
  return out;
}

BoundaryPolynomials build_boundary_polynomials(const NormalizedQut& m) {
  BoundaryPolynomials bp;
  bp.ell = m.inner.ell();
  bp.n = m.inner.block_size();
  bp.matrix = m.inner;
  bp.expansion = build_full_expansion(m);
  bp.full = to_ut(bp.expansion, bp.ell, bp.n);
  bp.starred = starred_polynomials(bp.full.u, bp.full.t, bp.n);
  if (auto ul = upper_left_corner<Poly>(m.inner, PolyField{})) bp.upper_left = to_pair(*ul);
  if (auto lr = lower_right_corner<Poly>(m.inner, PolyField{})) bp.lower_right = to_pair(*lr);
  return bp;
}

UtPoint evaluate_full(const BoundaryPolynomials& bp, double xi) {
  const QutMatrix& q = bp.matrix;
  const DualField f{xi};
  return to_point(rebase<Dual>(expand_full<Dual>(q.diag, q.offdiag, q.u - 1, q.v - 1, f), 0, f));
}

std::optional<UtPoint> evaluate_upper_left(const BoundaryPolynomials& bp, double xi) {
  auto c = upper_left_corner<Dual>(bp.matrix, DualField{xi});
  if (!c) return std::nullopt;
  return to_point(*c);
}

std::optional<UtPoint> evaluate_lower_right(const BoundaryPolynomials& bp, double xi) {
  auto c = lower_right_corner<Dual>(bp.matrix, DualField{xi});
  if (!c) return std::nullopt;
  return to_point(*c);
}

StarredPoint starred_at(const UtPoint& p, double xi, std::size_t n) {
  const double w = 1.0 - xi * xi;
  const double np1 = static_cast<double>(n + 1);
  return {w * p.du + xi * p.u + np1 * w * p.t, w * p.dt - np1 * p.u};
}

double decomposed_char_poly(const BoundaryPolynomials& bp, double xi) {
  const int n = static_cast<int>(bp.n);
  return bp.full.u(xi) * cheb::u_recurrence(n, xi) + bp.full.t(xi) * cheb::t_recurrence(n + 1, xi);
}

double decomposed_char_poly_derivative(const BoundaryPolynomials& bp, double xi) {
  const int n = static_cast<int>(bp.n);
  const double num = bp.starred.u_num(xi) * cheb::u_recurrence(n, xi) +
                     bp.starred.t_num(xi) * cheb::t_recurrence(n + 1, xi);
  // d/d lambda = (1/2) d/d xi
  return num / (2.0 * (1.0 - xi * xi));
}

}  // namespace qut
