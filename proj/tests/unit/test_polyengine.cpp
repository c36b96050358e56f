#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "core/boundary_polynomials.hpp"
#include "core/chebyshev.hpp"
#include "core/error.hpp"
#include "core/matrix_spec.hpp"
#include "core/oracle.hpp"
#include "random_qut.hpp"

using namespace qut;

namespace {

constexpr double kPi = std::numbers::pi;

bool near(const Poly& a, const Poly& b, double tol = 1e-13) {
  const int deg = std::max(a.degree(), b.degree());
  for (int i = 0; i <= deg; ++i) {
    if (std::fabs(a.coeff(i) - b.coeff(i)) > tol) return false;
  }
  return true;
}

NormalizedQut preset(Preset p, std::size_t ell, double x, double y, double z = 0.0) {
  return normalize(to_qut(preset_spec(p, ell, {x, y, z})));
}

const Poly kXi = Poly::identity();

// Chebyshev nodes of the first kind on (-1, 1).
std::vector<double> nodes(int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(std::cos((i + 0.5) * kPi / count));
  return out;
}

double combine(const UtPair& p, std::size_t n, double xi) {
  const int ni = static_cast<int>(n);
  return p.u(xi) * cheb::u_recurrence(ni, xi) + p.t(xi) * cheb::t_recurrence(ni + 1, xi);
}

}  // namespace

TEST_CASE("polynomial arithmetic") {
  const Poly a{1.0, 1.0};
  const Poly b{1.0, -1.0};
  CHECK(a * b == Poly{1.0, 0.0, -1.0});
  CHECK(a + b == Poly::constant(2.0));
  CHECK((a - a).is_zero());
  CHECK((a - a).degree() == -1);
  CHECK(Poly{3.0, 0.0, 0.0} == Poly::constant(3.0));
  CHECK(Poly::monomial(3, 2.0).derivative() == Poly{0.0, 0.0, 6.0});
  CHECK(Poly{1.0, 2.0, 3.0}(2.0) == 17.0);
  double v = 0.0;
  double d = 0.0;
  Poly{1.0, 2.0, 3.0}.evaluate(2.0, v, d);
  CHECK(v == 17.0);
  CHECK(d == 14.0);
  // (2x + 1)^2 = 4x^2 + 4x + 1
  CHECK(Poly{0.0, 0.0, 1.0}.compose_linear(2.0, 1.0) == Poly{1.0, 4.0, 4.0});
  CHECK(Poly{}.coeff(5) == 0.0);
}

TEST_CASE("right expansion of simple boundaries") {
  const RightExpansion none = build_right_expansion(normalize(make_qut(8, 0, 1, {}, {}, {}, {})));
  CHECK(none.p0 == Poly::constant(1.0));
  CHECK(none.p1.is_zero());

  const double x = 0.7;
  const double y = 1.3;
  const RightExpansion one = build_right_expansion(normalize(make_qut(8, 0, 1, {}, {}, {x}, {y})));
  CHECK(near(one.p0, Poly{-x, 2.0}));
  CHECK(near(one.p1, Poly::constant(-y * y)));
}

TEST_CASE("full expansion of uniform and two-edge matrices") {
  const FullExpansion u = build_full_expansion(normalize(make_qut(9, 0, 1, {}, {}, {}, {})));
  CHECK(u.p0 == Poly::constant(1.0));
  CHECK(u.p1.is_zero());
  CHECK(u.p2.is_zero());

  const double x = 0.7;
  const double y = 1.3;
  const FullExpansion e = build_full_expansion(preset(Preset::TwoEdge, 12, x, y));
  const Poly lin{-x, 2.0};
  CHECK(near(e.p0, lin * lin));
  CHECK(near(e.p1, -2.0 * y * y * lin));
  CHECK(near(e.p2, Poly::constant(std::pow(y, 4))));

  const UtPair ut = to_ut(e, 12, 10);
  CHECK(near(ut.u, lin * lin - 2.0 * y * y * (kXi * lin) + std::pow(y, 4) * Poly{-1.0, 0.0, 2.0}));
  CHECK(near(ut.t, 2.0 * y * y * lin - 2.0 * std::pow(y, 4) * kXi));
}

TEST_CASE("u and t of the asymmetric preset") {
  const double x = 0.4;
  const double y = -1.1;
  const double z = 2.5;
  const BoundaryPolynomials bp = build_boundary_polynomials(preset(Preset::Asymmetric, 9, x, y, z));
  CHECK(bp.n == 7);
  // chi = (2xi - x)(2xi - z) U_n - ((2xi - x) + y^2 (2xi - z)) U_{n-1} + y^2 U_{n-2}
  const Poly lx{-x, 2.0};
  const Poly lz{-z, 2.0};
  const double y2 = y * y;
  const Poly p1 = -(lx + y2 * lz);
  CHECK(near(bp.full.u, lx * lz + kXi * p1 + y2 * Poly{-1.0, 0.0, 2.0}));
  CHECK(near(bp.full.t, -p1 - 2.0 * y2 * kXi));
}

TEST_CASE("corner polynomials of the standard presets") {
  const double x = 0.7;
  const double y = 1.3;
  const CornerPolynomials two = corner_polynomials(preset(Preset::TwoEdge, 10, x, y));
  CHECK(near(two.upper_left.u, Poly{-x, 2.0 - y * y}));
  CHECK(near(two.upper_left.t, Poly::constant(y * y)));
  CHECK(near(two.lower_right.u, Poly{-x, 2.0 - y * y}));
  CHECK(near(two.lower_right.t, Poly::constant(y * y)));

  const double z = -0.9;
  const CornerPolynomials asym = corner_polynomials(preset(Preset::Asymmetric, 10, x, y, z));
  CHECK(near(asym.upper_left.u, Poly{-z, 1.0}));
  CHECK(near(asym.upper_left.t, Poly::constant(1.0)));
  CHECK(near(asym.lower_right.u, Poly{-x, 2.0 - y * y}));
  CHECK(near(asym.lower_right.t, Poly::constant(y * y)));
}

TEST_CASE("starred numerators of the uniform matrix") {
  const std::size_t n = 11;
  const StarredPolynomials s = starred_polynomials(Poly::constant(1.0), Poly{}, n);
  CHECK(s.u_num == kXi);
  CHECK(s.t_num == Poly::constant(-(n + 1.0)));
}

TEST_CASE("decomposition reproduces the characteristic polynomial") {
  std::mt19937_64 rng(31);
  testing::RandomQutOptions ro;
  ro.ell_min = 8;
  ro.ell_max = 30;
  for (int trial = 0; trial < 40; ++trial) {
    const NormalizedQut m = normalize(testing::random_qut(rng, ro));
    const BoundaryPolynomials bp = build_boundary_polynomials(m);
    const auto t = oracle::DenseTridiag::from(m.inner);
    const int width = static_cast<int>(bp.ell - bp.n);
    CHECK(bp.full.u.degree() <= width);
    CHECK(bp.full.t.degree() <= width - 1);
    for (double xi : nodes(40)) {
      const double chi = oracle::char_poly_eval(t, 2.0 * xi).value();
      const double tol = 1e-9 * std::max(1.0, std::fabs(chi));
      CHECK(std::fabs(combine(bp.full, bp.n, xi) - chi) <= tol);
      CHECK(std::fabs(decomposed_char_poly(bp, xi) - chi) <= tol);

      const UtPoint p = evaluate_full(bp, xi);
      CHECK(p.u == doctest::Approx(bp.full.u(xi)).epsilon(1e-9));
      CHECK(p.t == doctest::Approx(bp.full.t(xi)).epsilon(1e-9));

      if (bp.upper_left) {
        const double c = oracle::char_poly_eval(t.submatrix(2, bp.ell), 2.0 * xi).value();
        CHECK(std::fabs(combine(*bp.upper_left, bp.n, xi) - c) <= 1e-9 * std::max(1.0, std::fabs(c)));
      }
      if (bp.lower_right) {
        const double c = oracle::char_poly_eval(t.submatrix(1, bp.ell - 1), 2.0 * xi).value();
        CHECK(std::fabs(combine(*bp.lower_right, bp.n, xi) - c) <= 1e-9 * std::max(1.0, std::fabs(c)));
      }
    }
  }
}

TEST_CASE("starred form matches a finite-difference derivative") {
  std::mt19937_64 rng(32);
  testing::RandomQutOptions ro;
  ro.ell_min = 8;
  ro.ell_max = 24;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const NormalizedQut m = normalize(testing::random_qut(rng, ro));
    const BoundaryPolynomials bp = build_boundary_polynomials(m);
    const auto t = oracle::DenseTridiag::from(m.inner);
    for (double xi : nodes(15)) {
      const double lambda = 2.0 * xi;
      const double fd = (oracle::char_poly_eval(t, lambda + h).value() -
                         oracle::char_poly_eval(t, lambda - h).value()) / (2.0 * h);
      const double got = decomposed_char_poly_derivative(bp, xi);
      CHECK(std::fabs(got - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("corner polynomials need a block after removing a row") {
  const NormalizedQut m = normalize(make_qut(5, 0, 1, {}, {}, {1, 2, 3, 4}, {1, 1, 1, 1}));
  CHECK_THROWS_WITH_AS(corner_polynomials(m), doctest::Contains("no uniform block"), Error);
  try {
    corner_polynomials(m);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBlock);
  }
  const BoundaryPolynomials bp = build_boundary_polynomials(m);
  CHECK_FALSE(bp.upper_left.has_value());
  CHECK(bp.lower_right.has_value());
}

TEST_CASE("degree bounds are enforced") {
  const FullExpansion e = build_full_expansion(preset(Preset::TwoEdge, 12, 0.7, 1.3));
  try {
    to_ut(e, 12, 11);
    FAIL("expected DegreeOverflow");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::DegreeOverflow);
  }
}
