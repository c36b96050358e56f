#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "core/chebyshev.hpp"
#include "double_double.hpp"

using namespace qut;
using cheb::BandPoint;
using cheb::HyperbolicPoint;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("U_n on the band: zeros and edge limits") {
  CHECK(std::fabs(cheb::u(3, BandPoint::from_k(kPi / 4))) < 1e-15);
  CHECK(std::fabs(cheb::u(5, BandPoint::from_k(kPi / 3))) < 1e-15);
  CHECK(cheb::u(2, BandPoint::from_k(0.0)) == 3.0);
  CHECK(cheb::u(4, BandPoint::from_k(kPi)) == doctest::Approx(5.0));
  CHECK(cheb::u(5, BandPoint::from_k(kPi)) == doctest::Approx(-6.0));
  CHECK(cheb::u(0, BandPoint::from_k(1.1)) == doctest::Approx(1.0));
}

TEST_CASE("T_n on the band") {
  CHECK(cheb::t(4, BandPoint::from_k(0.0)) == 1.0);
  CHECK(cheb::t(3, BandPoint::from_k(kPi)) == doctest::Approx(-1.0));
  CHECK(std::fabs(cheb::t(2, BandPoint::from_k(kPi / 4))) < 1e-15);
}

TEST_CASE("band point parametrization") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> k(0.0, kPi);
  for (int i = 0; i < 100; ++i) {
    const BandPoint a = BandPoint::from_k(k(rng));
    CHECK(std::fabs(a.xi - std::cos(a.k)) <= 1e-15);
    const BandPoint b = BandPoint::from_xi(a.xi);
    CHECK(b.k >= 0.0);
    CHECK(b.k <= kPi);
    CHECK(std::fabs(b.xi - std::cos(b.k)) <= 1e-15);
  }
}

TEST_CASE("U_n limit is continuous at the band edges") {
  const double eps = 1e-8;
  for (int n : {0, 1, 2, 7, 30, 100}) {
    const double tol = 1e-6 * (n + 1.0) * (n + 1.0);
    CHECK(std::fabs(cheb::u(n, BandPoint::from_k(eps)) - (n + 1.0)) <= tol);
    const double edge = (n % 2 == 0 ? 1.0 : -1.0) * (n + 1.0);
    CHECK(std::fabs(cheb::u(n, BandPoint::from_k(kPi - eps)) - edge) <= tol);
  }
}

TEST_CASE("three-term recurrence holds on the band") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> nd(1, 63);
  std::uniform_real_distribution<double> kd(1e-3, kPi - 1e-3);
  for (int i = 0; i < 500; ++i) {
    const int n = nd(rng);
    const BandPoint p = BandPoint::from_k(kd(rng));
    const double r = cheb::u(n + 1, p) - 2.0 * p.xi * cheb::u(n, p) + cheb::u(n - 1, p);
    CHECK(std::fabs(r) <= 1e-12 * (n + 1));
  }
}

TEST_CASE("U_{n-1} = xi U_n - T_{n+1} on the band") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> nd(1, 64);
  std::uniform_real_distribution<double> kd(0.0, kPi);
  for (int i = 0; i < 500; ++i) {
    const int n = nd(rng);
    const BandPoint p = BandPoint::from_k(kd(rng));
    const double r = cheb::u(n - 1, p) - (p.xi * cheb::u(n, p) - cheb::t(n + 1, p));
    CHECK(std::fabs(r) <= 1e-12 * (n + 1));
  }
}

TEST_CASE("U_{n-1} = xi U_n - T_{n+1} on the hyperbolic branch") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> nd(1, 300);
  std::uniform_real_distribution<double> pd(1e-3, 3.0);
  for (int i = 0; i < 500; ++i) {
    const int n = nd(rng);
    const HyperbolicPoint h{pd(rng), (i % 2 == 0) ? 1 : -1};
    const ScaledReal un = cheb::u_hyper_scaled(n, h);
    const ScaledReal un1 = cheb::u_hyper_scaled(n - 1, h);
    const ScaledReal tn1 = cheb::t_hyper_scaled(n + 1, h);
    // Compare relative to the largest term.
    const double ref = std::max({un.log_abs(), un1.log_abs(), tn1.log_abs()}) + std::log(std::cosh(h.p));
    const double lhs = un1.relative_to(ref);
    const double rhs = h.xi() * un.relative_to(ref) - tn1.relative_to(ref);
    CHECK(std::fabs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("hyperbolic U_n small cases") {
  const ScaledReal a = cheb::u_hyper_scaled(1, {std::log(2.0), 1});
  CHECK(a.value() == doctest::Approx(2.5).epsilon(1e-15));
  const ScaledReal b = cheb::u_hyper_scaled(1, {std::log(2.0), -1});
  CHECK(b.value() == doctest::Approx(-2.5).epsilon(1e-15));
  for (double p : {0.01, 0.7, 5.0}) {
    CHECK(cheb::u_hyper_scaled(0, {p, 1}).value() == 1.0);
    CHECK(cheb::u_hyper_scaled(0, {p, -1}).value() == 1.0);
  }
}

TEST_CASE("hyperbolic U_50 against an extended-precision sinh ratio") {
  using testing::DD;
  const DD p(0.1);
  const DD exact = testing::dd_sinh(DD(51.0) * p) / testing::dd_sinh(p);
  const ScaledReal got = cheb::u_hyper_scaled(50, {0.1, -1});
  CHECK(got.mantissa > 0.0);  // (-1)^50
  CHECK(got.value() == doctest::Approx(exact.value()).epsilon(1e-14));
  const ScaledReal t = cheb::t_hyper_scaled(51, {0.1, -1});
  CHECK(t.value() == doctest::Approx(-testing::dd_cosh(DD(51.0) * p).value()).epsilon(1e-14));
}

TEST_CASE("hyperbolic evaluation never overflows") {
  const ScaledReal u = cheb::u_hyper_scaled(5000, {1.0, 1});
  CHECK(std::isfinite(u.mantissa));
  CHECK(std::fabs(u.mantissa) >= 0.5);
  CHECK(std::fabs(u.mantissa) < 2.0);
  // log(sinh(5001)/sinh(1)) = 5000 + log((1 - e^-10002)/(1 - e^-2))
  CHECK(u.log_abs() == doctest::Approx(5000.0 - std::log1p(-std::exp(-2.0))).epsilon(1e-14));
  const ScaledReal t = cheb::t_hyper_scaled(3001, {0.5, -1});
  CHECK(t.mantissa < 0.0);
  CHECK(t.log_abs() == doctest::Approx(1500.5 - std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("plain recurrences agree with the closed forms") {
  for (int n = 0; n < 20; ++n) {
    for (double xi : {-0.9, -0.3, 0.2, 0.77}) {
      const BandPoint p = BandPoint::from_xi(xi);
      CHECK(cheb::u_recurrence(n, xi) == doctest::Approx(cheb::u(n, p)).epsilon(1e-12));
      CHECK(cheb::t_recurrence(n, xi) == doctest::Approx(cheb::t(n, p)).epsilon(1e-12));
    }
    const HyperbolicPoint h{0.4, -1};
    CHECK(cheb::u_recurrence(n, h.xi()) ==
          doctest::Approx(cheb::u_hyper_scaled(n, h).value()).epsilon(1e-12));
  }
  CHECK(cheb::u_recurrence(-1, 0.3) == 0.0);
}
