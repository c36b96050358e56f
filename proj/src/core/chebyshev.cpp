#include "core/chebyshev.hpp"

#include <cmath>
#include <numbers>

namespace qut::cheb {

BandPoint BandPoint::from_k(double k) { return {k, std::cos(k)}; }

BandPoint BandPoint::from_xi(double xi) { return {std::acos(xi), xi}; }

double HyperbolicPoint::xi() const { return sign * std::cosh(p); }

double u_recurrence(int n, double xi) {
  if (n < 0) return 0.0;
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 2.0 * xi;
  for (int m = 1; m < n; ++m) {
    const double next = 2.0 * xi * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double t_recurrence(int n, double xi) {
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = xi;
  for (int m = 1; m < n; ++m) {
    const double next = 2.0 * xi * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double u(int n, const BandPoint& point) {
  const double s = std::sin(point.k);
  if (std::fabs(s) < kEdgeSinThreshold) return u_recurrence(n, point.xi);
  return std::sin((n + 1) * point.k) / s;
}

double t(int n, const BandPoint& point) { return std::cos(n * point.k); }

namespace {

double sign_power(int sign, int n) { return (sign < 0 && (n % 2 != 0)) ? -1.0 : 1.0; }

}  // namespace

ScaledReal u_hyper_scaled(int n, const HyperbolicPoint& point) {
  if (n == 0) return ScaledReal::from_double(1.0);
  const double p = point.p;
  // sinh((n+1)p)/sinh(p) = exp(n p) * (1 - exp(-2(n+1)p)) / (1 - exp(-2p))
  const double log_mag =
      n * p + std::log(-std::expm1(-2.0 * (n + 1) * p)) - std::log(-std::expm1(-2.0 * p));
  return ScaledReal::from_log(sign_power(point.sign, n), log_mag);
}

ScaledReal t_hyper_scaled(int n, const HyperbolicPoint& point) {
  if (n == 0) return ScaledReal::from_double(1.0);
  const double p = point.p;
  // cosh(n p) = exp(n p) * (1 + exp(-2 n p)) / 2
  const double log_mag = n * p + std::log1p(std::exp(-2.0 * n * p)) - std::numbers::ln2;
  return ScaledReal::from_log(sign_power(point.sign, n), log_mag);
}

}  // namespace qut::cheb
