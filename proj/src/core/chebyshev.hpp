#pragma once

// Chebyshev polynomials of the first (T) and second (U) kind evaluated on the
// two real branches used by the solver: the band, where xi = cos(k), and the
// hyperbolic branch outside it, where xi = +-cosh(p).

#include "core/scaled.hpp"

namespace qut::cheb {

// A point of the band [-2, 2] parametrized by its wavenumber.
struct BandPoint {
  double k = 0.0;   // radians, in [0, pi]
  double xi = 1.0;  // cos(k)

  static BandPoint from_k(double k);
  static BandPoint from_xi(double xi);
};

// A point outside the band: xi = sign * cosh(p), eigenvalue 2 * xi.
struct HyperbolicPoint {
  double p = 0.0;
  int sign = 1;

  double xi() const;
  double eigenvalue() const { return 2.0 * xi(); }
};

// U_n(cos k) = sin((n+1)k) / sin k, with the analytic limit at k = 0, pi.
double u(int n, const BandPoint& point);

// T_n(cos k) = cos(n k).
double t(int n, const BandPoint& point);

// U_n and T_n at xi = +-cosh(p), p > 0, returned in log-scaled form.
ScaledReal u_hyper_scaled(int n, const HyperbolicPoint& point);
ScaledReal t_hyper_scaled(int n, const HyperbolicPoint& point);

// Plain three-term recurrences valid for any real xi; n >= -1 for U with
// U_{-1} = 0. Overflows for large n when |xi| > 1.
double u_recurrence(int n, double xi);
double t_recurrence(int n, double xi);

// Below this |sin k| the ratio form is replaced by the recurrence.
inline constexpr double kEdgeSinThreshold = 1e-6;

}  // namespace qut::cheb
