#include "core/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "core/error.hpp"

namespace qut::oracle {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double pivot_floor(const DenseTridiag& t) {
  double bmax2 = 1.0;
  for (double b : t.offdiag) bmax2 = std::max(bmax2, b * b);
  return std::numeric_limits<double>::min() * bmax2;
}

// LU factorization of T - shift with partial pivoting; U has two
// superdiagonals.
struct TridiagLU {
  std::vector<double> dl, d, du, du2;
  std::vector<bool> swapped;

  TridiagLU(const DenseTridiag& t, double shift, double tiny) {
    const std::size_t n = t.size();
    d.resize(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
    dl = t.offdiag;
    du = t.offdiag;
    du2.assign(n > 2 ? n - 2 : 0, 0.0);
    swapped.assign(n > 1 ? n - 1 : 0, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::fabs(d[i]) >= std::fabs(dl[i])) {
        if (d[i] == 0.0) d[i] = tiny;
        const double fact = dl[i] / d[i];
        dl[i] = fact;
        d[i + 1] -= fact * du[i];
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = temp - fact * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        swapped[i] = true;
      }
    }
    if (n > 0 && d[n - 1] == 0.0) d[n - 1] = tiny;
  }

  void solve(std::vector<double>& x) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        x[i + 1] -= dl[i] * x[i];
      } else {
        const double temp = x[i];
        x[i] = x[i + 1];
        x[i + 1] = temp - dl[i] * x[i];
      }
    }
    x[n - 1] /= d[n - 1];
    if (n > 1) x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (std::size_t i = n >= 3 ? n - 2 : 0; i-- > 0;) {
      x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
  }
};

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double DenseTridiag::inf_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    double row = std::fabs(diag[i]);
    if (i > 0) row += std::fabs(offdiag[i - 1]);
    if (i < offdiag.size()) row += std::fabs(offdiag[i]);
    best = std::max(best, row);
  }
  return best;
}

DenseTridiag DenseTridiag::submatrix(std::size_t first, std::size_t last) const {
  DenseTridiag out;
  if (first > last) return out;
  out.diag.assign(diag.begin() + static_cast<std::ptrdiff_t>(first - 1),
                  diag.begin() + static_cast<std::ptrdiff_t>(last));
  out.offdiag.assign(offdiag.begin() + static_cast<std::ptrdiff_t>(first - 1),
                     offdiag.begin() + static_cast<std::ptrdiff_t>(last - 1));
  return out;
}

std::size_t sturm_count(const DenseTridiag& t, double x) {
  const std::size_t n = t.size();
  if (n == 0) return 0;
  const double pivmin = pivot_floor(t);
  std::size_t count = 0;
  double d = t.diag[0] - x;
  for (std::size_t i = 0;; ++i) {
    // An exact zero pivot means x hits an eigenvalue of a leading block;
    // nudging it positive keeps the count strict.
    if (std::fabs(d) < pivmin) d = pivmin;
    if (d < 0.0) ++count;
    if (i + 1 == n) break;
    d = (t.diag[i + 1] - x) - t.offdiag[i] * t.offdiag[i] / d;
  }
  return count;
}

ScaledReal char_poly_eval(const DenseTridiag& t, double lambda) {
  const std::size_t n = t.size();
  if (n == 0) return ScaledReal::from_double(1.0);
  constexpr int kChunk = 512;
  const double big = std::ldexp(1.0, kChunk);
  const double small = std::ldexp(1.0, -kChunk);
  int exponent = 0;
  double prev = 1.0;
  double cur = lambda - t.diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double next = (lambda - t.diag[i]) * cur - t.offdiag[i - 1] * t.offdiag[i - 1] * prev;
    prev = cur;
    cur = next;
    const double mag = std::max(std::fabs(cur), std::fabs(prev));
    if (mag > big) {
      cur = std::ldexp(cur, -kChunk);
      prev = std::ldexp(prev, -kChunk);
      exponent += kChunk;
    } else if (mag < small && mag > 0.0) {
      cur = std::ldexp(cur, kChunk);
      prev = std::ldexp(prev, kChunk);
      exponent -= kChunk;
    }
  }
  if (cur == 0.0) return {};
  return ScaledReal::from_log(cur, std::log(std::fabs(cur)) + exponent * std::log(2.0));
}

EigenDecomposition eig_all(const DenseTridiag& t, bool want_vectors) {
  const std::size_t n = t.size();
  EigenDecomposition out;
  if (n == 0) return out;
  const double norm = std::max(t.inf_norm(), std::numeric_limits<double>::min());
  const double abs_tol = 0.5 * kEps * std::max(1.0, norm);

  double glo = std::numeric_limits<double>::infinity();
  double ghi = -glo;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::fabs(t.offdiag[i - 1]);
    if (i + 1 < n) r += std::fabs(t.offdiag[i]);
    glo = std::min(glo, t.diag[i] - r);
    ghi = std::max(ghi, t.diag[i] + r);
  }
  glo -= 2.0 * abs_tol;
  ghi += 2.0 * abs_tol;

  std::vector<double> ascending(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    // Smallest x with more than idx eigenvalues below it.
    double lo = glo, hi = ghi;
    if (idx > 0) lo = std::max(lo, ascending[idx - 1] - 2.0 * abs_tol);
    for (int iter = 0; iter < 4000; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (hi - lo <= std::max(2.0 * kEps * std::max(std::fabs(lo), std::fabs(hi)), abs_tol)) break;
      if (sturm_count(t, mid) > idx) hi = mid;
      else lo = mid;
    }
    ascending[idx] = 0.5 * (lo + hi);
  }

  out.values.assign(ascending.rbegin(), ascending.rend());
  if (!want_vectors) return out;

  // Inverse iteration in ascending order; eigenvalues closer than ortho_gap
  // form a cluster whose vectors are reorthogonalized against each other.
  const double ortho_gap = 1e-3 * norm;
  const double separation = 10.0 * kEps * norm;
  const double tiny = kEps * norm;
  const double growth_target = 1.0 / (1e3 * kEps * std::max(1.0, norm) * std::sqrt(static_cast<double>(n)));
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  std::vector<std::vector<double>> vecs(n);
  std::size_t cluster_start = 0;
  double prev_shift = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    double shift = ascending[idx];
    if (idx > 0 && ascending[idx] - ascending[idx - 1] < ortho_gap) {
      if (shift - prev_shift < separation) shift = prev_shift + separation;
    } else {
      cluster_start = idx;
    }
    prev_shift = shift;

    const TridiagLU lu(t, shift, tiny);
    std::vector<double> x(n);
    for (double& v : x) v = dist(rng);
    double nx = norm2(x);
    for (double& v : x) v /= nx;

    int converged_steps = 0;
    int iter = 0;
    for (; iter < 100 && converged_steps < 3; ++iter) {
      lu.solve(x);
      for (std::size_t j = cluster_start; j < idx; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += x[r] * vecs[j][r];
        for (std::size_t r = 0; r < n; ++r) x[r] -= dot * vecs[j][r];
      }
      nx = norm2(x);
      if (!(nx > 0.0) || !std::isfinite(nx)) {
        throw Error(ErrorCode::ConvergenceFailure, "inverse iteration produced a degenerate vector");
      }
      for (double& v : x) v /= nx;
      if (nx >= growth_target) ++converged_steps;
    }
    if (converged_steps == 0) {
      throw Error(ErrorCode::ConvergenceFailure, "inverse iteration did not converge in 100 steps");
    }
    if (x[0] < 0.0) {
      for (double& v : x) v = -v;
    }
    vecs[idx] = std::move(x);
  }

  out.vectors.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double>& v = vecs[n - 1 - k];
    std::copy(v.begin(), v.end(), out.vectors.begin() + static_cast<std::ptrdiff_t>(k * n));
  }
  return out;
}

}  // namespace qut::oracle
