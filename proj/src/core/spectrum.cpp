#include "core/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

#include "core/error.hpp"
#include "core/oracle.hpp"
#include "core/parallel.hpp"

namespace qut {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxScanDepth = 40;
constexpr int kMaxRefinements = 6;
constexpr double kClusterGap = 1e-3;
// Largest relative move accepted from the Rayleigh quotient polish.
constexpr double kPolishWindow = 1e-6;
// Offset from a band edge used when a limit has to be sampled.
constexpr double kEdgeProbe = 1e-6;
// Smallest decay rate scanned. Below it cosh p rounds to 1, so the root is
// lambda = +-2 to the last bit and belongs to the band-edge check; the
// secular function there is only rounding noise around chi(+-2).
constexpr double kMinDecay = 2e-8;
// Relative size below which a secular value is treated as rounding noise.
constexpr double kSecularNoise = 64.0 * kEps;
// In-band roots closer than this to k = 0 or pi are checked against the edge.
constexpr double kEdgeSnap = 1e-4;

using UtValues = UtPoint;

UtValues eval_ut(const BoundaryPolynomials& bp, double xi) { return evaluate_full(bp, xi); }

// Moves a mode to a refined eigenvalue, keeping its branch coordinate in step.
void move_mode(SpectralMode& md, double lambda) {
  const double delta = lambda - md.lambda_normalized;
  md.lambda_normalized = lambda;
  md.lambda = lambda;
  if (md.branch == Branch::OutOfBand) {
    const double sh = std::sinh(md.point.p);
    md.point.p = sh > 1e-4 ? md.point.p + delta / (2.0 * md.point.sign * sh)
                           : std::acosh(std::max(1.0, 0.5 * std::fabs(lambda)));
  } else if (md.branch == Branch::InBand) {
    md.k = std::acos(std::clamp(0.5 * lambda, -1.0, 1.0));
  }
}

double wrap_angle(double d) { return std::remainder(d, 2.0 * kPi); }

double snap_half_pi(double angle) { return std::round(angle / (0.5 * kPi)) * (0.5 * kPi); }

// arg(u + i t sin k) on the principal branch.
double principal_psi(const BoundaryPolynomials& bp, double k) {
  const double xi = std::cos(k);
  const UtValues v = eval_ut(bp, xi);
  return std::atan2(v.t * std::sin(k), v.u);
}

// Limit of the principal argument at a band edge, approached from inside
// the band where sin k > 0.
double edge_psi(const BoundaryPolynomials& bp, double xi_edge, double k_inside) {
  const UtValues v = eval_ut(bp, xi_edge);
  const double u = v.u;
  const double t = v.t;
  if (u > 0.0) return 0.0;
  if (u < 0.0) return kPi;
  if (t > 0.0) return 0.5 * kPi;
  if (t < 0.0) return -0.5 * kPi;
  return snap_half_pi(principal_psi(bp, k_inside));
}

// d/dk arg(u + i t sin k); NaN where the amplitude vanishes.
double psi_prime_raw(const BoundaryPolynomials& bp, double k) {
  const double xi = std::cos(k);
  const double s = std::sin(k);
  const UtValues v = eval_ut(bp, xi);
  const double amp = v.u * v.u + v.t * v.t * s * s;
  if (amp == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (v.t * v.u * xi - (v.dt * v.u - v.du * v.t) * s * s) / amp;
}

double psi_prime(const BoundaryPolynomials& bp, double k) {
  // At a band edge where u vanishes, cos k rounds to +-1 and the u^2 part of
  // the amplitude is lost; u ~ u'(xi - xi_edge) gives the limit u'/(2t).
  if (std::fabs(std::sin(k)) < kEdgeProbe) {
    const double edge = k < 0.5 * kPi ? 1.0 : -1.0;
    const UtValues v = eval_ut(bp, edge);
    if (std::fabs(v.u) <= kSecularNoise * (std::fabs(v.du) + std::fabs(v.t)) && v.t != 0.0) {
      return 0.5 * v.du / v.t;
    }
  }
  double d = psi_prime_raw(bp, k);
  if (std::isnan(d)) {
    const double inside = k < 0.5 * kPi ? k + kEdgeProbe : k - kEdgeProbe;
    d = psi_prime_raw(bp, inside);
  }
  return d;
}

struct GridPoint {
  double k;
  double psi;        // continuous branch
  double principal;  // principal value at k
  double tau;        // Theta / pi
};

class PhaseScan {
 public:
  PhaseScan(const BoundaryPolynomials& bp, std::size_t intervals) : bp_(bp), n1_(bp.n + 1.0) {
    const double p0 = edge_psi(bp, 1.0, kEdgeProbe);
    // Theta(0) is pinned to 0 (or +-pi/2 when u(1) = 0) so that j counts the
    // roots from the top of the band as in the uniform case. psi itself stays
    // congruent to its principal value modulo 2 pi.
    offset_ = p0 > 0.75 * kPi ? kPi : 0.0;
    points_.push_back({0.0, p0, p0, (p0 - offset_) / kPi});
    for (std::size_t i = 1; i < intervals; ++i) {
      const double k = kPi * static_cast<double>(i) / static_cast<double>(intervals);
      refine(points_.back(), k, principal_psi(bp, k), 0);
    }
    const double pe = edge_psi(bp, -1.0, kPi - kEdgeProbe);
    refine(points_.back(), kPi, pe, 0);
    GridPoint& last = points_.back();
    last.k = kPi;
    last.psi = snap_half_pi(last.psi);
    last.tau = n1_ + 0.5 * std::round((last.psi - offset_) / (0.5 * kPi));
  }

  const std::vector<GridPoint>& points() const { return points_; }

  // Continuous psi at k, on the branch closest to the linear interpolation of
  // the neighbouring grid points.
  double psi_near(double k, const GridPoint& a, const GridPoint& b) const {
    const double w = (b.k > a.k) ? (k - a.k) / (b.k - a.k) : 0.0;
    const double ref = a.psi + w * (b.psi - a.psi);
    const double pp = principal_psi(bp_, k);
    return pp + 2.0 * kPi * std::round((ref - pp) / (2.0 * kPi));
  }

  // Theta(k) with psi taken on the branch of the bracketing grid points.
  double theta_near(double k, const GridPoint& a, const GridPoint& b) const {
    return n1_ * k + psi_near(k, a, b) - offset_;
  }

  double theta_at(double k) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), k,
                               [](const GridPoint& g, double x) { return g.k < x; });
    if (it == points_.begin()) return kPi * points_.front().tau;
    if (it == points_.end()) return kPi * points_.back().tau;
    return theta_near(k, *(it - 1), *it);
  }

 private:
  GridPoint make(double k, double psi, double principal) const {
    return {k, psi, principal, (n1_ * k + psi - offset_) / kPi};
  }

  // Appends the point at kb, inserting midpoints until each step of the
  // principal argument is small enough to unwrap without ambiguity.
  void refine(GridPoint a, double kb, double pb, int depth) {
    const double d = wrap_angle(pb - a.principal);
    if (depth < kMaxScanDepth) {
      const double km = 0.5 * (a.k + kb);
      const double pm = principal_psi(bp_, km);
      const double d1 = wrap_angle(pm - a.principal);
      const double d2 = wrap_angle(pb - pm);
      // Fast windings can make the halves agree with a wrapped total, so each
      // half must also be a small step.
      if (std::fabs(d) > 0.5 * kPi || std::fabs(d1) > 0.5 * kPi || std::fabs(d2) > 0.5 * kPi ||
          std::fabs(d1 + d2 - d) > 1e-9) {
        refine(a, km, pm, depth + 1);
        refine(points_.back(), kb, pb, depth + 1);
        return;
      }
    }
    points_.push_back(make(kb, a.psi + d, pb));
  }

  const BoundaryPolynomials& bp_;
  double n1_;
  double offset_ = 0.0;
  std::vector<GridPoint> points_;
};

struct Bracket {
  std::size_t left;  // grid index; the root lies in (points[left].k, points[left+1].k]
  long j;
  bool exact;        // root sits on points[left+1]
};

std::vector<Bracket> find_brackets(const std::vector<GridPoint>& g) {
  std::vector<Bracket> out;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double ta = g[i - 1].tau;
    const double tb = g[i].tau;
    const double lo = std::min(ta, tb);
    const double hi = std::max(ta, tb);
    const long first = static_cast<long>(std::floor(lo)) + 1;
    const long last = static_cast<long>(std::ceil(hi)) - 1;
    if (tb > ta) {
      for (long j = first; j <= last; ++j) out.push_back({i - 1, j, false});
    } else {
      for (long j = last; j >= first; --j) out.push_back({i - 1, j, false});
    }
    if (i + 1 < g.size() && tb == std::floor(tb)) out.push_back({i - 1, static_cast<long>(tb), true});
  }
  return out;
}

struct RootResult {
  double k;
  double residual;
  bool fallback;
};

double root_tolerance(long j) { return std::max(1e-13, 8.0 * kEps * kPi * std::fabs(static_cast<double>(j))); }

RootResult refine_root(const BoundaryPolynomials& bp, const PhaseScan& scan, const Bracket& br) {
  const auto& g = scan.points();
  const GridPoint& a = g[br.left];
  const GridPoint& b = g[br.left + 1];
  const double n1 = bp.n + 1.0;
  const double ell1 = bp.ell + 1.0;
  const double target = kPi * static_cast<double>(br.j);
  auto theta_minus = [&](double k) { return scan.theta_near(k, a, b) - target; };

  if (br.exact) return {b.k, std::fabs(theta_minus(b.k)), false};

  const double ga = kPi * (a.tau - static_cast<double>(br.j));
  const double gb = kPi * (b.tau - static_cast<double>(br.j));
  const double tol = root_tolerance(br.j);
  const auto inside = [&](double k) { return k > a.k && k < b.k; };

  // Fixed point of k = (pi j + 2 phi_k)/(ell+1), then a Newton polish.
  double k = a.k + (b.k - a.k) * (ga / (ga - gb));
  bool converged = inside(k);
  if (converged) {
    converged = false;
    for (int it = 0; it < 50; ++it) {
      const double next = k - theta_minus(k) / ell1;
      if (!inside(next)) break;
      const bool done = std::fabs(next - k) < 1e-13;
      k = next;
      if (done) {
        converged = true;
        break;
      }
    }
  }
  if (converged) {
    for (int it = 0; it < 3; ++it) {
      const double r = theta_minus(k);
      if (std::fabs(r) <= tol) break;
      const double d = n1 + psi_prime(bp, k);
      if (!(d != 0.0)) break;
      const double next = k - r / d;
      if (!inside(next)) break;
      k = next;
    }
    const double r = std::fabs(theta_minus(k));
    if (r <= tol) return {k, r, false};
  }

  // Safeguarded bracketing on the continuous phase.
  std::uintmax_t max_iter = 200;
  const auto range = boost::math::tools::toms748_solve(
      theta_minus, a.k, b.k, ga, gb, boost::math::tools::eps_tolerance<double>(52), max_iter);
  double best = range.first;
  double best_r = std::fabs(theta_minus(range.first));
  const double alt_r = std::fabs(theta_minus(range.second));
  if (alt_r < best_r) {
    best = range.second;
    best_r = alt_r;
  }
  // The bracket endpoints carry exact edge values that the interior formula
  // cannot reproduce; stay strictly inside.
  if (!inside(best)) best = 0.5 * (range.first + range.second);
  return {best, std::fabs(theta_minus(best)), true};
}

SpectralMode make_in_band_mode(const BoundaryPolynomials& bp, double k, long j, double residual) {
  SpectralMode m;
  m.branch = Branch::InBand;
  m.k = k;
  m.j = j;
  m.lambda_normalized = 2.0 * std::cos(k);
  m.lambda = m.lambda_normalized;
  const double ell1 = bp.ell + 1.0;
  m.phi = 0.5 * (ell1 * k - kPi * static_cast<double>(j));
  const double tp = theta_prime(bp, k);
  m.phi_prime = 0.5 * (ell1 - tp);
  m.dos_weight = tp / kPi;
  m.residual = residual;
  return m;
}

double inf_norm(const QutMatrix& q) { return oracle::DenseTridiag::from(q).inf_norm(); }

}  // namespace

const char* to_string(Branch b) noexcept {
  switch (b) {
    case Branch::InBand: return "in-band";
    case Branch::OutOfBand: return "out-of-band";
    case Branch::BandEdge: return "band-edge";
  }
  return "unknown";
}

ShiftValue shift_phi(const BoundaryPolynomials& bp, const cheb::BandPoint& point) {
  const double s = std::sin(point.k);
  const UtValues v = eval_ut(bp, point.xi);
  const double amp = v.u * v.u + v.t * v.t * s * s;
  if (amp == 0.0) {
    throw Error(ErrorCode::ZeroAmplitude, "u and t sin k vanish simultaneously");
  }
  const double width = static_cast<double>(bp.ell - bp.n);
  const double psi = std::atan2(v.t * s, v.u);
  const double dpsi = (v.t * v.u * point.xi - (v.dt * v.u - v.du * v.t) * s * s) / amp;
  return {0.5 * (width * point.k - psi), 0.5 * (width - dpsi)};
}

double theta_prime(const BoundaryPolynomials& bp, double k) { return bp.n + 1.0 + psi_prime(bp, k); }

InBandResult solve_in_band(const BoundaryPolynomials& bp, const SolveOptions& options,
                           std::size_t min_count) {
  InBandResult result;
  std::size_t intervals = 8 * (bp.ell + 1);
  for (int level = 0;; ++level) {
    const PhaseScan scan(bp, intervals);
    const std::vector<Bracket> brackets = find_brackets(scan.points());
    if (brackets.size() < min_count && level < kMaxRefinements) {
      intervals *= 4;
      ++result.refinements;
      continue;
    }

    std::vector<SpectralMode> modes(brackets.size());
    std::vector<char> fell_back(brackets.size(), 0);
    const double ell1 = bp.ell + 1.0;
    parallel_for(brackets.size(), options.threads, [&](std::size_t i) {
      const Bracket& br = brackets[i];
      if (options.single_iteration) {
        const double k0 = kPi * static_cast<double>(br.j) / ell1;
        const double target = kPi * static_cast<double>(br.j);
        const auto theta_minus = [&](double k) { return scan.theta_at(k) - target; };
        double k1 = k0 - theta_minus(k0) / ell1;
        k1 = std::clamp(k1, 1e-300, std::nextafter(kPi, 0.0));
        modes[i] = make_in_band_mode(bp, k1, br.j, std::fabs(theta_minus(k1)));
        return;
      }
      const RootResult r = refine_root(bp, scan, br);
      fell_back[i] = r.fallback;
      modes[i] = make_in_band_mode(bp, r.k, br.j, r.residual);
    });
    result.fallbacks = static_cast<std::size_t>(std::count(fell_back.begin(), fell_back.end(), 1));
    std::sort(modes.begin(), modes.end(),
              [](const SpectralMode& x, const SpectralMode& y) { return x.k < y.k; });
    result.modes = std::move(modes);
    return result;
  }
}

double density_of_states(const BoundaryPolynomials& bp, const SpectralMode& mode) {
  const double tp = theta_prime(bp, mode.k);
  if (!(tp > 0.0)) {
    std::ostringstream msg;
    msg << "ell + 1 - 2 phi' = " << tp << " at k = " << mode.k;
    throw Error(ErrorCode::NegativeDos, msg.str());
  }
  return tp / kPi;
}

DosCurve dos_curve(const BoundaryPolynomials& bp, std::size_t samples) {
  if (samples < 2) throw Error(ErrorCode::InvalidArgument, "DOS curve needs at least 2 samples");
  DosCurve c;
  c.k.resize(samples);
  c.rho.resize(samples);
  const double h = kPi / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double k = i + 1 == samples ? kPi : h * static_cast<double>(i);
    c.k[i] = k;
    c.rho[i] = theta_prime(bp, k) / kPi;
  }
  double sum = 0.5 * (c.rho.front() + c.rho.back());
  for (std::size_t i = 1; i + 1 < samples; ++i) sum += c.rho[i];
  c.integral = sum * h;
  return c;
}

OutOfBandCounts expected_out_of_band(const NormalizedQut& m) {
  const oracle::DenseTridiag t = oracle::DenseTridiag::from(m.inner);
  return {t.size() - oracle::sturm_count(t, 2.0), oracle::sturm_count(t, -2.0)};
}

SecularValue secular_scaled(const BoundaryPolynomials& bp, const cheb::HyperbolicPoint& point) {
  const double n1 = bp.n + 1.0;
  const double p = point.p;
  const double s = point.sign < 0 ? -1.0 : 1.0;
  const double sh = std::sinh(p);
  const double ch = std::cosh(p);
  const double e = std::exp(-2.0 * n1 * p);
  const double one_minus_e = -std::expm1(-2.0 * n1 * p);
  const double a = one_minus_e / (2.0 * sh);
  const double b = 0.5 * (1.0 + e);
  const double da = n1 * e / sh - one_minus_e * ch / (2.0 * sh * sh);
  const double db = -n1 * e;
  const UtValues v = eval_ut(bp, s * ch);
  SecularValue out;
  out.value = v.u * a + s * v.t * b;
  out.derivative = v.du * s * sh * a + v.u * da + s * (v.dt * s * sh * b + v.t * db);
  out.scale = std::fabs(v.u * a) + std::fabs(v.t * b);
  return out;
}

namespace {

struct EdgeValue {
  double chi;
  double scale;
};

// chi(2 sign) through the decomposition, with U_n(+-1) = (+-1)^n (n+1).
EdgeValue edge_char_poly(const BoundaryPolynomials& bp, int sign) {
  const double s = sign;
  const double parity = (sign < 0 && bp.n % 2 == 1) ? -1.0 : 1.0;
  const double un = parity * (bp.n + 1.0);
  const double tn1 = parity * s;
  const UtValues v = eval_ut(bp, s);
  const double u = v.u;
  const double t = v.t;
  return {u * un + t * tn1, std::fabs(u * un) + std::fabs(t * tn1)};
}

bool is_edge_root(const BoundaryPolynomials& bp, int sign) {
  const EdgeValue e = edge_char_poly(bp, sign);
  return e.scale == 0.0 || std::fabs(e.chi) <= 1e-12 * e.scale;
}

SpectralMode make_edge_mode(const BoundaryPolynomials& bp, int sign) {
  SpectralMode m;
  m.branch = Branch::BandEdge;
  m.k = sign > 0 ? 0.0 : kPi;
  m.point = {0.0, sign};
  m.lambda_normalized = 2.0 * sign;
  m.lambda = m.lambda_normalized;
  const EdgeValue e = edge_char_poly(bp, sign);
  m.residual = e.scale == 0.0 ? 0.0 : std::fabs(e.chi) / e.scale;
  return m;
}

SpectralMode make_out_of_band_mode(const BoundaryPolynomials& bp, double p, int sign) {
  SpectralMode m;
  m.branch = Branch::OutOfBand;
  m.point = {p, sign};
  m.lambda_normalized = m.point.eigenvalue();
  m.lambda = m.lambda_normalized;
  const SecularValue f = secular_scaled(bp, m.point);
  m.residual = f.scale > 0.0 ? std::fabs(f.value) / f.scale : std::fabs(f.value);
  return m;
}

struct SideRoots {
  std::vector<double> p;  // with multiplicity
  std::size_t tangent_pairs = 0;
};

SideRoots scan_side(const BoundaryPolynomials& bp, int sign, double p_max, std::size_t expected,
                    std::size_t& refinements) {
  const auto f = [&](double p) { return secular_scaled(bp, {p, sign}).value; };
  const auto df = [&](double p) { return secular_scaled(bp, {p, sign}).derivative; };
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto solve = [&](double a, double b, double fa, double fb) {
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, it);
    return std::fabs(f(r.first)) <= std::fabs(f(r.second)) ? r.first : r.second;
  };

  const std::size_t width = bp.ell - bp.n;
  std::size_t points = 256 + 64 * (width + 1);
  double p_lo = 1e-6;
  SideRoots best;
  for (int level = 0; level <= kMaxRefinements; ++level) {
    if (level > 0) {
      points *= 4;
      p_lo = std::max(p_lo / 100.0, kMinDecay);
      ++refinements;
    }
    const double lo = std::min(p_lo, 0.5 * p_max);
    const double ratio = std::log(p_max / lo);
    std::vector<double> grid(points), val(points);
    std::vector<char> noisy(points);
    for (std::size_t i = 0; i < points; ++i) {
      grid[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(points - 1));
      const SecularValue sv = secular_scaled(bp, {grid[i], sign});
      val[i] = sv.value;
      // Values at rounding level carry no sign; near a band-edge root the
      // function stays there over a whole range of small p.
      noisy[i] = std::fabs(sv.value) <= kSecularNoise * sv.scale;
    }
    SideRoots found;
    struct Candidate {
      double p;
      double rel;
    };
    std::vector<Candidate> tangents;
    std::size_t last = points;  // last sample with a meaningful sign
    for (std::size_t i = 0; i < points; ++i) {
      if (noisy[i]) continue;
      if (last < points && std::signbit(val[last]) != std::signbit(val[i])) {
        found.p.push_back(solve(grid[last], grid[i], val[last], val[i]));
      }
      last = i;
      // A local minimum of |S| without a sign change may hide a close pair.
      if (i > 0 && i + 1 < points && !noisy[i - 1] && !noisy[i + 1] &&
          std::signbit(val[i - 1]) == std::signbit(val[i]) &&
          std::signbit(val[i + 1]) == std::signbit(val[i]) &&
          std::fabs(val[i]) < std::fabs(val[i - 1]) && std::fabs(val[i]) <= std::fabs(val[i + 1])) {
        double q = grid[i];
        const double da = df(grid[i - 1]);
        const double db = df(grid[i + 1]);
        if (da != 0.0 && db != 0.0 && std::signbit(da) != std::signbit(db)) {
          std::uintmax_t it = 200;
          const auto r = boost::math::tools::toms748_solve(df, grid[i - 1], grid[i + 1], da, db, tol, it);
          q = 0.5 * (r.first + r.second);
        }
        const SecularValue fq = secular_scaled(bp, {q, sign});
        if (fq.value == 0.0) {
          found.p.push_back(q);
          found.p.push_back(q);
          ++found.tangent_pairs;
        } else if (std::signbit(fq.value) != std::signbit(val[i])) {
          found.p.push_back(solve(grid[i - 1], q, val[i - 1], fq.value));
          found.p.push_back(solve(q, grid[i + 1], fq.value, val[i + 1]));
        } else {
          tangents.push_back({q, std::fabs(fq.value) / fq.scale});
        }
      }
    }
    // Near-double roots whose splitting is below roundoff: accepted only to
    // make up a shortfall against the Sturm count.
    std::sort(tangents.begin(), tangents.end(),
              [](const Candidate& x, const Candidate& y) { return x.rel < y.rel; });
    for (const Candidate& c : tangents) {
      if (found.p.size() + 2 > expected || c.rel > 1e-10) break;
      found.p.push_back(c.p);
      found.p.push_back(c.p);
      ++found.tangent_pairs;
    }
    std::sort(found.p.begin(), found.p.end());
    if (found.p.size() >= expected || level == kMaxRefinements) return found;
    if (found.p.size() > best.p.size()) best = std::move(found);
  }
  return best;
}

}  // namespace

std::vector<SpectralMode> solve_out_of_band(const BoundaryPolynomials& bp, const NormalizedQut& m,
                                            OutOfBandCounts expected,
                                            SpectrumDiagnostics* diagnostics) {
  std::vector<SpectralMode> out;
  const double p_max = std::acosh(1.0 + inf_norm(m.inner));
  for (int sign : {1, -1}) {
    const std::size_t want = sign > 0 ? expected.above : expected.below;
    if (want == 0) continue;
    std::size_t refinements = 0;
    SideRoots roots = scan_side(bp, sign, p_max, want, refinements);
    std::vector<SpectralMode> side;
    for (double p : roots.p) side.push_back(make_out_of_band_mode(bp, p, sign));
    if (side.size() + 1 == want && is_edge_root(bp, sign)) {
      side.push_back(make_edge_mode(bp, sign));
      if (diagnostics) ++diagnostics->band_edge_modes;
    }
    if (diagnostics) {
      diagnostics->grid_refinements += refinements;
      diagnostics->tangent_pairs += roots.tangent_pairs;
    }
    if (side.size() != want) {
      std::ostringstream msg;
      msg << "found " << side.size() << " eigenvalues " << (sign > 0 ? "above" : "below")
          << " the band but the Sturm count is " << want;
      throw Error(ErrorCode::CountMismatch, msg.str());
    }
    out.insert(out.end(), side.begin(), side.end());
  }
  return out;
}

double boundary_square_ratio(const BoundaryPolynomials& bp, const UtPoint& corner, double xi) {
  const UtValues v = eval_ut(bp, xi);
  const StarredPoint st = starred_at(v, xi, bp.n);
  const double num = corner.u * v.t - corner.t * v.u;
  const double den = st.u_num * v.t - st.t_num * v.u;
  return 2.0 * (1.0 - xi * xi) * num / den;
}

double char_poly_derivative(const BoundaryPolynomials& bp, double xi) {
  const StarredPoint st = starred_at(eval_ut(bp, xi), xi, bp.n);
  const int n = static_cast<int>(bp.n);
  const double num =
      st.u_num * cheb::u_recurrence(n, xi) + st.t_num * cheb::t_recurrence(n + 1, xi);
  return num / (2.0 * (1.0 - xi * xi));
}

std::pair<double, double> eigvec_first_components(const BoundaryPolynomials& bp,
                                                  const SpectralMode& mode) {
  const double k = mode.k;
  const double s = std::sin(k);
  const double xi = std::cos(k);
  const UtValues v = eval_ut(bp, xi);
  const double amp = v.u * v.u + v.t * v.t * s * s;
  const double factor = 2.0 * s * s / theta_prime(bp, k) / amp;
  const auto square = [&](const std::optional<UtPoint>& corner, const char* which) {
    if (!corner) return std::numeric_limits<double>::quiet_NaN();
    const double val = factor * (corner->u * v.t - corner->t * v.u);
    if (val < -1e-12) {
      std::ostringstream msg;
      msg << "squared " << which << " component is negative (" << val << ") at k = " << k;
      throw Error(ErrorCode::NegativeSquare, msg.str());
    }
    return std::max(val, 0.0);
  };
  return {square(evaluate_upper_left(bp, xi), "first"),
          square(evaluate_lower_right(bp, xi), "last")};
}

std::vector<double> twisted_eigvec(const QutMatrix& m, double lambda,
                                   const std::vector<double>* penalty, std::size_t* twist) {
  const std::size_t n = m.ell();
  const std::vector<double>& a = m.diag;
  const std::vector<double>& b = m.offdiag;
  double bmax2 = 1.0;
  for (double x : b) bmax2 = std::max(bmax2, x * x);
  const double pivmin = std::numeric_limits<double>::min() * bmax2;
  const auto guard = [&](double d) { return std::fabs(d) < pivmin ? (d < 0.0 ? -pivmin : pivmin) : d; };

  std::vector<double> dp(n), dm(n);
  dp[0] = guard(a[0] - lambda);
  for (std::size_t i = 1; i < n; ++i) dp[i] = guard((a[i] - lambda) - b[i - 1] * b[i - 1] / dp[i - 1]);
  dm[n - 1] = guard(a[n - 1] - lambda);
  for (std::size_t i = n - 1; i-- > 0;) dm[i] = guard((a[i] - lambda) - b[i] * b[i] / dm[i + 1]);

  std::size_t r = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double gamma = std::fabs(dp[i] + dm[i] - (a[i] - lambda));
    if (penalty) gamma *= 1.0 + (*penalty)[i];
    if (gamma < best) {
      best = gamma;
      r = i;
    }
  }
  if (twist) *twist = r;

  std::vector<double> x(n, 0.0);
  x[r] = 1.0;
  for (std::size_t i = r; i-- > 0;) x[i] = -b[i] * x[i + 1] / dp[i];
  for (std::size_t i = r + 1; i < n; ++i) x[i] = -b[i - 1] * x[i - 1] / dm[i];
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : x) v /= norm;
  return x;
}

namespace {

void fix_sign(std::vector<double>& x) {
  for (double v : x) {
    if (v == 0.0) continue;
    if (v < 0.0) {
      for (double& w : x) w = -w;
    }
    return;
  }
}

struct PlaneWave {
  double re, im;  // O_nu = re sin(k nu) + im cos(k nu)
};

// Fit from the values at rows nu and nu+1; the system determinant is -sin k.
PlaneWave fit_wave(double k, std::size_t nu, double o0, double o1) {
  const double x0 = k * static_cast<double>(nu);
  const double x1 = k * static_cast<double>(nu + 1);
  const double s0 = std::sin(x0), c0 = std::cos(x0);
  const double s1 = std::sin(x1), c1 = std::cos(x1);
  const double det = s0 * c1 - c0 * s1;
  return {(o0 * c1 - o1 * c0) / det, (s0 * o1 - s1 * o0) / det};
}

// Real factor c minimizing |c * from - to| over plane-wave amplitudes.
double match_wave(const PlaneWave& to, const PlaneWave& from) {
  return (to.re * from.re + to.im * from.im) / (from.re * from.re + from.im * from.im);
}

std::vector<double> in_band_vector(const QutMatrix& q, const SpectralMode& mode) {
  const std::size_t ell = q.ell();
  const std::size_t u = q.u;
  const std::size_t v = q.v;
  const double lambda = 2.0 * std::cos(mode.k);
  const std::vector<double>& a = q.diag;
  const std::vector<double>& b = q.offdiag;

  const bool left_anchor = !(mode.o_last_sq > mode.o_first_sq) || std::isnan(mode.o_last_sq);
  const double left_seed = left_anchor ? std::sqrt(mode.o_first_sq) : 1.0;
  const double right_seed = left_anchor ? 1.0 : std::sqrt(mode.o_last_sq);

  // Rows 1..min(u+1, ell) forward, rows ell down to max(v-1, 1) backward
  // (1-based; stored 0-based).
  std::vector<double> left(ell, 0.0), right(ell, 0.0);
  const std::size_t left_end = std::min(u + 1, ell);
  left[0] = left_seed;
  for (std::size_t i = 0; i + 1 < left_end; ++i) {
    const double prev = i > 0 ? b[i - 1] * left[i - 1] : 0.0;
    left[i + 1] = ((lambda - a[i]) * left[i] - prev) / b[i];
  }
  const std::size_t right_begin = v >= 2 ? v - 1 : 1;
  right[ell - 1] = right_seed;
  for (std::size_t i = ell - 1; i + 1 > right_begin; --i) {
    const double next = i + 1 < ell ? b[i] * right[i + 1] : 0.0;
    right[i - 1] = ((lambda - a[i]) * right[i] - next) / b[i - 1];
  }

  std::vector<double> x(ell, 0.0);
  if (v > u) {
    const PlaneWave wl = fit_wave(mode.k, u, left[u - 1], left[u]);
    const PlaneWave wr = fit_wave(mode.k, v - 1, right[v - 2], right[v - 1]);
    const PlaneWave bulk = left_anchor ? wl : wr;
    const double cl = left_anchor ? 1.0 : match_wave(wr, wl);
    const double cr = left_anchor ? match_wave(wl, wr) : 1.0;
    for (std::size_t i = 0; i + 1 < u; ++i) x[i] = cl * left[i];
    for (std::size_t nu = u; nu <= v; ++nu) {
      const double kn = mode.k * static_cast<double>(nu);
      x[nu - 1] = bulk.re * std::sin(kn) + bulk.im * std::cos(kn);
    }
    for (std::size_t i = v; i < ell; ++i) x[i] = cr * right[i];
  } else {
    // One-row block: match the two partial solutions on their overlap.
    const std::size_t lo = u >= 2 ? u - 2 : 0;
    const std::size_t hi = std::min(u, ell - 1);
    double lr = 0.0, ll = 0.0, rr = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      lr += left[i] * right[i];
      ll += left[i] * left[i];
      rr += right[i] * right[i];
    }
    const double cl = left_anchor ? 1.0 : lr / ll;
    const double cr = left_anchor ? lr / rr : 1.0;
    for (std::size_t i = 0; i < u; ++i) x[i] = cl * left[i];
    for (std::size_t i = u; i < ell; ++i) x[i] = cr * right[i];
  }
  fix_sign(x);
  return x;
}

bool use_twisted(const SpectralMode& mode) {
  return mode.branch != Branch::InBand || std::fabs(std::sin(mode.k)) < cheb::kEdgeSinThreshold ||
         !(mode.o_first_sq > 0.0 || mode.o_last_sq > 0.0);
}

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

std::vector<double> tridiag_apply(const QutMatrix& q, const std::vector<double>& x) {
  const std::size_t n = q.ell();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = q.diag[i] * x[i];
    if (i > 0) s += q.offdiag[i - 1] * x[i - 1];
    if (i + 1 < n) s += q.offdiag[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

struct RitzResult {
  std::vector<double> values;               // descending
  std::vector<std::vector<double>> vectors;
};

RitzResult rayleigh_ritz(const QutMatrix& q, const std::vector<std::vector<double>>& basis) {
  const std::size_t m = basis.size();
  Eigen::MatrixXd h(m, m);
  std::vector<std::vector<double>> tv;
  tv.reserve(m);
  for (const auto& v : basis) tv.push_back(tridiag_apply(q, v));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double hij = 0.5 * (dot(basis[i], tv[j]) + dot(basis[j], tv[i]));
      h(i, j) = hij;
      h(j, i) = hij;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  RitzResult out;
  const std::size_t len = basis.front().size();
  for (std::size_t c = m; c-- > 0;) {
    out.values.push_back(es.eigenvalues()(static_cast<Eigen::Index>(c)));
    std::vector<double> v(len, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double w = es.eigenvectors()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      for (std::size_t r = 0; r < len; ++r) v[r] += w * basis[i][r];
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

// LU factorization of T - sigma with partial pivoting, for repeated solves.
class ShiftedLU {
 public:
  ShiftedLU(const QutMatrix& q, double sigma) : n_(q.ell()), d_(n_), du_(n_), du2_(n_), dl_(n_), piv_(n_) {
    for (std::size_t i = 0; i < n_; ++i) d_[i] = q.diag[i] - sigma;
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      dl_[i] = q.offdiag[i];
      du_[i] = q.offdiag[i];
    }
    const double tiny = kEps * std::max(1.0, inf_norm(q));
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      if (std::fabs(d_[i]) >= std::fabs(dl_[i])) {
        piv_[i] = 0;
        if (d_[i] == 0.0) d_[i] = tiny;
        const double f = dl_[i] / d_[i];
        dl_[i] = f;
        d_[i + 1] -= f * du_[i];
      } else {
        piv_[i] = 1;
        const double f = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = f;
        const double tmp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n_) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -f * du_[i + 1];
        }
      }
    }
    if (d_[n_ - 1] == 0.0) d_[n_ - 1] = tiny;
  }

  void solve(std::vector<double>& x) const {
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      if (piv_[i] == 0) {
        x[i + 1] -= dl_[i] * x[i];
      } else {
        const double tmp = x[i];
        x[i] = x[i + 1];
        x[i + 1] = tmp - dl_[i] * x[i + 1];
      }
    }
    x[n_ - 1] /= d_[n_ - 1];
    if (n_ < 2) return;
    x[n_ - 2] = (x[n_ - 2] - du_[n_ - 2] * x[n_ - 1]) / d_[n_ - 2];
    for (std::size_t i = n_ - 2; i-- > 0;) {
      x[i] = (x[i] - du_[i] * x[i + 1] - du2_[i] * x[i + 2]) / d_[i];
    }
  }

 private:
  std::size_t n_;
  std::vector<double> d_, du_, du2_, dl_;
  std::vector<char> piv_;
};

// Orthonormal basis of the invariant subspace of a cluster of localized
// modes with eigenvalues in [lo, hi], by block inverse iteration from the
// twisted vectors. The shift sits just outside the cluster on the side
// away from the band, so the cluster is amplified uniformly and every other
// eigenvalue is damped.
std::vector<std::vector<double>> cluster_subspace(const QutMatrix& q, std::vector<std::vector<double>> basis,
                                                  double lo, double hi, bool* converged) {
  const std::size_t len = q.ell();
  const double tnorm = std::max(1.0, inf_norm(q));
  const double spread = hi - lo;
  const double offset = std::max(0.5 * spread, 1e-9 * tnorm);
  const double sigma = hi > 0.0 ? hi + offset : lo - offset;
  const ShiftedLU lu(q, sigma);
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  const auto refill = [&](std::vector<double>& v) {
    // Deterministic xorshift fill for a collapsed start vector.
    for (double& x : v) {
      seed ^= seed << 13;
      seed ^= seed >> 7;
      seed ^= seed << 17;
      x = static_cast<double>(seed >> 11) * 0x1.0p-53 - 0.5;
    }
  };
  const auto orthonormalize_filling = [&](std::vector<std::vector<double>>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (int attempt = 0; attempt < 4; ++attempt) {
        const double nrm = norm2(vs[i]);
        if (nrm > 0.0 && std::isfinite(nrm)) {
          for (double& x : vs[i]) x /= nrm;
          for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < i; ++j) {
              const double c = dot(vs[i], vs[j]);
              for (std::size_t r = 0; r < len; ++r) vs[i][r] -= c * vs[j][r];
            }
          }
          const double left = norm2(vs[i]);
          if (left > 1e-8) {
            for (double& x : vs[i]) x /= left;
            break;
          }
        }
        refill(vs[i]);
      }
    }
  };
  orthonormalize_filling(basis);
  *converged = false;
  for (int it = 0; it < 30; ++it) {
    for (auto& v : basis) lu.solve(v);
    orthonormalize_filling(basis);
    if (it < 1) continue;
    const RitzResult ritz = rayleigh_ritz(q, basis);
    double worst = 0.0;
    for (std::size_t c = 0; c < ritz.vectors.size(); ++c) {
      std::vector<double> r = tridiag_apply(q, ritz.vectors[c]);
      for (std::size_t i = 0; i < len; ++i) r[i] -= ritz.values[c] * ritz.vectors[c][i];
      worst = std::max(worst, norm2(r));
    }
    if (worst <= 1e-13 * tnorm) {
      *converged = true;
      break;
    }
  }
  return basis;
}

// Projects the cluster space onto the even and odd subspaces of the
// reversal J and hands them out by the alternating parity of descending
// order. Returns false when the dimensions do not fit.
bool parity_adapt(const QutMatrix& q, const std::vector<std::size_t>& positions,
                  std::vector<std::vector<double>>& vecs) {
  const std::size_t len = vecs.front().size();
  std::vector<std::vector<double>> even, odd;
  for (const auto& v : vecs) {
    std::vector<double> e(len), o(len);
    for (std::size_t r = 0; r < len; ++r) {
      e[r] = 0.5 * (v[r] + v[len - 1 - r]);
      o[r] = 0.5 * (v[r] - v[len - 1 - r]);
    }
    even.push_back(std::move(e));
    odd.push_back(std::move(o));
  }
  // Pivoted Gram-Schmidt: the largest remaining component goes first, so a
  // small projection never gets normalized ahead of a large one.
  const auto reduce = [](std::vector<std::vector<double>>& set) {
    std::vector<std::vector<double>> kept;
    while (!set.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < set.size(); ++i) {
        if (norm2(set[i]) > norm2(set[best])) best = i;
      }
      std::vector<double> v = std::move(set[best]);
      set.erase(set.begin() + static_cast<std::ptrdiff_t>(best));
      const double nrm = norm2(v);
      if (nrm <= 1e-4) break;
      for (double& x : v) x /= nrm;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& w : kept) {
          const double c = dot(v, w);
          for (std::size_t r = 0; r < v.size(); ++r) v[r] -= c * w[r];
        }
        const double again = norm2(v);
        for (double& x : v) x /= again;
      }
      for (auto& w : set) {
        for (int pass = 0; pass < 2; ++pass) {
          const double c = dot(w, v);
          for (std::size_t r = 0; r < w.size(); ++r) w[r] -= c * v[r];
        }
      }
      kept.push_back(std::move(v));
    }
    set = std::move(kept);
  };
  reduce(even);
  reduce(odd);
  std::size_t need_even = 0;
  for (std::size_t pos : positions) need_even += (pos % 2 == 0);
  if (even.size() != need_even || odd.size() != positions.size() - need_even) return false;
  if (!even.empty()) even = rayleigh_ritz(q, even).vectors;
  if (!odd.empty()) odd = rayleigh_ritz(q, odd).vectors;
  std::size_t ie = 0, io = 0;
  for (std::size_t c = 0; c < positions.size(); ++c) {
    vecs[c] = positions[c] % 2 == 0 ? even[ie++] : odd[io++];
  }
  return true;
}

}  // namespace

bool is_mirror_symmetric(const QutMatrix& m) {
  const std::size_t n = m.ell();
  for (std::size_t i = 0; i < n; ++i) {
    if (m.diag[i] != m.diag[n - 1 - i]) return false;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (m.offdiag[i] != m.offdiag[n - 2 - i]) return false;
  }
  return true;
}

std::vector<double> eigvec_full(const BoundaryPolynomials& bp, const NormalizedQut& m,
                                const SpectralMode& mode) {
  SpectralMode filled = mode;
  if (mode.branch == Branch::InBand && mode.o_first_sq == 0.0 && mode.o_last_sq == 0.0) {
    std::tie(filled.o_first_sq, filled.o_last_sq) = eigvec_first_components(bp, mode);
  }
  if (use_twisted(filled)) {
    std::vector<double> x = twisted_eigvec(m.inner, filled.lambda_normalized);
    fix_sign(x);
    return x;
  }
  return in_band_vector(m.inner, filled);
}

void denormalize_spectrum(Spectrum& s, const NormalizedQut& m) {
  for (SpectralMode& mode : s.modes) mode.lambda = m.shift + m.scale * mode.lambda_normalized;
  const std::size_t ell = m.sign_flips.size();
  if (s.vectors.empty()) return;
  for (std::size_t k = 0; k < s.modes.size(); ++k) {
    for (std::size_t i = 0; i < ell; ++i) s.vectors[k * ell + i] *= m.sign_flips[i];
  }
}

Spectrum diagonalize_normalized(const NormalizedQut& m, const SolveOptions& options) {
  const QutMatrix& q = m.inner;
  const BoundaryPolynomials bp = build_boundary_polynomials(m);
  Spectrum s;
  s.ell = q.ell();
  s.n = q.block_size();
  SpectrumDiagnostics& diag = s.diagnostics;

  const OutOfBandCounts expected = expected_out_of_band(m);
  const std::size_t in_expected = s.ell - expected.above - expected.below;
  InBandResult in_band = solve_in_band(bp, options, in_expected);
  diag.grid_refinements += in_band.refinements;
  diag.bisection_fallbacks += in_band.fallbacks;
  if (in_band.modes.size() != in_expected) {
    std::ostringstream msg;
    msg << "in-band roots found: " << in_band.modes.size() << ", Sturm count: " << in_expected;
    diag.warnings.push_back(msg.str());
  }

  std::vector<SpectralMode> modes = std::move(in_band.modes);
  // An eigenvalue exactly on a band edge is counted on the in-band side and
  // shows up as a root just inside the band, where the phase is flat.
  for (SpectralMode& md : modes) {
    const int sign = md.k < 0.5 * kPi ? 1 : -1;
    const double dist = sign > 0 ? md.k : kPi - md.k;
    if (dist < kEdgeSnap && is_edge_root(bp, sign)) {
      md = make_edge_mode(bp, sign);
      ++diag.band_edge_modes;
    }
  }
  const std::vector<SpectralMode> outside = solve_out_of_band(bp, m, expected, &diag);
  modes.insert(modes.end(), outside.begin(), outside.end());
  if (modes.size() < s.ell) {
    // A root sitting exactly on a band edge can be counted on the in-band
    // side by the Sturm sequence.
    for (int sign : {1, -1}) {
      const bool present = std::any_of(modes.begin(), modes.end(), [&](const SpectralMode& md) {
        return md.branch == Branch::BandEdge && md.point.sign == sign;
      });
      if (!present && modes.size() < s.ell && is_edge_root(bp, sign)) {
        modes.push_back(make_edge_mode(bp, sign));
        ++diag.band_edge_modes;
      }
    }
  }
  if (modes.size() != s.ell) {
    std::ostringstream msg;
    msg << "found " << modes.size() << " eigenvalues for a matrix of dimension " << s.ell;
    throw Error(ErrorCode::CountMismatch, msg.str());
  }
  std::stable_sort(modes.begin(), modes.end(), [](const SpectralMode& x, const SpectralMode& y) {
    return x.lambda_normalized > y.lambda_normalized;
  });

  for (SpectralMode& md : modes) {
    if (md.branch != Branch::InBand) continue;
    const auto [first, last] = eigvec_first_components(bp, md);
    md.o_first_sq = first;
    md.o_last_sq = last;
    if (!(md.dos_weight > 0.0)) ++diag.negative_dos_modes;
  }

  // Isolated localized modes: the secular function loses digits when a
  // partner root is near, so finish with Rayleigh quotients of twisted
  // vectors. Clusters are handled below.
  std::vector<double> sorted_lambda(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) sorted_lambda[i] = modes[i].lambda_normalized;
  parallel_for(modes.size(), options.threads, [&](std::size_t i) {
    SpectralMode& md = modes[i];
    if (md.branch != Branch::OutOfBand) return;
    const double scale = std::max(1.0, std::fabs(sorted_lambda[i]));
    const bool near_prev = i > 0 && sorted_lambda[i - 1] - sorted_lambda[i] <= kClusterGap * scale;
    const bool near_next =
        i + 1 < modes.size() && sorted_lambda[i] - sorted_lambda[i + 1] <= kClusterGap * scale;
    if (near_prev || near_next) return;
    double lambda = md.lambda_normalized;
    for (int it = 0; it < 2; ++it) {
      const std::vector<double> v = twisted_eigvec(q, lambda);
      const double rq = dot(v, tridiag_apply(q, v)) / dot(v, v);
      if (!std::isfinite(rq)) return;
      lambda = rq;
    }
    if (std::fabs(lambda - md.lambda_normalized) <= kPolishWindow * scale) move_mode(md, lambda);
  });

  // Vectors: every mode when requested, otherwise only those whose first
  // component has no closed form.
  const std::size_t ell = s.ell;
  std::vector<std::vector<double>> vecs(modes.size());
  std::vector<char> twisted(modes.size(), 0);
  parallel_for(modes.size(), options.threads, [&](std::size_t i) {
    const SpectralMode& md = modes[i];
    const bool needed = options.want_vectors || use_twisted(md) || std::isnan(md.o_first_sq);
    if (!needed) return;
    twisted[i] = use_twisted(md);
    vecs[i] = eigvec_full(bp, m, md);
  });
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].branch == Branch::InBand && twisted[i]) ++diag.twisted_in_band;
    if (modes[i].branch == Branch::InBand && !twisted[i] && !vecs[i].empty()) {
      diag.max_norm_deviation = std::max(diag.max_norm_deviation, std::fabs(norm2(vecs[i]) - 1.0));
    }
  }

  // Clusters of localized modes: twisted vectors at distinct twist
  // positions, then Rayleigh-Ritz on their span.
  std::vector<std::size_t> localized;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].branch != Branch::InBand) localized.push_back(i);
  }
  const bool mirror = is_mirror_symmetric(q);
  for (std::size_t start = 0; start < localized.size();) {
    std::size_t end = start + 1;
    while (end < localized.size()) {
      const double la = modes[localized[end - 1]].lambda_normalized;
      const double lb = modes[localized[end]].lambda_normalized;
      if (std::fabs(la - lb) > kClusterGap * std::max(1.0, std::fabs(la))) break;
      ++end;
    }
    if (end - start >= 2) {
      std::vector<std::size_t> positions(localized.begin() + static_cast<std::ptrdiff_t>(start),
                                         localized.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::vector<double>> basis;
      double lo = modes[positions.front()].lambda_normalized;
      double hi = lo;
      for (std::size_t pos : positions) {
        lo = std::min(lo, modes[pos].lambda_normalized);
        hi = std::max(hi, modes[pos].lambda_normalized);
        basis.push_back(twisted_eigvec(q, modes[pos].lambda_normalized));
      }
      bool converged = false;
      basis = cluster_subspace(q, std::move(basis), lo, hi, &converged);
      if (!converged) {
        std::ostringstream msg;
        msg << "subspace iteration for " << positions.size() << " localized modes near "
            << hi << " did not reach full accuracy";
        diag.warnings.push_back(msg.str());
      }
      RitzResult ritz = rayleigh_ritz(q, basis);
      // Exact mirror parity beats the subspace accuracy, which is limited by
      // the splitting of the pair.
      if (mirror && parity_adapt(q, positions, ritz.vectors)) {
        for (std::size_t c = 0; c < positions.size(); ++c) {
          ritz.values[c] = dot(ritz.vectors[c], tridiag_apply(q, ritz.vectors[c]));
        }
      }
      for (std::size_t c = 0; c < positions.size(); ++c) {
        SpectralMode& md = modes[positions[c]];
        move_mode(md, ritz.values[c]);
        fix_sign(ritz.vectors[c]);
        vecs[positions[c]] = std::move(ritz.vectors[c]);
      }
      diag.clustered_modes += positions.size();
    }
    start = end;
  }

  s.eigvec_first.resize(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    SpectralMode& md = modes[i];
    if (!vecs[i].empty()) {
      s.eigvec_first[i] = vecs[i].front();
      if (md.branch != Branch::InBand) {
        md.o_first_sq = vecs[i].front() * vecs[i].front();
        md.o_last_sq = vecs[i].back() * vecs[i].back();
      }
    } else {
      s.eigvec_first[i] = std::sqrt(md.o_first_sq);
    }
    diag.max_residual = std::max(diag.max_residual, md.residual);
    if (md.branch == Branch::InBand) ++s.counts.in_band;
    else if (md.lambda_normalized > 0.0) ++s.counts.above;
    else ++s.counts.below;
  }

  if (options.want_vectors) {
    s.vectors.resize(ell * ell);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      std::copy(vecs[i].begin(), vecs[i].end(), s.vectors.begin() + static_cast<std::ptrdiff_t>(i * ell));
    }
  }
  s.modes = std::move(modes);
  return s;
}

Spectrum diagonalize(const QutMatrix& m, const SolveOptions& options) {
  const NormalizedQut nq = normalize(m);
  Spectrum s = diagonalize_normalized(nq, options);
  for (std::string& w : warnings(m)) s.diagnostics.warnings.push_back(std::move(w));
  denormalize_spectrum(s, nq);
  return s;
}

}  // namespace qut
