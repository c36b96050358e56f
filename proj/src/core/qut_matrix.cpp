#include "core/qut_matrix.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace qut {

void validate(const QutMatrix& m) {
  const std::size_t ell = m.ell();
  if (ell == 0) throw Error(ErrorCode::InvalidArgument, "matrix dimension must be positive");
  if (m.offdiag.size() != ell - 1) {
    throw Error(ErrorCode::InvalidArgument, "offdiag must have ell-1 entries");
  }
  for (double a : m.diag) {
    if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "non-finite diagonal entry");
  }
  for (double b : m.offdiag) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "non-finite off-diagonal entry");
  }
  if (!std::isfinite(m.bulk_a) || !std::isfinite(m.bulk_b)) {
    throw Error(ErrorCode::InvalidArgument, "non-finite bulk value");
  }
  if (m.u < 1 || m.u > m.v || m.v > ell) {
    std::ostringstream msg;
    msg << "uniform block [" << m.u << ", " << m.v << "] does not fit in dimension " << ell;
    throw Error(ErrorCode::BadIndices, msg.str());
  }
  if (m.bulk_b == 0.0) throw Error(ErrorCode::ZeroCoupling, "bulk coupling is zero");
  for (std::size_t i = 0; i < m.offdiag.size(); ++i) {
    if (m.offdiag[i] == 0.0) {
      std::ostringstream msg;
      msg << "coupling b_" << i + 1 << " is zero; the matrix decomposes";
      throw Error(ErrorCode::ZeroCoupling, msg.str());
    }
  }
  for (std::size_t mu = m.u; mu <= m.v; ++mu) {
    if (m.diag[mu - 1] != m.bulk_a) {
      std::ostringstream msg;
      msg << "a_" << mu << " = " << m.diag[mu - 1] << " differs from bulk a = " << m.bulk_a;
      throw Error(ErrorCode::BlockMismatch, msg.str());
    }
    if (mu < m.v && m.offdiag[mu - 1] != m.bulk_b) {
      std::ostringstream msg;
      msg << "b_" << mu << " = " << m.offdiag[mu - 1] << " differs from bulk b = " << m.bulk_b;
      throw Error(ErrorCode::BlockMismatch, msg.str());
    }
  }
}

std::vector<std::string> warnings(const QutMatrix& m) {
  std::vector<std::string> out;
  const std::size_t width = m.boundary_width();
  if (2 * width > m.ell()) {
    out.push_back("boundary rows outnumber the uniform block; the matrix is only weakly quasi-uniform");
  }
  if (width > 30) {
    out.push_back("boundary width exceeds 30 rows; monomial-basis polynomials may lose accuracy");
  }
  return out;
}

QutMatrix make_qut(std::size_t ell, double bulk_a, double bulk_b,
                   const std::vector<double>& left_a, const std::vector<double>& left_b,
                   const std::vector<double>& right_a, const std::vector<double>& right_b) {
  const std::size_t left = left_a.size();
  const std::size_t right = right_a.size();
  if (left_b.size() != left || right_b.size() != right) {
    throw Error(ErrorCode::InvalidArgument, "boundary a and b lists must have equal lengths");
  }
  if (ell == 0 || left + right >= ell) {
    throw Error(ErrorCode::BadIndices, "boundary rows leave no uniform block");
  }
  QutMatrix m;
  m.diag.assign(ell, bulk_a);
  m.offdiag.assign(ell - 1, bulk_b);
  for (std::size_t i = 0; i < left; ++i) {
    m.diag[i] = left_a[i];
    m.offdiag[i] = left_b[i];
  }
  for (std::size_t i = 0; i < right; ++i) {
    const std::size_t row = ell - right + i;  // 0-based
    m.diag[row] = right_a[i];
    m.offdiag[row - 1] = right_b[i];
  }
  m.u = left + 1;
  m.v = ell - right;
  m.bulk_a = bulk_a;
  m.bulk_b = bulk_b;
  validate(m);
  return m;
}

NormalizedQut normalize(const QutMatrix& m) {
  validate(m);
  NormalizedQut out;
  out.shift = m.bulk_a;
  out.scale = std::fabs(m.bulk_b);
  // D T D with alternating D flips every coupling; combined with the scale
  // this divides each b by bulk_b.
  const bool flip = m.bulk_b < 0.0;
  out.sign_flips.resize(m.ell());
  for (std::size_t i = 0; i < m.ell(); ++i) out.sign_flips[i] = (flip && (i % 2 == 1)) ? -1 : 1;

  QutMatrix& n = out.inner;
  n.u = m.u;
  n.v = m.v;
  n.bulk_a = 0.0;
  n.bulk_b = 1.0;
  n.diag.resize(m.ell());
  n.offdiag.resize(m.offdiag.size());
  for (std::size_t i = 0; i < m.ell(); ++i) {
    n.diag[i] = (i + 1 >= m.u && i + 1 <= m.v) ? 0.0 : (m.diag[i] - m.bulk_a) / out.scale;
  }
  for (std::size_t i = 0; i < m.offdiag.size(); ++i) {
    const bool in_block = i + 1 >= m.u && i + 1 < m.v;
    n.offdiag[i] = in_block ? 1.0 : m.offdiag[i] / m.bulk_b;
  }
  return out;
}

DetectedBlock detect_uniform_block(const std::vector<double>& diag,
                                   const std::vector<double>& offdiag) {
  DetectedBlock best;
  const std::size_t ell = diag.size();
  if (ell == 0) return best;
  best.bulk_a = diag[0];
  best.bulk_b = offdiag.empty() ? 1.0 : offdiag[0];
  std::size_t best_len = 1;
  std::size_t start = 0;
  while (start < ell) {
    std::size_t end = start;
    while (end + 1 < ell && diag[end + 1] == diag[start] && offdiag[end] == offdiag[start]) ++end;
    const std::size_t len = end - start + 1;
    if (len > best_len) {
      best_len = len;
      best = {start + 1, end + 1, diag[start], offdiag[start]};
    }
    start = (end == start) ? end + 1 : end;
  }
  return best;
}

}  // namespace qut
