#pragma once

// Quasi-uniform tridiagonal (QUT) matrices: symmetric tridiagonal matrices
// whose rows u..v (1-based) form a uniform block with diagonal a and
// off-diagonal b. Everything outside the block is a free boundary element.

#include <cstddef>
#include <string>
#include <vector>

namespace qut {

struct QutMatrix {
  std::vector<double> diag;     // a_1 .. a_ell
  std::vector<double> offdiag;  // b_1 .. b_{ell-1}
  std::size_t u = 1;            // first row of the uniform block (1-based)
  std::size_t v = 1;            // last row of the uniform block
  double bulk_a = 0.0;
  double bulk_b = 1.0;

  std::size_t ell() const { return diag.size(); }
  std::size_t block_size() const { return v - u + 1; }
  std::size_t boundary_width() const { return ell() - block_size(); }
};

// Throws Error{ZeroCoupling | BlockMismatch | BadIndices | InvalidArgument}
// when the matrix violates the QUT invariants.
void validate(const QutMatrix& m);

// Non-fatal observations about a valid matrix (weak quasi-uniformity, wide
// boundaries that stress the monomial basis).
std::vector<std::string> warnings(const QutMatrix& m);

// Builds and validates a matrix from its uniform bulk and the explicit
// boundary rows. left_b[i] couples row i+1 to row i+2; right_b[i] couples
// row ell-R+i to row ell-R+i+1, where R = right_a.size().
QutMatrix make_qut(std::size_t ell, double bulk_a, double bulk_b,
                   const std::vector<double>& left_a, const std::vector<double>& left_b,
                   const std::vector<double>& right_a, const std::vector<double>& right_b);

// The matrix in the frame where the bulk is (a, b) = (0, 1).
struct NormalizedQut {
  QutMatrix inner;
  double shift = 0.0;            // original bulk_a
  double scale = 1.0;            // original |bulk_b|
  std::vector<int> sign_flips;   // per row; eigenvectors differ by these signs
};

NormalizedQut normalize(const QutMatrix& m);

// Longest run of rows with constant diagonal and constant coupling. Never
// applied implicitly: the caller decides whether the run is its bulk.
struct DetectedBlock {
  std::size_t u = 1;
  std::size_t v = 1;
  double bulk_a = 0.0;
  double bulk_b = 1.0;
};

DetectedBlock detect_uniform_block(const std::vector<double>& diag,
                                   const std::vector<double>& offdiag);

}  // namespace qut
