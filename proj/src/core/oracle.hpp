#pragma once

// Reference eigensolver for arbitrary symmetric tridiagonal matrices: Sturm
// bisection for eigenvalues and inverse iteration for eigenvectors. It works
// on the raw matrix and knows nothing about uniform blocks, which is what
// makes it usable as an independent check of the analytic solver.

#include <cstddef>
#include <vector>

#include "core/qut_matrix.hpp"
#include "core/scaled.hpp"

namespace qut::oracle {

struct DenseTridiag {
  std::vector<double> diag;
  std::vector<double> offdiag;

  static DenseTridiag from(const QutMatrix& m) { return {m.diag, m.offdiag}; }

  std::size_t size() const { return diag.size(); }
  // Maximum absolute row sum; bounds every eigenvalue.
  double inf_norm() const;
  DenseTridiag submatrix(std::size_t first, std::size_t last) const;  // 1-based, inclusive
};

// Number of eigenvalues strictly below x.
std::size_t sturm_count(const DenseTridiag& t, double x);

struct EigenDecomposition {
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // row-major, row k is the eigenvector of values[k]; empty unless requested
};

EigenDecomposition eig_all(const DenseTridiag& t, bool want_vectors);

// det(lambda - T) by the forward three-term recurrence, rescaled as it goes.
// The empty matrix has characteristic polynomial 1.
ScaledReal char_poly_eval(const DenseTridiag& t, double lambda);

}  // namespace qut::oracle
