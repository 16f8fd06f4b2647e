#pragma once

// Thin wrappers over LAPACK for the dense kernels the spectral code needs.

#include <vector>

#include "capres/operators.hpp"

namespace capres::linalg {

struct EigResult {
  std::vector<cplx> values;
  ComplexMatrix vectors;  // columns, unit 2-norm; empty unless requested
  int info = 0;           // LAPACK info; > 0 means the QR iteration failed
};

/// All eigenvalues (and right eigenvectors) of a general complex matrix.
EigResult eig_general(ComplexMatrix a, bool wantVectors);

/// Smallest singular value of a general complex matrix.
double smallest_singular_value(ComplexMatrix a);

struct ResolventTrace {
  cplx trace;    // trace((z - A)^{-1})
  double rcond;  // reciprocal 1-norm condition estimate of (z - A)
};

/// LU-based trace of the resolvent; uses the tridiagonal factorization when
/// the operator is tridiagonal.
ResolventTrace resolvent_trace(const DiscreteOperator& op, cplx z);

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule.
QuadratureRule gauss_legendre(int n);

}  // namespace capres::linalg
