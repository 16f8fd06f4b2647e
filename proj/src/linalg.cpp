#include "capres/linalg.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "capres/errors.hpp"

namespace capres::linalg {

EigResult eig_general(ComplexMatrix a, bool wantVectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  EigResult res;
  res.values.resize(static_cast<std::size_t>(n));
  if (n == 0) return res;
  if (wantVectors) res.vectors.resize(n, n);
  cplx dummy{};
  res.info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', wantVectors ? 'V' : 'N', n, a.data(), n,
                           res.values.data(), &dummy, 1,
                           wantVectors ? res.vectors.data() : &dummy, n);
  if (res.info < 0) throw Error(ErrorKind::numericalFailure, "zgeev rejected its arguments");
  return res;
}

double smallest_singular_value(ComplexMatrix a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  if (k == 0) return 0.0;
  std::vector<double> s(static_cast<std::size_t>(k));
  cplx dummy{};
  const lapack_int info =
      LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, a.data(), m, s.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw Error(ErrorKind::numericalFailure, "zgesdd did not converge");
  return s.back();
}

namespace {

ResolventTrace tridiagonal_trace(const DiscreteOperator& op, cplx z) {
  const auto bands = op.bands();
  const lapack_int n = static_cast<lapack_int>(bands.diag.size());
  std::vector<cplx> dl(bands.lower.size()), d(bands.diag.size()), du(bands.upper.size());
  std::vector<cplx> du2(static_cast<std::size_t>(std::max(n - 2, 0)));
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  double anorm = 0.0;  // 1-norm of z - A: max column sum
  for (lapack_int j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    d[uj] = z - bands.diag[uj];
    double col = std::abs(d[uj]);
    if (j > 0) col += std::abs(bands.upper[uj - 1]);
    if (j + 1 < n) col += std::abs(bands.lower[uj]);
    anorm = std::max(anorm, col);
  }
  for (std::size_t i = 0; i < dl.size(); ++i) {
    dl[i] = -bands.lower[i];
    du[i] = -bands.upper[i];
  }
  lapack_int info = LAPACKE_zgttrf(n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data());
  if (info > 0) return {cplx(0.0, 0.0), 0.0};
  double rcond = 0.0;
  info = LAPACKE_zgtcon('1', n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data(), anorm, &rcond);
  if (info != 0) throw Error(ErrorKind::numericalFailure, "zgtcon failed");
  // Diagonal of the inverse from forward and backward Schur pivots, O(n).
  // Falls back to full solves if an unpivoted pivot is tiny.
  const auto un = static_cast<std::size_t>(n);
  std::vector<cplx> f(un), g(un);
  const double tiny = 1e-8 * anorm;
  bool stable = true;
  for (std::size_t i = 0; i < un && stable; ++i) {
    const cplx t = z - bands.diag[i];
    f[i] = i == 0 ? t : t - bands.lower[i - 1] * bands.upper[i - 1] / f[i - 1];
    stable = std::abs(f[i]) > tiny;
  }
  for (std::size_t i = un; i-- > 0 && stable;) {
    const cplx t = z - bands.diag[i];
    g[i] = i + 1 == un ? t : t - bands.upper[i] * bands.lower[i] / g[i + 1];
    stable = std::abs(g[i]) > tiny;
  }
  if (stable) {
    cplx trace(0.0, 0.0);
    for (std::size_t i = 0; i < un; ++i) trace += 1.0 / (f[i] + g[i] - (z - bands.diag[i]));
    if (std::isfinite(std::abs(trace))) return {trace, rcond};
  }
  ComplexMatrix inv = ComplexMatrix::Identity(n, n);
  info = LAPACKE_zgttrs(LAPACK_COL_MAJOR, 'N', n, n, dl.data(), d.data(), du.data(), du2.data(),
                        ipiv.data(), inv.data(), n);
  if (info != 0) throw Error(ErrorKind::numericalFailure, "zgttrs failed");
  return {inv.diagonal().sum(), rcond};
}

ResolventTrace dense_trace(const DiscreteOperator& op, cplx z) {
  const lapack_int n = static_cast<lapack_int>(op.matrix.rows());
  ComplexMatrix lu = -op.matrix;
  lu.diagonal().array() += z;
  const double anorm = lu.cwiseAbs().colwise().sum().maxCoeff();
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu.data(), n, ipiv.data());
  if (info > 0) return {cplx(0.0, 0.0), 0.0};
  double rcond = 0.0;
  info = LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', n, lu.data(), n, anorm, &rcond);
  if (info != 0) throw Error(ErrorKind::numericalFailure, "zgecon failed");
  ComplexMatrix inv = ComplexMatrix::Identity(n, n);
  info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, n, lu.data(), n, ipiv.data(), inv.data(), n);
  if (info != 0) throw Error(ErrorKind::numericalFailure, "zgetrs failed");
  return {inv.diagonal().sum(), rcond};
}

}  // namespace

ResolventTrace resolvent_trace(const DiscreteOperator& op, cplx z) {
  if (op.matrix.rows() == 0) return {cplx(0.0, 0.0), 1.0};
  return op.tridiagonal ? tridiagonal_trace(op, z) : dense_trace(op, z);
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::invalidArgument, "quadrature needs at least one node");
  QuadratureRule q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  // Newton on P_n from the Tricomi initial guesses; symmetric pairs.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    q.nodes[lo] = -x;
    q.nodes[hi] = x;
    q.weights[lo] = w;
    q.weights[hi] = w;
  }
  if (n % 2 == 1) q.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return q;
}

}  // namespace capres::linalg
