#include <cassert>
#include <cmath>

#include "capres/kernels/kernels.hpp"

namespace capres::kernels::scalar {

double norm2(std::span<const cplx> v) {
  double acc = 0.0;
  for (const cplx& x : v) acc += x.real() * x.real() + x.imag() * x.imag();
  return acc;
}

double weighted_norm2(std::span<const cplx> v, std::span<const double> w) {
  assert(v.size() == w.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    acc += w[j] * (v[j].real() * v[j].real() + v[j].imag() * v[j].imag());
  }
  return acc;
}

void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y) {
  const std::size_t n = a.size();
  assert(x.size() == n && y.size() == n);
  if (n == 0) return;
  if (n == 1) {
    y[0] = a.diag[0] * x[0];
    return;
  }
  y[0] = a.diag[0] * x[0] + a.upper[0] * x[1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    y[i] = a.lower[i - 1] * x[i - 1] + a.diag[i] * x[i] + a.upper[i] * x[i + 1];
  }
  y[n - 1] = a.lower[n - 2] * x[n - 2] + a.diag[n - 1] * x[n - 1];
}

double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z) {
  const std::size_t n = a.size();
  assert(v.size() == n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx r = (a.diag[i] - z) * v[i];
    if (i > 0) r += a.lower[i - 1] * v[i - 1];
    if (i + 1 < n) r += a.upper[i] * v[i + 1];
    acc += r.real() * r.real() + r.imag() * r.imag();
  }
  return std::sqrt(acc);
}

}  // namespace capres::kernels::scalar
