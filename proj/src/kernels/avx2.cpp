#include <immintrin.h>

#include <cassert>
#include <cmath>

#include "capres/kernels/kernels.hpp"

// Two complex<double> per __m256d, interleaved (re0, im0, re1, im1).

namespace capres::kernels::avx2 {
namespace {

inline const double* dptr(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dptr(cplx* p) { return reinterpret_cast<double*>(p); }

inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(dptr(p)); }

// (a.re*b.re - a.im*b.im, a.im*b.re + a.re*b.im) lane-pairwise.
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_permute_pd(b, 0xF);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d broadcast_c(cplx z) { return _mm256_setr_pd(z.real(), z.imag(), z.real(), z.imag()); }

}  // namespace

double norm2(std::span<const cplx> v) {
  const std::size_t n = v.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d a = load2(v.data() + j);
    const __m256d b = load2(v.data() + j + 2);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; j < n; ++j) acc += v[j].real() * v[j].real() + v[j].imag() * v[j].imag();
  return acc;
}

double weighted_norm2(std::span<const cplx> v, std::span<const double> w) {
  assert(v.size() == w.size());
  const std::size_t n = v.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const __m256d a = load2(v.data() + j);
    const __m128d w2 = _mm_loadu_pd(w.data() + j);
    // (w0, w0, w1, w1)
    const __m256d ww = _mm256_permute4x64_pd(_mm256_castpd128_pd256(w2), 0x50);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(a, a), ww, acc);
  }
  double out = hsum(acc);
  for (; j < n; ++j) out += w[j] * (v[j].real() * v[j].real() + v[j].imag() * v[j].imag());
  return out;
}

void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y) {
  const std::size_t n = a.size();
  assert(x.size() == n && y.size() == n);
  if (n < 4) {
    scalar::tridiag_apply(a, x, y);
    return;
  }
  y[0] = a.diag[0] * x[0] + a.upper[0] * x[1];
  std::size_t i = 1;
  for (; i + 2 < n; i += 2) {
    __m256d r = cmul(load2(a.diag.data() + i), load2(x.data() + i));
    r = _mm256_add_pd(r, cmul(load2(a.lower.data() + i - 1), load2(x.data() + i - 1)));
    r = _mm256_add_pd(r, cmul(load2(a.upper.data() + i), load2(x.data() + i + 1)));
    _mm256_storeu_pd(dptr(y.data() + i), r);
  }
  for (; i + 1 < n; ++i) {
    y[i] = a.lower[i - 1] * x[i - 1] + a.diag[i] * x[i] + a.upper[i] * x[i + 1];
  }
  y[n - 1] = a.lower[n - 2] * x[n - 2] + a.diag[n - 1] * x[n - 1];
}

double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z) {
  const std::size_t n = a.size();
  assert(v.size() == n);
  if (n < 4) return scalar::tridiag_residual(a, v, z);

  auto edge = [&](std::size_t k) {
    cplx r = (a.diag[k] - z) * v[k];
    if (k > 0) r += a.lower[k - 1] * v[k - 1];
    if (k + 1 < n) r += a.upper[k] * v[k + 1];
    return r.real() * r.real() + r.imag() * r.imag();
  };

  const __m256d zz = broadcast_c(z);
  __m256d acc = _mm256_setzero_pd();
  double out = edge(0);
  std::size_t i = 1;
  for (; i + 2 < n; i += 2) {
    const __m256d d = _mm256_sub_pd(load2(a.diag.data() + i), zz);
    __m256d r = cmul(d, load2(v.data() + i));
    r = _mm256_add_pd(r, cmul(load2(a.lower.data() + i - 1), load2(v.data() + i - 1)));
    r = _mm256_add_pd(r, cmul(load2(a.upper.data() + i), load2(v.data() + i + 1)));
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  out += hsum(acc);
  for (; i < n; ++i) out += edge(i);
  return std::sqrt(out);
}

}  // namespace capres::kernels::avx2
