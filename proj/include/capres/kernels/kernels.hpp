#pragma once

// Data-parallel inner loops used across the library. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant; the public entry
// points pick one at runtime. Both variants are tested for equivalence.

#include <complex>
#include <span>
#include <string_view>

namespace capres::kernels {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Best ISA supported by this CPU and build.
Isa detected_isa();
/// ISA used by the dispatching entry points. Defaults to detected_isa(), unless
/// the environment variable CAPRES_ISA=scalar forces the reference path.
Isa active_isa();
/// Overrides the dispatch choice (tests, benchmarking). Requesting an ISA the
/// CPU lacks falls back to scalar.
void set_active_isa(Isa isa);

/// Tridiagonal matrix as three bands; lower[i] = A(i+1, i), upper[i] = A(i, i+1).
struct TridiagonalView {
  std::span<const cplx> lower;
  std::span<const cplx> diag;
  std::span<const cplx> upper;

  std::size_t size() const { return diag.size(); }
};

/// sum_j |v_j|^2
double norm2(std::span<const cplx> v);
/// sum_j w_j |v_j|^2
double weighted_norm2(std::span<const cplx> v, std::span<const double> w);
/// y = A x
void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y);
/// || A v - z v ||_2
double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z);

namespace scalar {
double norm2(std::span<const cplx> v);
double weighted_norm2(std::span<const cplx> v, std::span<const double> w);
void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y);
double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z);
}  // namespace scalar

#if defined(CAPRES_HAVE_AVX2)
namespace avx2 {
double norm2(std::span<const cplx> v);
double weighted_norm2(std::span<const cplx> v, std::span<const double> w);
void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y);
double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z);
}  // namespace avx2
#endif

}  // namespace capres::kernels
