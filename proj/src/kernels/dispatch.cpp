#include <atomic>
#include <cstdlib>
#include <cstring>

#include "capres/kernels/kernels.hpp"

namespace capres::kernels {
namespace {

Isa initial_isa() {
  const char* env = std::getenv("CAPRES_ISA");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
#if defined(CAPRES_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  active().store(isa, std::memory_order_relaxed);
}

#if defined(CAPRES_HAVE_AVX2)
#define CAPRES_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define CAPRES_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double norm2(std::span<const cplx> v) { return CAPRES_DISPATCH(norm2, v); }

double weighted_norm2(std::span<const cplx> v, std::span<const double> w) {
  return CAPRES_DISPATCH(weighted_norm2, v, w);
}

void tridiag_apply(const TridiagonalView& a, std::span<const cplx> x, std::span<cplx> y) {
  CAPRES_DISPATCH(tridiag_apply, a, x, y);
}

double tridiag_residual(const TridiagonalView& a, std::span<const cplx> v, cplx z) {
  return CAPRES_DISPATCH(tridiag_residual, a, v, z);
}

#undef CAPRES_DISPATCH

}  // namespace capres::kernels
