// Runtime instruction-set selection.  Detection happens once; the
// RYDNOISE_ISA environment variable forces a specific path (used by the
// equivalence tests and as an escape hatch on misdetecting machines).

#include "rydnoise/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rydnoise::kernels {

namespace {

Isa detect() {
#ifdef RYDNOISE_HAVE_AVX2
  if (const char* env = std::getenv("RYDNOISE_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0) return Isa::avx2;
  }
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Isa::avx2;
#endif
  return Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

const char* isa_name() {
  return active_isa() == Isa::avx2 ? "avx2" : "scalar";
}

#ifdef RYDNOISE_HAVE_AVX2
#define RYDNOISE_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define RYDNOISE_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void cmul_inplace(cplx* y, const cplx* p, std::size_t n) {
  RYDNOISE_DISPATCH(cmul_inplace, y, p, n);
}

cplx conj_dot(const cplx* a, const cplx* b, std::size_t n) {
  return RYDNOISE_DISPATCH(conj_dot, a, b, n);
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  RYDNOISE_DISPATCH(axpy, alpha, x, y, n);
}

void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B) {
  RYDNOISE_DISPATCH(arrow_sums, R, m, r, h, n, A, B);
}

cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n) {
  return RYDNOISE_DISPATCH(sigma_sum, R, m, z, n);
}

cplx pole_sum(const double* w, const double* e, cplx z, std::size_t n) {
  return RYDNOISE_DISPATCH(pole_sum, w, e, z, n);
}

cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi) {
  return RYDNOISE_DISPATCH(phased_sum, c, n, phi0, dphi);
}

}  // namespace rydnoise::kernels
