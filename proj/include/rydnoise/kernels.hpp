#pragma once
// Hot inner-loop primitives with runtime-dispatched SIMD variants.
//
// Every kernel has a scalar reference implementation and (on x86-64 with
// AVX2+FMA) a vectorized twin; the dispatcher picks one per process at first
// use.  The environment variable RYDNOISE_ISA=scalar|avx2 overrides detection,
// which the equivalence tests use to exercise both paths on the same machine.

#include <complex>
#include <cstddef>

namespace rydnoise::kernels {

enum class Isa { scalar, avx2 };

// Instruction set actually in use (resolved once, thread-safe).
Isa active_isa();
const char* isa_name();

using cplx = std::complex<double>;

// y[i] *= p[i]  (elementwise complex multiply; diagonal propagator advance)
void cmul_inplace(cplx* y, const cplx* p, std::size_t n);

// sum_i conj(a[i]) * b[i]
cplx conj_dot(const cplx* a, const cplx* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n);

// Coupled sums of an arrow-structured implicit solve step:
//   A = sum_i m[i] * R[i] * r[i] / (1 + h*R[i])
//   B = sum_i m[i] * R[i] * R[i] / (1 + h*R[i])
// (m = level multiplicities, R = transfer rates, r = stage right-hand side)
void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B);

// sum_i m[i] * R[i] / (R[i] - i z)   (rate-comb response function)
cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n);

// sum_i w[i] / (z - e[i])   (weighted resolvent over a set of real poles)
cplx pole_sum(const double* w, const double* e, cplx z, std::size_t n);

// sum_j c[j] * exp(i*(phi0 + j*dphi))   (uniform-grid oscillatory sum;
// evaluated by rotation recurrence, re-synchronized against drift)
cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi);

// Each instruction set exports the same entry points; the unqualified
// functions above forward through a per-ISA table.
namespace scalar {
void cmul_inplace(cplx* y, const cplx* p, std::size_t n);
cplx conj_dot(const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n);
void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B);
cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n);
cplx pole_sum(const double* w, const double* e, cplx z, std::size_t n);
cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi);
}  // namespace scalar

#ifdef RYDNOISE_HAVE_AVX2
namespace avx2 {
void cmul_inplace(cplx* y, const cplx* p, std::size_t n);
cplx conj_dot(const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n);
void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B);
cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n);
cplx pole_sum(const double* w, const double* e, cplx z, std::size_t n);
cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi);
}  // namespace avx2
#endif

}  // namespace rydnoise::kernels
