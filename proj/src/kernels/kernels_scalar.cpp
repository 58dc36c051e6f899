// Scalar reference implementations: the ground truth the SIMD variants are
// equivalence-tested against.  Keep them simple enough to audit at a glance.

#include "rydnoise/kernels.hpp"

#include <cmath>

namespace rydnoise::kernels::scalar {

void cmul_inplace(cplx* y, const cplx* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= p[i];
}

cplx conj_dot(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = m[i] * R[i] / (1.0 + h * R[i]);
    a += f * r[i];
    b += f * R[i];
  }
  A = a;
  B = b;
}

cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n) {
  // m*R/(R - iz) with z = x + iy:  denominator (R + y) - ix
  const double x = z.real(), y = z.imag();
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = R[i] + y;
    const double inv = 1.0 / (dr * dr + x * x);
    const double w = m[i] * R[i] * inv;
    re += w * dr;
    im += w * x;
  }
  return {re, im};
}

cplx pole_sum(const double* w, const double* e, cplx z, std::size_t n) {
  const double x = z.real(), y = z.imag();
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = x - e[i];
    const double inv = w[i] / (dr * dr + y * y);
    re += inv * dr;
    im -= inv * y;
  }
  return {re, im};
}

cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi) {
  // Rotation recurrence with periodic re-synchronization: a bare recurrence
  // accumulates O(n*eps) phase drift, a fresh sincos every 1024 terms caps it.
  constexpr std::size_t resync = 1024;
  const cplx step{std::cos(dphi), std::sin(dphi)};
  cplx acc{0.0, 0.0};
  cplx rot{std::cos(phi0), std::sin(phi0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (i % resync == 0 && i != 0) {
      const double phi = phi0 + static_cast<double>(i) * dphi;
      rot = {std::cos(phi), std::sin(phi)};
    }
    acc += c[i] * rot;
    rot *= step;
  }
  return acc;
}

}  // namespace rydnoise::kernels::scalar
