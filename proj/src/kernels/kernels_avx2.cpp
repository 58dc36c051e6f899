// AVX2+FMA variants.  std::complex<double> arrays are contiguous (re, im)
// pairs, so one __m256d carries two complex values; the complex multiply
// uses the movedup/permute/fmaddsub idiom.  Remainders fall through to the
// scalar reference.  This translation unit is compiled with -mavx2 -mfma and
// only reached after a runtime CPU check.

#include "rydnoise/kernels.hpp"

#ifdef RYDNOISE_HAVE_AVX2

#include <immintrin.h>

#include <cmath>

namespace rydnoise::kernels::avx2 {

namespace {

// a*b for two packed complex doubles per vector
inline __m256d cplx_mul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);           // [b0.re b0.re b1.re b1.re]
  const __m256d b_im = _mm256_permute_pd(b, 0b1111);   // [b0.im b0.im b1.im b1.im]
  const __m256d a_sw = _mm256_permute_pd(a, 0b0101);   // [a0.im a0.re a1.im a1.re]
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Sum the two packed complex values of v into one complex.
inline kernels::cplx hsum_cplx(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  alignas(16) double out[2];
  _mm_store_pd(out, s);
  return {out[0], out[1]};
}

}  // namespace

void cmul_inplace(cplx* y, const cplx* p, std::size_t n) {
  auto* yd = reinterpret_cast<double*>(y);
  const auto* pd = reinterpret_cast<const double*>(p);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vy = _mm256_loadu_pd(yd + 2 * i);
    const __m256d vp = _mm256_loadu_pd(pd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, cplx_mul(vy, vp));
  }
  if (i < n) y[i] *= p[i];
}

cplx conj_dot(const cplx* a, const cplx* b, std::size_t n) {
  // conj(a)*b:  re = a.re*b.re + a.im*b.im,  im = a.re*b.im - a.im*b.re
  const auto* ad = reinterpret_cast<const double*>(a);
  const auto* bd = reinterpret_cast<const double*>(b);
  __m256d acc_re = _mm256_setzero_pd();  // pairwise products summing to re
  __m256d acc_im = _mm256_setzero_pd();  // [a.im*b.re, a.re*b.im] pairs
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(ad + 2 * i);
    const __m256d vb = _mm256_loadu_pd(bd + 2 * i);
    acc_re = _mm256_fmadd_pd(va, vb, acc_re);
    acc_im = _mm256_fmadd_pd(_mm256_permute_pd(va, 0b0101), vb, acc_im);
  }
  double re = hsum(acc_re);
  // im pairs are [-(a.im*b.re) + (a.re*b.im)]: negate even lanes, then sum
  const __m256d sign = _mm256_set_pd(1.0, -1.0, 1.0, -1.0);
  double im = hsum(_mm256_mul_pd(acc_im, sign));
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  auto* yd = reinterpret_cast<double*>(y);
  const auto* xd = reinterpret_cast<const double*>(x);
  const __m256d a_re = _mm256_set1_pd(alpha.real());
  const __m256d a_im = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(xd + 2 * i);
    const __m256d vy = _mm256_loadu_pd(yd + 2 * i);
    const __m256d x_sw = _mm256_permute_pd(vx, 0b0101);
    const __m256d prod = _mm256_fmaddsub_pd(vx, a_re, _mm256_mul_pd(x_sw, a_im));
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(vy, prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void arrow_sums(const double* R, const double* m, const double* r, double h,
                std::size_t n, double& A, double& B) {
  const __m256d vh = _mm256_set1_pd(h);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d va = _mm256_setzero_pd(), vb = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vR = _mm256_loadu_pd(R + i);
    const __m256d vm = _mm256_loadu_pd(m + i);
    const __m256d vr = _mm256_loadu_pd(r + i);
    const __m256d f = _mm256_div_pd(_mm256_mul_pd(vm, vR),
                                    _mm256_fmadd_pd(vh, vR, one));
    va = _mm256_fmadd_pd(f, vr, va);
    vb = _mm256_fmadd_pd(f, vR, vb);
  }
  double a = hsum(va), b = hsum(vb);
  for (; i < n; ++i) {
    const double f = m[i] * R[i] / (1.0 + h * R[i]);
    a += f * r[i];
    b += f * R[i];
  }
  A = a;
  B = b;
}

cplx sigma_sum(const double* R, const double* m, cplx z, std::size_t n) {
  const double x = z.real(), y = z.imag();
  const __m256d vy = _mm256_set1_pd(y);
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vx2 = _mm256_set1_pd(x * x);
  __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vR = _mm256_loadu_pd(R + i);
    const __m256d vm = _mm256_loadu_pd(m + i);
    const __m256d dr = _mm256_add_pd(vR, vy);
    const __m256d den = _mm256_fmadd_pd(dr, dr, vx2);
    const __m256d w = _mm256_div_pd(_mm256_mul_pd(vm, vR), den);
    acc_re = _mm256_fmadd_pd(w, dr, acc_re);
    acc_im = _mm256_fmadd_pd(w, vx, acc_im);
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; i < n; ++i) {
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
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vy2 = _mm256_set1_pd(y * y);
  const __m256d vy = _mm256_set1_pd(y);
  __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ve = _mm256_loadu_pd(e + i);
    const __m256d vw = _mm256_loadu_pd(w + i);
    const __m256d dr = _mm256_sub_pd(vx, ve);
    const __m256d den = _mm256_fmadd_pd(dr, dr, vy2);
    const __m256d q = _mm256_div_pd(vw, den);
    acc_re = _mm256_fmadd_pd(q, dr, acc_re);
    acc_im = _mm256_fmadd_pd(q, vy, acc_im);
  }
  double re = hsum(acc_re), im = -hsum(acc_im);
  for (; i < n; ++i) {
    const double dr = x - e[i];
    const double q = w[i] / (dr * dr + y * y);
    re += q * dr;
    im -= q * y;
  }
  return {re, im};
}

cplx phased_sum(const cplx* c, std::size_t n, double phi0, double dphi) {
  // Four independent rotators advanced by e^{4i*dphi}, re-synchronized on the
  // same 1024-term cadence as the scalar path.
  constexpr std::size_t resync = 1024;
  const auto* cd = reinterpret_cast<const double*>(c);
  const cplx s4 = {std::cos(4.0 * dphi), std::sin(4.0 * dphi)};
  const __m256d step4 = _mm256_set_pd(s4.imag(), s4.real(), s4.imag(), s4.real());
  auto rot_pair = [&](std::size_t j) {
    const double p0 = phi0 + static_cast<double>(j) * dphi;
    const double p1 = p0 + dphi;
    return _mm256_set_pd(std::sin(p1), std::cos(p1), std::sin(p0), std::cos(p0));
  };
  __m256d acc_a = _mm256_setzero_pd(), acc_b = _mm256_setzero_pd();
  __m256d rot_a = rot_pair(0), rot_b = rot_pair(2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    if (i % resync == 0 && i != 0) {
      rot_a = rot_pair(i);
      rot_b = rot_pair(i + 2);
    }
    const __m256d ca = _mm256_loadu_pd(cd + 2 * i);
    const __m256d cb = _mm256_loadu_pd(cd + 2 * i + 4);
    acc_a = _mm256_add_pd(acc_a, cplx_mul(ca, rot_a));
    acc_b = _mm256_add_pd(acc_b, cplx_mul(cb, rot_b));
    rot_a = cplx_mul(rot_a, step4);
    rot_b = cplx_mul(rot_b, step4);
  }
  cplx acc = hsum_cplx(_mm256_add_pd(acc_a, acc_b));
  for (; i < n; ++i) {
    const double phi = phi0 + static_cast<double>(i) * dphi;
    acc += c[i] * cplx{std::cos(phi), std::sin(phi)};
  }
  return acc;
}

}  // namespace rydnoise::kernels::avx2

#endif  // RYDNOISE_HAVE_AVX2
