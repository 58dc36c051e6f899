// SIMD/scalar equivalence: every vectorized kernel must reproduce the scalar
// reference on random data across sizes that exercise vector bodies, tails,
// and the rotation re-sync boundary.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "rydnoise/kernels.hpp"

namespace k = rydnoise::kernels;
using cplx = std::complex<double>;

namespace {

std::mt19937_64 rng(0x5eed5eedULL);

std::vector<cplx> random_cvec(std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return v;
}

std::vector<double> random_rvec(std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> ud(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = ud(rng);
  return v;
}

void check_close(cplx a, cplx b, double tol) {
  const double scale = std::max(1.0, std::max(std::abs(a), std::abs(b)));
  CHECK(std::abs(a - b) <= tol * scale);
}

const std::size_t sizes[] = {0, 1, 2, 3, 5, 8, 33, 1023, 1024, 1025, 4097};

}  // namespace

#ifdef RYDNOISE_HAVE_AVX2
#define KERNEL_PAIR_TESTS_ENABLED \
  (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
#else
#define KERNEL_PAIR_TESTS_ENABLED false
#endif

TEST_SUITE("kernels") {

TEST_CASE("dispatch reports a valid instruction set") {
  const std::string name = k::isa_name();
  CHECK((name == "avx2" || name == "scalar"));
}

TEST_CASE("cmul_inplace: vector path matches scalar reference") {
  if (!KERNEL_PAIR_TESTS_ENABLED) return;
#ifdef RYDNOISE_HAVE_AVX2
  for (std::size_t n : sizes) {
    auto y0 = random_cvec(n);
    auto p = random_cvec(n);
    auto y1 = y0;
    k::scalar::cmul_inplace(y0.data(), p.data(), n);
    k::avx2::cmul_inplace(y1.data(), p.data(), n);
    for (std::size_t i = 0; i < n; ++i) check_close(y0[i], y1[i], 1e-15);
  }
#endif
}

TEST_CASE("conj_dot: vector path matches scalar reference") {
  if (!KERNEL_PAIR_TESTS_ENABLED) return;
#ifdef RYDNOISE_HAVE_AVX2
  for (std::size_t n : sizes) {
    auto a = random_cvec(n);
    auto b = random_cvec(n);
    check_close(k::scalar::conj_dot(a.data(), b.data(), n),
                k::avx2::conj_dot(a.data(), b.data(), n), 1e-12);
  }
#endif
}

TEST_CASE("conj_dot: conjugate symmetry and norm positivity") {
  auto a = random_cvec(257);
  auto b = random_cvec(257);
  const cplx ab = k::conj_dot(a.data(), b.data(), a.size());
  const cplx ba = k::conj_dot(b.data(), a.data(), a.size());
  check_close(ab, std::conj(ba), 1e-13);
  const cplx aa = k::conj_dot(a.data(), a.data(), a.size());
  CHECK(aa.real() > 0.0);
  CHECK(std::abs(aa.imag()) <= 1e-12 * aa.real());
}

TEST_CASE("axpy: vector path matches scalar reference") {
  if (!KERNEL_PAIR_TESTS_ENABLED) return;
#ifdef RYDNOISE_HAVE_AVX2
  for (std::size_t n : sizes) {
    const cplx alpha{0.3, -1.7};
    auto x = random_cvec(n);
    auto y0 = random_cvec(n);
    auto y1 = y0;
    k::scalar::axpy(alpha, x.data(), y0.data(), n);
    k::avx2::axpy(alpha, x.data(), y1.data(), n);
    for (std::size_t i = 0; i < n; ++i) check_close(y0[i], y1[i], 1e-14);
  }
#endif
}

TEST_CASE("arrow_sums: vector path matches scalar reference") {
  if (!KERNEL_PAIR_TESTS_ENABLED) return;
#ifdef RYDNOISE_HAVE_AVX2
  for (std::size_t n : sizes) {
    auto R = random_rvec(n, 1e-8, 5.0);
    auto m = random_rvec(n, 1.0, 40.0);
    auto r = random_rvec(n, -1.0, 1.0);
    double A0, B0, A1, B1;
    k::scalar::arrow_sums(R.data(), m.data(), r.data(), 0.37, n, A0, B0);
    k::avx2::arrow_sums(R.data(), m.data(), r.data(), 0.37, n, A1, B1);
    CHECK(std::abs(A0 - A1) <= 1e-12 * std::max(1.0, std::abs(A0)));
    CHECK(std::abs(B0 - B1) <= 1e-12 * std::max(1.0, std::abs(B0)));
  }
#endif
}

TEST_CASE("sigma_sum and pole_sum: vector paths match scalar reference") {
  if (!KERNEL_PAIR_TESTS_ENABLED) return;
#ifdef RYDNOISE_HAVE_AVX2
  const cplx zs[] = {{0.0, 1e-3}, {0.5, 0.05}, {-2.0, 1.0}, {0.0, -0.2}};
  for (std::size_t n : sizes) {
    auto R = random_rvec(n, 1e-9, 2.0);
    auto m = random_rvec(n, 1.0, 30.0);
    auto e = random_rvec(n, -5.0, -1e-4);
    for (cplx z : zs) {
      check_close(k::scalar::sigma_sum(R.data(), m.data(), z, n),
                  k::avx2::sigma_sum(R.data(), m.data(), z, n), 1e-12);
      check_close(k::scalar::pole_sum(m.data(), e.data(), z, n),
                  k::avx2::pole_sum(m.data(), e.data(), z, n), 1e-12);
    }
  }
#endif
}

TEST_CASE("pole_sum: reproduces a hand-computed two-pole value") {
  const double w[] = {2.0, 3.0};
  const double e[] = {-1.0, 1.0};
  const cplx z{0.0, 1.0};  // 2/(i+1) + 3/(i-1) = (1-i) + (-3-3i)/2
  check_close(k::pole_sum(w, e, z, 2), cplx{-0.5, -2.5}, 1e-15);
}

TEST_CASE("phased_sum: matches direct trigonometric evaluation") {
  for (std::size_t n : {std::size_t(1), std::size_t(7), std::size_t(1024),
                        std::size_t(5000), std::size_t(100000)}) {
    auto c = random_cvec(n);
    const double phi0 = 0.4321, dphi = 0.0137;
    cplx direct{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double phi = phi0 + static_cast<double>(j) * dphi;
      direct += c[j] * cplx{std::cos(phi), std::sin(phi)};
    }
    check_close(k::scalar::phased_sum(c.data(), n, phi0, dphi), direct, 5e-11);
#ifdef RYDNOISE_HAVE_AVX2
    if (KERNEL_PAIR_TESTS_ENABLED)
      check_close(k::avx2::phased_sum(c.data(), n, phi0, dphi), direct, 5e-11);
#endif
  }
}

}  // TEST_SUITE
