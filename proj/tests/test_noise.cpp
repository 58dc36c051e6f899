// Field-noise model tests.  The frozen spectrum constants below were
// produced by an independent arbitrary-precision quadrature of the
// correlation-function transform (mpmath, 50-digit working precision) and
// pin the production quadrature to that oracle.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "rydnoise/noise.hpp"

using namespace rydnoise;

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_rel(double got, double want, double tol) {
  CHECK(std::abs(got - want) <= tol * std::abs(want));
}

// Independent closed-form route: expanding exp[(b/beta) e^{-beta tau}] turns
// the correlation function into an exact sum of decaying exponentials, so the
// spectrum is an exact sum of Lorentzians.  No quadrature involved.
//
// The series alternates and cancels by up to ~e^{2b/beta}; each Lorentzian
// decays like 1/omega^2 while the cancelled sum decays like 1/omega^4, so the
// roundoff floor eventually overtakes the value in the far tail.  abs_bound
// reports that floor (worst-case summation error, n terms of unit roundoff on
// the sum of magnitudes) so callers can widen the comparison honestly.
double ou_spectrum_series(double b, double beta, double omega,
                          double amp_sq = 1.0, double* abs_bound = nullptr) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double pref = amp_sq * std::exp(b / beta) / kPi;
  double total = 0.0, total_abs = 0.0, term = 1.0;
  int n_used = 0;
  for (int k = 0; k < 300; ++k) {
    const double g = b + k * beta;
    const double lor = g / (g * g + omega * omega);
    total += term * lor;
    total_abs += std::abs(term) * lor;
    n_used = k + 1;
    term *= (-b / beta) / (k + 1);
    if (std::abs(term) < 1e-30 && k > 5) break;
  }
  if (abs_bound) *abs_bound = n_used * eps * pref * total_abs;
  return pref * total;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("correlation: closed forms and domain") {
  const auto pdm = NoiseModel::make_pdm(1.0);
  CHECK(correlation(pdm, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  check_rel(correlation(pdm, 1.0), std::exp(-1.0), 1e-15);

  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  CHECK(correlation(ou, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // exp[-0.5 + 0.05 (1 - e^{-10})]
  check_rel(correlation(ou, 0.5), 0.637626704210, 1e-11);
  CHECK_THROWS_AS(correlation(ou, -0.1), std::domain_error);

  // |K| nonincreasing
  double prev = correlation(ou, 0.0);
  for (double tau = 0.05; tau < 3.0; tau += 0.05) {
    const double cur = correlation(ou, tau);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }

  const auto scaled = NoiseModel::make_ou(2.0, 10.0, 3.5);
  CHECK(correlation(scaled, 0.0) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("correlation: ensemble average over sampled phase paths") {
  // <e^{-i Phi(tau)}> over stationary-start paths must reproduce K(tau).
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const double dt = 0.005, tau = 0.5;
  const int n_steps = 100, m_paths = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < m_paths; ++p) {
    const auto path = sample_phase_path(ou, dt, n_steps, 7000 + p);
    const double c = std::cos(path.phases.back());
    sum += c;
    sum_sq += c * c;
  }
  const double mean = sum / m_paths;
  const double var = sum_sq / m_paths - mean * mean;
  const double se = std::sqrt(var / m_paths);
  CHECK(std::abs(mean - correlation(ou, tau)) <= 3.0 * se);
}

TEST_CASE("spectrum: PDM Lorentzian values") {
  const auto pdm = NoiseModel::make_pdm(1.0);
  check_rel(spectrum(pdm, 0.0), 1.0 / kPi, 1e-15);
  check_rel(spectrum(pdm, 1.0), 1.0 / (2.0 * kPi), 1e-15);
  const auto pdm2 = NoiseModel::make_pdm(2.0, 5.0);
  check_rel(spectrum(pdm2, 0.0), 5.0 / (2.0 * kPi), 1e-15);
}

TEST_CASE("spectrum: quadrature matches the arbitrary-precision oracle") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  check_rel(spectrum(ou, 0.0), 3.33843333896e-01, 1e-9);
  check_rel(spectrum(ou, 0.5), 2.669177871887e-01, 1e-9);
  check_rel(spectrum(ou, 1.0), 1.665301389176e-01, 1e-9);
  check_rel(spectrum(ou, 5.0), 1.212632953559e-02, 1e-9);
  check_rel(spectrum(ou, 20.0), 4.248375664141e-04, 1e-9);
  check_rel(spectrum(ou, 60.0), 9.167869578892e-06, 1e-8);
  check_rel(spectrum(ou, 200.0), 7.916787836703e-08, 1e-8);
  // 252 = switch boundary; the quadrature value there is 7 orders below the
  // integrand scale, so its accuracy is roundoff-limited.
  check_rel(spectrum(ou, 252.0), 3.147111826963e-08, 1e-7);
  // asymptotic-tail region
  check_rel(spectrum(ou, 300.0), 1.568360740015e-08, 2e-6);
  check_rel(spectrum(ou, 500.0), 2.035545562205e-09, 1e-7);
  check_rel(spectrum(ou, 1000.0), 1.272984584152e-10, 1e-8);
}

TEST_CASE("spectrum: exponential-series closed form agrees everywhere") {
  // Dual-route check across four cutoff regimes, spanning the quadrature
  // body, the switch point, and the asymptotic tail.
  for (auto [b, beta] : std::initializer_list<std::pair<double, double>>{
           {1.0, 20.0}, {1.0, 1.0}, {3.0, 1.0}, {10.0, 1.0}}) {
    const auto ou = NoiseModel::make_ou(b, beta, 1.3);
    const double top = 1e3 * (b + beta);
    for (int i = 0; i <= 40; ++i) {
      const double om = 1e-3 * b * std::pow(top / (1e-3 * b), i / 40.0);
      double bound = 0.0;
      const double want = ou_spectrum_series(b, beta, om, 1.3, &bound);
      // The oracle's own roundoff floor widens the allowance in the far tail,
      // where the cancelled Lorentzian series runs out of digits.
      CHECK(std::abs(spectrum(ou, om) - want) <= 5e-6 * std::abs(want) + bound);
    }
  }
}

TEST_CASE("spectrum: even in omega and nonnegative") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  for (double om : {0.3, 1.7, 12.0, 55.0, 300.0}) {
    const double sp = spectrum(ou, om);
    CHECK(sp > 0.0);
    CHECK(spectrum(ou, -om) == doctest::Approx(sp).epsilon(1e-14));
  }
}

TEST_CASE("spectrum: product approximation holds to 10% out to 10 beta") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  double worst = 0.0;
  for (int i = 0; i <= 60; ++i) {
    const double om = 200.0 * i / 60.0;
    const double ex = spectrum(ou, om);
    const double ap = spectrum_product_approx(ou, om);
    worst = std::max(worst, std::abs(ap - ex) / ex);
  }
  CHECK(worst <= 0.10);
}

TEST_CASE("spectrum: Lorentzian core shape to 1% inside half a bandwidth") {
  // Peak-normalized comparison: the overall amplitude carries a known
  // O(b/beta) offset, the core *shape* is what the Lorentzian captures.
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const double s0 = spectrum(ou, 0.0);
  for (int i = 0; i <= 20; ++i) {
    const double om = 0.5 * i / 20.0;
    const double shape = spectrum(ou, om) / s0;
    const double lor = 1.0 / (1.0 + om * om);
    CHECK(std::abs(shape - lor) / lor <= 0.01);
  }
}

TEST_CASE("spectrum: wide-cutoff limit collapses onto the Lorentzian") {
  const auto ou = NoiseModel::make_ou(1.0, 1000.0);
  const auto pdm = NoiseModel::make_pdm(1.0);
  for (int i = 0; i <= 10; ++i) {
    const double om = 5.0 * i / 10.0;
    const double rel =
        std::abs(spectrum(ou, om) - spectrum(pdm, om)) / spectrum(pdm, om);
    CHECK(rel <= 0.01);
  }
}

TEST_CASE("spectrum: finite-cutoff tail falls below the Lorentzian") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const auto pdm = NoiseModel::make_pdm(1.0);
  for (double om : {200.0, 400.0, 800.0}) {
    CHECK(spectrum(ou, om) < spectrum(pdm, om));
  }
}

TEST_CASE("tabulated spectrum: interpolation, range handling, counter") {
  std::vector<double> om, s;
  for (int i = -400; i <= 400; ++i) {
    om.push_back(0.05 * i);
    s.push_back(spectrum_lorentzian(1.0, 1.0, 0.05 * i));
  }
  const auto tab = NoiseModel::make_tabulated(om, s);
  check_rel(spectrum(tab, 0.0), 1.0 / kPi, 1e-15);        // node hit
  check_rel(spectrum(tab, 0.725), spectrum_lorentzian(1.0, 1.0, 0.725), 1e-3);
  CHECK(spectrum(tab, 100.0) == 0.0);
  CHECK(spectrum(tab, -3000.0) == 0.0);
  CHECK(tab.oor_counter->load() == 2);
}

TEST_CASE("effective bandwidth: exact for PDM, oracle value otherwise") {
  CHECK(effective_bandwidth(NoiseModel::make_pdm(2.0)) == 2.0);
  CHECK(effective_bandwidth(NoiseModel::make_pdm(1.0)) == 1.0);
  check_rel(effective_bandwidth(NoiseModel::make_ou(1.0, 20.0)), 0.953470847,
            1e-7);
}

TEST_CASE("normalization: integral of S recovers the mean square amplitude") {
  // Production path (panel quadrature + algebraic tail)...
  check_rel(spectrum_normalization(NoiseModel::make_pdm(1.5, 2.0)), 2.0, 1e-3);
  check_rel(spectrum_normalization(NoiseModel::make_ou(1.0, 20.0)), 1.0, 1e-3);
  // ...and the plain trapezoid oracle over [-40 beta, 40 beta].
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const double x_max = 40.0 * 20.0;
  const int n = 40000;
  double acc = 0.0;
  double prev = spectrum(ou, 0.0);
  for (int i = 1; i <= n; ++i) {
    // quadratic grid refines the core where the spectrum peaks
    const double x = x_max * std::pow(double(i) / n, 2.0);
    const double xp = x_max * std::pow(double(i - 1) / n, 2.0);
    const double cur = spectrum(ou, x);
    acc += 0.5 * (prev + cur) * (x - xp);
    prev = cur;
  }
  check_rel(2.0 * acc, 1.0, 1e-3);
}

TEST_CASE("phase paths: PDM increments are Wiener with variance 2 b dt") {
  const auto pdm = NoiseModel::make_pdm(1.0);
  const double dt = 0.01;
  const auto path = sample_phase_path(pdm, dt, 100000, 42);
  CHECK(path.phases[0] == 0.0);
  double var = 0.0;
  for (std::size_t k = 1; k < path.phases.size(); ++k) {
    const double inc = path.phases[k] - path.phases[k - 1];
    var += inc * inc;
  }
  var /= double(path.phases.size() - 1);
  check_rel(var, 2.0 * dt, 3.0 * std::sqrt(2.0 / 100000.0));
}

TEST_CASE("phase paths: PDM ensemble variance of Phi grows as 2 b t") {
  const auto pdm = NoiseModel::make_pdm(1.0);
  const double dt = 0.01;
  const int n = 50, m = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < m; ++p) {
    const auto path = sample_phase_path(pdm, dt, n, 1000 + p);
    sum += path.phases.back();
    sum_sq += path.phases.back() * path.phases.back();
  }
  const double var = sum_sq / m - (sum / m) * (sum / m);
  check_rel(var, 2.0 * dt * n, 3.0 * std::sqrt(2.0 / m));
}

TEST_CASE("phase paths: OU frequency stays stationary under the update") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const double dt = 0.001;  // 0.02/beta, keeps the discretization bias small
  const int n = 20, m = 4000;
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < m; ++p) {
    const auto path = sample_phase_path(ou, dt, n, 555 + p);
    const double phi = path.freq.back();
    sum += phi;
    sum_sq += phi * phi;
  }
  const double var = sum_sq / m - (sum / m) * (sum / m);
  check_rel(var, 20.0, 3.0 * std::sqrt(2.0 / m));
}

TEST_CASE("phase paths: determinism and validation") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const auto a = sample_phase_path(ou, 0.004, 64, 99);
  const auto b = sample_phase_path(ou, 0.004, 64, 99);
  CHECK(a.phases == b.phases);
  const auto c = sample_phase_path(ou, 0.004, 64, 100);
  CHECK(a.phases != c.phases);
  CHECK_THROWS_AS(sample_phase_path(ou, 0.2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_phase_path(ou, -1.0, 10, 1), std::invalid_argument);
}

TEST_CASE("spectral moment: PDM closed form against direct quadrature") {
  // ebar = 0 special value sqrt(b)/(2 pi), and the closed form itself
  check_rel(lambda_sp(NoiseModel::make_pdm(1.0), 0.0), std::sqrt(1.0) / (2.0 * kPi),
            1e-9);
  check_rel(lambda_sp_pdm_closed(1.0, 0.0), std::sqrt(1.0) / (2.0 * kPi), 1e-12);
  check_rel(lambda_sp(NoiseModel::make_pdm(4.0 * kPi * kPi), 0.0), 1.0, 1e-9);
  for (double r : {-5.0, -1.0, -0.3, 0.7, 2.0}) {
    const double b = 1.7;
    check_rel(lambda_sp(NoiseModel::make_pdm(b), r * b),
              lambda_sp_pdm_closed(b, r * b), 1e-6);
  }
  // amplitude independence
  check_rel(lambda_sp(NoiseModel::make_pdm(1.0, 9.0), -1.0),
            lambda_sp(NoiseModel::make_pdm(1.0, 1.0), -1.0), 1e-12);
}

TEST_CASE("spectrum table: interpolation error against direct evaluation") {
  const auto ou = NoiseModel::make_ou(1.0, 20.0);
  const SpectrumTable table(ou, 2.0e4);
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> ud(std::log(2e-4), std::log(1.0e4));
  for (int i = 0; i < 50; ++i) {
    const double om = std::exp(ud(rng));
    check_rel(table(om), spectrum(ou, om), 1e-5);
    CHECK(table(-om) == table(om));
  }
  // below-grid blend and beyond-grid power-law continuation
  check_rel(table(0.0), spectrum(ou, 0.0), 1e-9);
  check_rel(table(5e-5), spectrum(ou, 5e-5), 1e-6);
  check_rel(table(4.0e4), spectrum(ou, 4.0e4), 5e-2);
}

TEST_CASE("model validation rejects bad parameters") {
  CHECK_THROWS_AS(NoiseModel::make_pdm(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel::make_ou(1.0, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel::make_tabulated({0.0, -1.0}, {1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel::make_tabulated({0.0, 1.0}, {1.0, -1.0}),
                  std::invalid_argument);
}

}  // TEST_SUITE
