#include "rydnoise/asymptotics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "rydnoise/qdt.hpp"

namespace rydnoise {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Gamma(1/4) and Gamma(2/3); tgamma is not constexpr, so keep the literals.
constexpr double kGammaQuarter = 3.6256099082219083119;
constexpr double kGammaTwoThirds = 1.3541179394264004169;

using cplx = std::complex<double>;

// 24-point Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on the
// Legendre recurrence (machine precision, computed once).
struct Gauss24 {
  std::array<double, 24> x{};
  std::array<double, 24> w{};
  Gauss24() {
    constexpr int n = 24;
    for (int k = 0; k < n / 2; ++k) {
      double root = std::cos(kPi * (k + 0.75) / (n + 0.5));
      double deriv = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = root;
        for (int j = 2; j <= n; ++j) {
          const double p2 = ((2 * j - 1) * root * p1 - (j - 1) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        deriv = n * (root * p1 - p0) / (root * root - 1.0);
        const double step = p1 / deriv;
        root -= step;
        if (std::abs(step) < 1e-15) break;
      }
      const double weight = 2.0 / ((1.0 - root * root) * deriv * deriv);
      x[k] = -root;
      x[n - 1 - k] = root;
      w[k] = weight;
      w[n - 1 - k] = weight;
    }
  }
};

const Gauss24& gauss24() {
  static const Gauss24 rule;
  return rule;
}

// I(zeta) = Integral dx / (1 - i zeta (x^2 + x^4)) over the real line, closed
// in the upper half plane. The quartic denominator has root pairs
// x^2 = (-1 +/- sqrt(1 - 4i/zeta)) / 2; each upper-half root x0 contributes
// a residue 2 pi i / q'(x0) with q'(x) = -i zeta (2x + 4x^3).
cplx inner_integral(cplx zeta) {
  const cplx i(0.0, 1.0);
  const cplx disc = std::sqrt(1.0 - 4.0 * i / zeta);
  cplx total = 0.0;
  for (const cplx& square : {0.5 * (disc - 1.0), 0.5 * (-disc - 1.0)}) {
    cplx x = std::sqrt(square);
    if (x.imag() < 0.0) x = -x;
    total += 2.0 * kPi * i / (-i * zeta * (2.0 * x + 4.0 * x * x * x));
  }
  return total;
}

}  // namespace

double scaling_fprime(double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("scaling_fprime: tau must be positive");
  }
  // Rotate the frequency contour to zeta = u^4 e^{-i pi/4}: the phase factor
  // becomes a pure decay e^{-u^4 tau / sqrt(2)} and the u^4 substitution
  // flattens the integrable 1/zeta endpoint, d zeta / zeta = 4 du / u.
  // No singularity of 1/I obstructs the rotation.
  const cplx i(0.0, 1.0);
  const cplx phase = std::polar(1.0, -kPi / 4.0);
  const double u_max = std::pow(52.0 / tau, 0.25);  // tail factor < 1e-15
  const auto& g = gauss24();

  // One linear head panel [0, u_max * 1e-6], then geometric panels up to
  // u_max (the integrand behaves like a power of u near 0, which the
  // geometric subdivision resolves uniformly).
  const double head = u_max * 1e-6;
  const double ratio = std::pow(1e6, 1.0 / 59.0);
  double total = 0.0;
  double lo = 0.0;
  double hi = head;
  for (int panel = 0; panel < 60; ++panel) {
    const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int k = 0; k < 24; ++k) {
      const double u = mid + half * g.x[k];
      const cplx zeta = (u * u) * (u * u) * phase;
      const cplx val = 4.0 / u * std::exp(-i * zeta * tau) / inner_integral(zeta);
      acc += g.w[k] * val.imag();
    }
    total -= half * acc;
    lo = hi;
    hi *= ratio;
  }
  return total;
}

double scaling_fprime_small(double tau) { return 1.0 / std::sqrt(kPi * tau); }

double scaling_fprime_large(double tau) {
  return kGammaQuarter / kPi * std::pow(tau, -0.25);
}

double scaling_f_small(double tau) { return 2.0 * std::sqrt(tau / kPi); }

double scaling_f_large(double tau) {
  return 4.0 * kGammaQuarter / (3.0 * kPi) * std::pow(tau, 0.75);
}

double scaling_crossover_tau() {
  const double root = std::sqrt(kPi) / kGammaQuarter;
  return (root * root) * (root * root);
}

namespace {

// Dense table of f on tau in [1e-6, 1e4]: analytic square-root head at the
// first node, then cumulative trapezoid of f' tau in log tau. 1201 nodes keep
// the quadrature bias below ~1e-9 relative.
struct ScalingTable {
  static constexpr int kCount = 1201;
  static constexpr double kTauLo = 1e-6;
  static constexpr double kTauHi = 1e4;
  std::vector<double> log_tau;
  std::vector<double> log_f;
  double f_hi = 0.0;

  ScalingTable() {
    log_tau.resize(kCount);
    log_f.resize(kCount);
    const double step =
        (std::log(kTauHi) - std::log(kTauLo)) / (kCount - 1);
    std::vector<double> flux(kCount);  // f'(tau) * tau
    for (int k = 0; k < kCount; ++k) {
      log_tau[k] = std::log(kTauLo) + k * step;
      const double tau = std::exp(log_tau[k]);
      flux[k] = scaling_fprime(tau) * tau;
    }
    double f = scaling_f_small(kTauLo);
    log_f[0] = std::log(f);
    for (int k = 1; k < kCount; ++k) {
      f += 0.5 * (log_tau[k] - log_tau[k - 1]) * (flux[k - 1] + flux[k]);
      log_f[k] = std::log(f);
    }
    f_hi = f;
  }
};

const ScalingTable& scaling_table() {
  static const ScalingTable table;
  return table;
}

}  // namespace

double scaling_f(double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("scaling_f: tau must be positive");
  }
  const auto& table = scaling_table();
  if (tau <= ScalingTable::kTauLo) return scaling_f_small(tau);
  if (tau >= ScalingTable::kTauHi) {
    // Continue with the exact integral of the leading large-tau derivative;
    // the neglected correction to f' is below 3e-3 relative at the boundary
    // and decays from there.
    return table.f_hi + scaling_f_large(tau) - scaling_f_large(ScalingTable::kTauHi);
  }
  const double lt = std::log(tau);
  const auto it = std::upper_bound(table.log_tau.begin(), table.log_tau.end(), lt);
  const std::size_t j = static_cast<std::size_t>(it - table.log_tau.begin());
  const double t0 = table.log_tau[j - 1], t1 = table.log_tau[j];
  const double frac = (lt - t0) / (t1 - t0);
  // log-log interpolation: exact on power-law stretches, monotone always.
  return std::exp(table.log_f[j - 1] * (1.0 - frac) + table.log_f[j] * frac);
}

double tail_survival(double t_gamma, double sbar, double rate_ratio) {
  return std::cbrt(sbar) * kGammaTwoThirds / (3.0 * rate_ratio) *
         std::pow(t_gamma, -2.0 / 3.0);
}

double tail_ground_population(double t_gamma, double sbar, double rate_ratio) {
  // Gamma(5/3)/3 = 2 Gamma(2/3)/9, which makes the ionization flux balance
  // d(1-P)/dt = -Gamma_up rho_gg an identity.
  return 2.0 * kGammaTwoThirds / 9.0 * std::cbrt(sbar) /
         (rate_ratio * rate_ratio) * std::pow(t_gamma, -5.0 / 3.0);
}

double tail_crossover_time(double sbar, double rate_ratio) {
  const double c = kGammaTwoThirds / rate_ratio;
  return std::sqrt(c * c * c * (8.0 / 27.0) * sbar);
}

double plateau_ground_population(double t_gamma, double lambda_sp) {
  return (std::exp(-t_gamma) + lambda_sp * std::exp(lambda_sp * t_gamma)) /
         (1.0 + lambda_sp);
}

double plateau_ionization(double t_gamma, double lambda_sp, double rate_ratio) {
  return rate_ratio * (std::exp(lambda_sp * t_gamma) - std::exp(-t_gamma)) /
         (1.0 + lambda_sp);
}

double BelowThresholdMap::ground_population(double t_au) const {
  return ground_scale * scaling_fprime(tau_at(t_au));
}

double BelowThresholdMap::ionization(double t_au) const {
  return ion_scale * scaling_f(tau_at(t_au));
}

BelowThresholdMap below_threshold_map(double mean_energy, double beta,
                                      double b, double gamma) {
  if (!(mean_energy < 0.0)) {
    throw std::invalid_argument(
        "below_threshold_map: mean_energy must be negative");
  }
  if (!(beta > 0.0) || !(b > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument(
        "below_threshold_map: beta, b, gamma must be positive");
  }
  const double period = kepler_period(mean_energy);
  const double edge_ratio = beta / std::abs(mean_energy);
  BelowThresholdMap map;
  map.tau_rate = 2.0 * gamma * b / (period * beta * beta);
  map.ground_scale = 2.0 / (period * beta);
  map.ion_scale = (edge_ratio - std::atan(edge_ratio)) / kPi;
  return map;
}

}  // namespace rydnoise
