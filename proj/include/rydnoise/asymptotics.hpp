#pragma once

#include <stdexcept>

// Closed-form regime laws for the slow depletion of a weakly bound electron
// under a noisy resonant drive, plus the universal scaling function that
// describes ionization when the line center sits below threshold.
//
// Unit conventions. The microscopic inputs (threshold spectral density sbar,
// bandwidths, binding energy) are atomic-unit quantities; times handed to the
// tail and plateau laws are measured in units of the golden-rule lifetime,
// i.e. the arguments named t_gamma are gamma * t. The below-threshold map
// works directly in atomic units.

namespace rydnoise {

// ---------------------------------------------------------------------------
// Universal below-threshold scaling function f(tau).
//
// When the drive is centered below the continuum edge, ionization proceeds by
// rare spectral excursions and all microscopic parameters collapse into a
// single dimensionless time tau. The survival dynamics follow
//
//     f'(tau) = -Im Integral_0^inf (dzeta / zeta) e^{-i zeta tau} / I(zeta),
//     I(zeta) = Integral_{-inf}^{inf} dx / (1 - i zeta (x^2 + x^4)),
//
// with f(0) = 0. f' decays like 1/sqrt(pi tau) for small tau (free
// square-root relaxation) and like (Gamma(1/4)/pi) tau^{-1/4} once the
// quartic term of the effective potential dominates.

// d f / d tau by non-oscillatory contour quadrature. Accurate to ~1e-10
// (relative) over tau in [1e-8, 1e8]. Throws std::invalid_argument for
// tau <= 0.
double scaling_fprime(double tau);

// f(tau) = Integral_0^tau f'(s) ds via a cached dense table on
// tau in [1e-6, 1e4] (log-log interpolated); outside that range the
// asymptotic laws continue the table smoothly. Throws for tau <= 0.
double scaling_f(double tau);

// Leading asymptotes; the derivative laws cross at
// tau* = (sqrt(pi) / Gamma(1/4))^4 ~ 0.0571 (the integrated laws at
// (3/2)^4 tau*).
double scaling_fprime_small(double tau);  // 1 / sqrt(pi tau)
double scaling_fprime_large(double tau);  // (Gamma(1/4) / pi) tau^{-1/4}
double scaling_f_small(double tau);       // 2 sqrt(tau / pi)
double scaling_f_large(double tau);       // (4 Gamma(1/4) / (3 pi)) tau^{3/4}
double scaling_crossover_tau();

// ---------------------------------------------------------------------------
// Long-time algebraic tail (drive centered on the bound comb).
//
// Once the easily ionized band is exhausted, survival is carried by levels
// far from resonance whose rates fall off as the cube of the detuning. With
// sbar the noise spectral density at threshold (atomic units) and
// rate_ratio = Gamma_up / gamma the prompt-ionization fraction, the laws are
//
//     1 - P(t)   = sbar^{1/3} Gamma(2/3) / (3 rate_ratio) * (gamma t)^{-2/3}
//     rho_gg(t)  = (Gamma(5/3)/3) sbar^{1/3} / rate_ratio^2 * (gamma t)^{-5/3}
//
// and ionization flux balance d(1-P)/dt = -Gamma_up rho_gg holds exactly.

double tail_survival(double t_gamma, double sbar, double rate_ratio);
double tail_ground_population(double t_gamma, double sbar, double rate_ratio);

// Time (units of 1/gamma) at which the -2/3 law extrapolates to survival
// one half: [ (Gamma(2/3)/rate_ratio)^3 * (8/27) * sbar ]^{1/2}. Marks the
// onset of the algebraic era.
double tail_crossover_time(double sbar, double rate_ratio);

// ---------------------------------------------------------------------------
// Intermediate plateau (broadband drive, before the algebraic era).
//
// Second-order treatment of the slow return flux gives the two-exponential
// forms below, valid while lambda_sp * gamma * t << 1:
//
//     rho_gg(t) = [ e^{-gamma t} + lambda_sp e^{+lambda_sp gamma t} ] / (1 + lambda_sp)
//     P(t)      = rate_ratio [ e^{+lambda_sp gamma t} - e^{-gamma t} ] / (1 + lambda_sp)
//
// lambda_sp is the small re-excitation weight (see lambda_sp() in noise.hpp).
// After the fast decay, rho_gg sits near lambda_sp and P near rate_ratio.

double plateau_ground_population(double t_gamma, double lambda_sp);
double plateau_ionization(double t_gamma, double lambda_sp, double rate_ratio);

// ---------------------------------------------------------------------------
// Below-threshold scaling map.
//
// For a drive centered at mean_energy < 0 (atomic units) with Lorentzian-type
// bandwidth beta and phase-diffusion rate b, populations collapse onto the
// scaling function through
//
//     tau(t)    = 2 gamma b / (T beta^2) * t          (T: Kepler period)
//     rho_gg(t) = 2 / (T beta) * f'(tau(t))
//     P(t)      = (1/pi) [ beta/|mean_energy| - arctan(beta/|mean_energy|) ]
//                 * f(tau(t))
//
// The quartic crossover of f' maps to t ~ T beta^2 / (2 b gamma); the
// phase-diffusion-like era (tau << 1) ends two decades earlier.

struct BelowThresholdMap {
  double tau_rate;      // d tau / d t in 1/au: 2 gamma b / (T beta^2)
  double ground_scale;  // 2 / (T beta)
  double ion_scale;     // (beta/|mean_energy| - arctan(...)) / pi

  double tau_at(double t_au) const { return tau_rate * t_au; }
  double time_at(double tau) const { return tau / tau_rate; }
  double ground_population(double t_au) const;
  double ionization(double t_au) const;
};

// All arguments in atomic units; gamma is the golden-rule rate. Throws
// std::invalid_argument unless mean_energy < 0 and beta, b, gamma > 0.
BelowThresholdMap below_threshold_map(double mean_energy, double beta,
                                      double b, double gamma);

}  // namespace rydnoise
