#pragma once
// Classical stochastic laser field: phase-diffusion (PDM) and
// Ornstein-Uhlenbeck frequency-noise models, plus externally tabulated
// spectra.  Provides correlation functions, spectra (closed-form where they
// exist, half-line Fourier quadrature otherwise), effective bandwidth, the
// spectral moment governing the near-threshold plateau, and stochastic phase
// paths for the wave-function Monte Carlo validator.
//
// Everything is in atomic units internally; scenario code converts the
// dimensionless figure-caption ratios.

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "rydnoise/interp.hpp"

namespace rydnoise {

enum class NoiseKind { pdm, ou_frequency, tabulated };

struct NoiseModel {
  NoiseKind kind = NoiseKind::pdm;
  double amplitude_sq = 1.0;  // <|eps|^2>
  double bandwidth_b = 1.0;   // b (inverse time)
  double cutoff_beta = std::numeric_limits<double>::infinity();  // beta; inf = PDM
  double carrier_omega = 0.0;  // documentation only; rotating frame removes it

  // kind == tabulated: sampled spectrum, strictly increasing omega.
  std::vector<double> tab_omega, tab_s;
  // Counts out-of-range tabulated-spectrum queries (they return 0).
  std::shared_ptr<std::atomic<std::int64_t>> oor_counter =
      std::make_shared<std::atomic<std::int64_t>>(0);

  static NoiseModel make_pdm(double b, double amp_sq = 1.0);
  static NoiseModel make_ou(double b, double beta, double amp_sq = 1.0);
  static NoiseModel make_tabulated(std::vector<double> omega,
                                   std::vector<double> s);

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
};

// Field autocorrelation K(tau) (real for this family).  tau < 0 is a domain
// error.
double correlation(const NoiseModel& model, double tau);

// Spectrum S(Omega): (1/pi) Re of the half-line Fourier transform of K.
// PDM: exact Lorentzian.  OU: panel quadrature with an analytic tail
// (exponential-envelope remainder), accurate to ~1e-9 relative.
double spectrum(const NoiseModel& model, double omega);

// Lorentzian of width b: amp * b / (pi (b^2 + Omega^2)).
double spectrum_lorentzian(double amp_sq, double b, double omega);

// Wide-cutoff product approximation: Lorentzian(b) * beta^2/(beta^2+Omega^2).
double spectrum_product_approx(const NoiseModel& model, double omega);

// B = <|eps|^2> / (pi S(0)).  Exactly b for PDM.
double effective_bandwidth(const NoiseModel& model);

// Integral of S over (-inf, inf) evaluated numerically on a composite
// core+log grid; equals amplitude_sq up to quadrature error.  Exposed so
// callers (and tests) can audit normalization per model.
double spectrum_normalization(const NoiseModel& model);

// One-sided spectral weight Int_lower^inf S(omega) d omega.  Negative lower
// bounds reduce via the evenness of S; tabulated models integrate their own
// grid (zero outside it).  Quadrature plus a fitted power-law remainder.
double spectrum_integral_above(const NoiseModel& model, double lower);

// Spectral moment controlling the near-threshold population plateau:
//   (1/<|eps|^2>^2) * Int_0^inf  S(mean_energy + e)^2 (2e)^{3/2} de
double lambda_sp(const NoiseModel& model, double mean_energy);

// PDM closed form of the same moment (principal square root).
double lambda_sp_pdm_closed(double b, double mean_energy);

struct PhasePath {
  double dt = 0.0;
  std::vector<double> phases;  // accumulated phase Phi(t_k), phases[0] == 0
  std::vector<double> freq;    // instantaneous frequency phi(t_k); empty for PDM
  std::uint64_t seed = 0;
};

// PDM: independent Gaussian phase increments, variance 2 b dt.
// OU: Euler-Maruyama for the frequency process (stationary initial draw,
// requires dt <= 0.1/beta), phase accumulated by trapezoid.
PhasePath sample_phase_path(const NoiseModel& model, double dt, int n_steps,
                            std::uint64_t seed);

// Cached spectrum evaluations for rate construction: PCHIP in log-log over a
// log-spaced |Omega| grid (the spectrum family is even), with a quadratic
// blend to S(0) below the grid and power-law continuation above it.
class SpectrumTable {
 public:
  SpectrumTable() = default;
  // Covers |Omega| in [omega_min, omega_max] with n log-spaced nodes.
  SpectrumTable(const NoiseModel& model, double omega_max,
                std::size_t n = 2048, double omega_min = 0.0);

  double operator()(double omega) const;
  double s0() const { return s0_; }

 private:
  PchipInterpolant loglog_;
  double s0_ = 0.0;          // S(0)
  double omega_min_ = 0.0;   // grid edges
  double omega_max_ = 0.0;
  double s_min_ = 0.0;       // S at the edges
  double s_max_ = 0.0;
  double tail_power_ = 4.0;  // local log-log slope at the top edge
};

}  // namespace rydnoise
