#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "rydnoise/qdt.hpp"

namespace rydnoise {

// Golden-rule transfer rates of the diagonal (rate-equation) reduction of the
// driven comb.  Bound levels keep population back-transfer; continuum weight
// feeds the ionization channel directly, so its total acts as a single decay
// rate gamma_eff on the ground state.
struct RateSystem {
  QdtSystem system;
  NoiseModel model;

  double gamma = 0.0;      // bare rate 2 pi d_eps^2 <|eps|^2>
  double gamma_eff = 0.0;  // ionization rate: spectral weight above threshold

  std::vector<int> bound_n;        // n_min..n_max
  std::vector<double> bound_energy;
  std::vector<double> bound_rate;  // R_ng = 2 pi d_n^2 S(ebar - eps_n)
  std::vector<double> bound_weight;  // level multiplicities (all 1)

  std::vector<double> cont_energy;  // continuum grid copied from the system
  std::vector<double> cont_rate;    // rate density 2 pi d_eps^2 S(ebar - e)

  std::size_t peak_index = 0;  // argmax of bound_rate
  // Near-threshold rate density cbar = 2 pi d_eps^2 S(ebar): levels above the
  // truncation obey R ~ cbar * spacing, which sigma_kernel continues
  // analytically past tail_edge_nu = n_max + 1/2 - alpha.
  double threshold_rate_density = 0.0;
  double tail_edge_nu = 0.0;

  // Cached spectrum for slow models (built for the OU family); exact models
  // evaluate directly.
  std::shared_ptr<const SpectrumTable> table;

  double spectrum_at(double omega) const;
  double total_bound_rate() const;
};

// Validates both inputs (the continuum grid must cover [0, ebar + 10 B] when
// the mean energy sits within a bandwidth of threshold) and assembles rates.
RateSystem build_rates(const QdtSystem& system, const NoiseModel& model);

// Populations on the requested time grid.  rho_excited is the summed bound
// population; per-level columns are stored only on request.
struct PopulationSeries {
  std::vector<double> times;
  std::vector<double> rho_gg;
  std::vector<double> p_ion;
  std::vector<double> rho_excited;
  std::vector<int> level_n;                     // columns of rho_levels
  std::vector<std::vector<double>> rho_levels;  // [time][level]
};

struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-14;
  bool store_levels = false;
  std::size_t max_steps = 10'000'000;
};

// Integrates the rate equations from the ground state,
//   rho_gg' = -sum_n R_n (rho_gg - rho_nn) - gamma_eff rho_gg
//   rho_nn' =  R_n (rho_gg - rho_nn)
//   p_ion'  =  gamma_eff rho_gg,
// with adaptive TR-BDF2 (L-stable; the arrow structure makes each implicit
// solve O(levels)).  Probability conservation is never enforced; it has to
// emerge from the discretization.  times must be nonnegative and increasing.
PopulationSeries evolve(const RateSystem& rates, const std::vector<double>& times,
                        const EvolveOptions& opts = {});

// Rate-comb response sigma(z) = sum_n R_n / (R_n - i z): the bound sum plus a
// quadrature-in-nu continuation of the truncated level tail and its analytic
// remainder.  Requires Im z > 0.  For z -> 0 this develops the cube-root
// singularity (2 pi/3 sqrt 3) (cbar/(-i z))^{1/3} of the near-threshold comb.
std::complex<double> sigma_kernel(const RateSystem& rates, std::complex<double> z);

enum class ResolventVariant {
  exact,      // rho~_gg = 1/(gamma_eff - i z (1 + sigma))
  wide_comb,  // rho~_gg = 1/(gamma_eff - i z sigma): drops the ground-state
              // term against the excited sum, valid where |sigma| >> 1
};

struct LaplacePoint {
  std::complex<double> rho_gg;
  std::complex<double> p_ion;  // i gamma_eff rho~_gg / z
  std::complex<double> sigma;
};

// Half-line transform F(z) = Int_0^inf e^{izt} f(t) dt of the populations,
// evaluated in closed form through sigma_kernel.  Requires Im z > 0.
LaplacePoint laplace_populations(const RateSystem& rates, std::complex<double> z,
                                 ResolventVariant variant = ResolventVariant::exact);

// Uniform inversion contour z = x + i eta with x symmetric about 0 (the decay
// spectrum of a real rate system is symmetric under x -> -x conjugation).
//
// taper_fraction > 0 multiplies the integrand by a smooth window equal to 1
// on the inner (1 - taper_fraction) of the grid and rolling off to 0 at the
// edge through an infinitely differentiable step.  A hard edge leaves a
// truncation error ~ e^{eta t} |F(X)| / (2 pi t); the smooth window turns
// that into a term falling faster than any power of 1/(t dX), so the grid
// only needs to cover the frequencies that carry the signal.
struct LaplaceGrid {
  double eta = 0.0;
  double x_min = 0.0;
  double dx = 0.0;
  std::size_t n = 0;
  double taper_fraction = 0.0;  // in [0, 1): outer fraction smoothly windowed
  double x(std::size_t j) const { return x_min + dx * static_cast<double>(j); }
  std::complex<double> z(std::size_t j) const { return {x(j), eta}; }
};

// Period-padded contour for times up to t_max: dx = pi/T with T = pad*t_max,
// eta = min(rate_floor/20, 18/T).  The first eta bound keeps the contour below
// the decay structure scale; the second balances alias leakage from the
// periodized transform against e^{eta t} roundoff amplification.  x_half sets
// the truncation half-width (late times are additionally protected by
// oscillatory cancellation of the tail).
LaplaceGrid make_laplace_grid(double t_max, double x_half, double rate_floor,
                              double pad = 1.4);

struct InversionResult {
  std::vector<double> values;
  // max |Im| over outputs relative to max |Re|: symmetric contours invert real
  // functions, so this is a pure discretization diagnostic.
  double max_imag_ratio = 0.0;
};

// (1/2 pi) Int e^{-izt} F(z) dz along the contour by trapezoid.  Throws when a
// requested time exceeds the Nyquist bound pi/dx of the grid or when
// eta * t > 30 (the e^{eta t} reweighting would amplify roundoff past use).
InversionResult invert_laplace(const LaplaceGrid& grid,
                               const std::vector<std::complex<double>>& values,
                               const std::vector<double>& times);

struct LaplaceDiagnostics {
  double max_imag_ratio_rho = 0.0;
  double max_imag_ratio_p = 0.0;
};

// Populations by contour inversion of laplace_populations.  Reference poles
// with known inverses carry the slowly decaying 1/x parts analytically:
//   rho~_gg - i/(z + i kappa)            with kappa = sum R_n + gamma_eff,
//   P~_ion  - i/z + i/(z + i kappa),
// so the numerically inverted remainders decay like x^{-3} and x^{-2}.
PopulationSeries laplace_series(const RateSystem& rates, const LaplaceGrid& grid,
                                const std::vector<double>& times,
                                ResolventVariant variant = ResolventVariant::exact,
                                LaplaceDiagnostics* diag = nullptr);

// Scale separations behind the rate-equation reduction; each ratio must be
// large for the diagonal approximation to hold.  ok_* flags ratio >= 10.
struct ValidityReport {
  double bandwidth_sq_over_rabi_sq = 0.0;  // 2 B^2 / <Omega_R>^2
  double spacing_over_peak_rate = 0.0;     // local spacing / R at the peak
  double bandwidth_over_gamma = 0.0;       // pi B / gamma
  bool ok_rabi = false;
  bool ok_spacing = false;
  bool ok_gamma = false;
  bool all_ok() const { return ok_rabi && ok_spacing && ok_gamma; }
  std::string summary() const;
};

ValidityReport check_validity(const RateSystem& rates);

}  // namespace rydnoise
