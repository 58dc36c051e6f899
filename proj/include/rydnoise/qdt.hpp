#pragma once

#include <complex>
#include <vector>

#include "rydnoise/noise.hpp"

namespace rydnoise {

// One-channel quantum-defect description of a Rydberg series coupled to its
// adjacent continuum: bound energies -1/(2(n-alpha)^2), threshold-normalized
// dipoles d_eps (n-alpha)^{-3/2}, and the initial-state self-energy.
struct QdtSystem {
  double quantum_defect = 0.0;  // alpha in [0, 1)
  double dipole_deps = 0.0;     // d_eps, energy-normalized dipole at threshold
  double mean_energy = 0.0;     // mean excited energy (a.u.), typically < 0
  double stark_shift = 0.0;     // static level shift added to the self-energy
  int n_min = 2;
  int n_max = 2000;
  // Discretized continuum: strictly increasing energies > 0 with positive
  // quadrature weights.  Consumers integrate f via sum w_k f(e_k).
  std::vector<double> continuum_energies;
  std::vector<double> continuum_weights;

  // Throws std::invalid_argument listing every violated invariant.  When a
  // positive effective bandwidth is supplied and mean_energy > -bandwidth,
  // also requires the continuum grid to cover [0, mean_energy + 10*bandwidth].
  void validate(double bandwidth = 0.0) const;
};

struct EnergyGrid {
  std::vector<double> energies;
  std::vector<double> weights;
};

// Log-spaced continuum grid on (e_min, e_max] with trapezoidal weights plus a
// rectangle stub covering (0, e_min].  e_min defaults to 1e-8 * e_max.
EnergyGrid make_log_energy_grid(double e_max, int n_points, double e_min = 0.0);

// Bound-state energy -1/(2(n-alpha)^2); n must lie in [n_min, n_max].
double level_energy(int n, const QdtSystem& sys);

// Bound-state dipole d_eps (n-alpha)^{-3/2}; n must lie in [n_min, n_max].
double dipole(int n, const QdtSystem& sys);

// Local level spacing d(eps_n)/dn = (n-alpha)^{-3} at index n (no range check:
// also meaningful as a density continuation beyond the truncation).
double level_spacing(double n, const QdtSystem& sys);

// Classical Kepler period 2*pi*(-2*energy)^{-3/2}; requires energy < 0.
double kepler_period(double energy);

// Effective principal quantum number (-2*energy)^{-1/2}; requires energy < 0.
double resonance_index(double energy);

// Bare ionization rate gamma = 2*pi*d_eps^2*<|eps|^2> of the initial state.
double gamma_rate(const QdtSystem& sys, const NoiseModel& model);

// Effective ionization rate Gamma = 2*pi*d_eps^2 Int_0^inf S(ebar - e) de:
// the part of gamma whose spectral weight lies above threshold.  Always
// <= gamma, approaching it when ebar is far above threshold.
double effective_gamma(const QdtSystem& sys, const NoiseModel& model);

// Initial-state self-energy, closed one-channel form
//   Sigma(z) = stark_shift - i*gamma/2 + i*gamma / (1 - e^{-2*pi*i*nu(z)}),
//   nu(z) = (-2z)^{-1/2} + alpha   (principal square root).
// Requires Im z > 0 (all singularities lie on the real axis).  Poles sit at
// the bound energies with residue gamma*(n-alpha)^{-3}/(2*pi); above
// threshold Im Sigma -> -gamma/2.
std::complex<double> self_energy(std::complex<double> z, const QdtSystem& sys,
                                 double gamma);

// Same closed form on the whole plane.  The expression is Schwarz symmetric
// (Sigma(conj z) = conj Sigma(z)), so below the axis it evaluates the
// resolvent self-energy directly, which is what the two-sided spectral
// integrals need for their reflected second factor.  On the real axis it
// returns the boundary value from above: (gamma/2)*cot(pi*nu) (real) between
// the bound poles, and -i*gamma/2 times 1 + O(e^{-2*pi/sqrt(2x)}) above
// threshold.  z = 0 (the accumulation point of the series) and the bound
// energies themselves are domain errors / poles and must be avoided by the
// caller.
std::complex<double> self_energy_extended(std::complex<double> z,
                                          const QdtSystem& sys, double gamma);

}  // namespace rydnoise
