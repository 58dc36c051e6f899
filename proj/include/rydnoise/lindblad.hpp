#pragma once

#include <vector>

#include "rydnoise/basis.hpp"
#include "rydnoise/noise.hpp"

// Deterministic density-matrix propagator for the phase-diffusion limit: with
// an infinitely short field correlation time the ensemble average obeys a
// Lindblad equation whose single jump operator sqrt(2b)|g><g| dephases every
// ground<->excited coherence at the bandwidth b while leaving populations
// untouched.  This is the exact closed-form counterpart of the stochastic
// averaging performed by the wave-function sampler, so the two cross-validate
// on any truncated basis, and it serves as the white-noise anchor for the
// finite-cutoff memory-kernel solver.

namespace rydnoise {

struct LindbladOptions {
  // Integration step; 0 picks min(0.2 / dressed spectral spread, 0.05 / b).
  // Whatever the value, each recording interval is subdivided evenly so the
  // integrator lands on every requested time exactly.
  double dt = 0.0;
  // Compute the smallest density-matrix eigenvalue at recording times (an
  // O(n^3) check per record; disable for large bases).
  bool track_spectrum = true;
};

struct LindbladSeries {
  std::vector<double> times;
  std::vector<double> ground;
  std::vector<double> bound_sum;
  std::vector<double> continuum;

  // Integration health, maximized over recording times.  Trace and
  // hermiticity drift only through integrator roundoff; min_eigenvalue dips
  // below zero only by discretization error (the exact flow is completely
  // positive).  max_edge_population is the occupation of the outermost
  // continuum bin: values above ~1e-4 mean probability is reaching the
  // truncation edge and the basis is too small for the requested horizon.
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  double max_edge_population = 0.0;
};

// Propagate rho(0) = |g><g| under
//   drho/dt = -i[H, rho] + 2b ( rho_gg |g><g| - (1/2){|g><g|, rho} )
// with H the rotating-frame dressed Hamiltonian of the basis (ground at the
// mean energy, couplings -eps0 d_k) and record populations on t_grid.
// Requires a pure phase-diffusion model; throws std::invalid_argument for
// other noise kinds, an invalid basis, a non-ascending or negative grid, or
// a non-finite dt.
LindbladSeries pdm_lindblad(const TruncatedBasis& basis,
                            const NoiseModel& model,
                            const std::vector<double>& t_grid,
                            const LindbladOptions& opts = {});

}  // namespace rydnoise
