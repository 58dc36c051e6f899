#pragma once

#include <cstdint>
#include <vector>

#include "rydnoise/basis.hpp"
#include "rydnoise/noise.hpp"

// Brute-force stochastic wave-function simulator on a truncated basis: for
// each sampled phase path the rotating-frame Schrodinger equation is stepped
// with a norm-preserving split propagator (exact diagonal phase advance +
// exact rank-one coupling rotation), and populations are averaged over
// realizations. This is the model-free validator for the rate-equation and
// master-equation solvers; it is intentionally restricted to small bases and
// short horizons (t up to ~10 golden-rule lifetimes at the shipped sizes —
// beyond that, discretization recurrences and ensemble noise take over).

namespace rydnoise {

// Largest step the split propagator accepts for this basis/model pair:
//   0.05 * min(noise correlation scale, 1/(collective Rabi), 1/spacing)
// where the noise scale is 1/b for pure phase diffusion and 1/max(b, beta)
// for finite-cutoff models, the collective Rabi frequency is
// 2 sqrt(<|eps|^2> sum d^2), and the spacing is the gap between the two
// deepest bound levels. Throws for tabulated (spectrum-only) models, which
// admit no sample paths.
double max_split_step(const TruncatedBasis& basis, const NoiseModel& model);

// Populations of a single realization, sampled on the requested time grid
// (each time snapped to the nearest step boundary; `times` holds the snapped
// values actually used).
struct RealizationSeries {
  std::vector<double> times;
  std::vector<double> ground;               // |<g|psi>|^2
  std::vector<std::vector<double>> bound;   // per time: one entry per level
  std::vector<double> continuum;            // summed bin population
  double norm_drift = 0.0;                  // max |1 - <psi|psi>| seen
};

// Integrate one phase path. Throws std::invalid_argument when path.dt
// violates the split-step bound, the grid is not ascending and non-negative,
// or the path is shorter than the grid.
RealizationSeries evolve_realization(const TruncatedBasis& basis,
                                     const NoiseModel& model,
                                     const PhasePath& path,
                                     const std::vector<double>& t_grid);

struct EnsembleOptions {
  // Step size; 0 picks 0.1 * max_split_step(basis, model), where the extra
  // factor keeps the weak sampling bias of the phase-diffusion stepping well
  // below typical ensemble error bars. An explicit value must still satisfy
  // the split-step bound.
  double dt = 0.0;
  int jobs = 1;             // worker threads; results identical for any value
  std::uint64_t seed = 1;   // base seed; realization k uses a hashed stream
};

struct EnsembleSeries {
  std::vector<double> times;
  std::vector<double> ground, ground_err;        // mean and standard error
  std::vector<double> bound_sum, bound_sum_err;  // all bound levels combined
  std::vector<double> continuum, continuum_err;
  int realizations = 0;
  double max_norm_drift = 0.0;
};

// Average `realizations` independent paths (at least 100). Deterministic for
// fixed (seed, realizations): per-realization streams are hash-derived and
// the reduction is a fixed-shape ordered sum, so the thread count never
// changes the result.
EnsembleSeries ensemble_average(const TruncatedBasis& basis,
                                const NoiseModel& model, int realizations,
                                const std::vector<double>& t_grid,
                                const EnsembleOptions& opts = {});

}  // namespace rydnoise
