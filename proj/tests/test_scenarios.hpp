#pragma once
// Shared physical scenarios for the test suites.  All quantities are atomic
// units; gamma_au sets the absolute coupling scale and every other parameter
// is quoted relative to it.

#include <cmath>

#include "rydnoise/basis.hpp"
#include "rydnoise/noise.hpp"
#include "rydnoise/qdt.hpp"

namespace testcase {

struct Scenario {
  rydnoise::QdtSystem sys;
  rydnoise::NoiseModel model;
  double gamma_au = 0.0;
};

inline rydnoise::QdtSystem base_system(double gamma_au, double mean_energy_au,
                                       double amp_sq = 1.0) {
  rydnoise::QdtSystem sys;
  sys.quantum_defect = 0.1;
  sys.dipole_deps = std::sqrt(gamma_au / (2.0 * 3.14159265358979323846 * amp_sq));
  sys.mean_energy = mean_energy_au;
  return sys;
}

// Mean energy within one bandwidth of threshold, broadband noise (b = 120
// gamma, ebar = -63.27 gamma).  The continuum grid covers [0, ebar + 10 b].
inline Scenario threshold_case(bool pdm = true, double b_over_beta = 3.0) {
  const double g = 1.9757e-7;
  const double b = 120.0 * g;
  Scenario sc;
  sc.gamma_au = g;
  sc.sys = base_system(g, -63.27 * g);
  const auto grid = rydnoise::make_log_energy_grid(-63.27 * g + 10.0 * b, 400);
  sc.sys.continuum_energies = grid.energies;
  sc.sys.continuum_weights = grid.weights;
  sc.model = pdm ? rydnoise::NoiseModel::make_pdm(b)
                 : rydnoise::NoiseModel::make_ou(b, b / b_over_beta);
  return sc;
}

// Deep narrowband comb: b = 5 gamma, ebar = -314.16 gamma, resonant with
// level n = 200 (local spacing there is pi gamma).
inline Scenario narrowband_case() {
  const double g = 3.9789e-8;
  Scenario sc;
  sc.gamma_au = g;
  sc.sys = base_system(g, -1.25e-5);
  const auto grid = rydnoise::make_log_energy_grid(100.0 * g, 200);
  sc.sys.continuum_energies = grid.energies;
  sc.sys.continuum_weights = grid.weights;
  sc.model = rydnoise::NoiseModel::make_pdm(5.0 * g);
  return sc;
}

// Mean energy 20 bandwidths below threshold: almost all spectral weight stays
// in the bound comb, which makes the total-rate sum rules sharp.
inline Scenario deep_case() {
  const double g = 1e-9;
  const double b = 120.0 * g;
  Scenario sc;
  sc.gamma_au = g;
  sc.sys = base_system(g, -20.0 * b);
  const auto grid = rydnoise::make_log_energy_grid(10.0 * b, 300);
  sc.sys.continuum_energies = grid.energies;
  sc.sys.continuum_weights = grid.weights;
  sc.model = rydnoise::NoiseModel::make_pdm(b);
  return sc;
}

// Small truncated comb with its parent system: 15 bound levels around n = 60
// plus 40 continuum bins up to 20 gamma.  Cheap enough for ensemble Monte
// Carlo, dense-matrix, and resolvent cross-checks alike.
struct CombCase {
  rydnoise::QdtSystem sys;
  rydnoise::NoiseModel model;
  rydnoise::TruncatedBasis basis;
  double gamma = 0.0;
};

inline CombCase small_comb() {
  CombCase c;
  c.gamma = 2.0 / (2.0 * 3.14159265358979323846 * 216000.0);
  c.sys = base_system(c.gamma, -1.0 / 7200.0);  // Kepler period at n=60: 2/gamma
  c.model = rydnoise::NoiseModel::make_pdm(5.0 * c.gamma);
  c.basis = rydnoise::make_truncated_basis(c.sys, 53, 67, 20.0 * c.gamma, 40);
  return c;
}

}  // namespace testcase
