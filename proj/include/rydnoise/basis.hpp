#pragma once

#include <cstddef>
#include <vector>

#include "rydnoise/qdt.hpp"

// Truncated working basis for the wave-function and master-equation solvers:
// the ground (initial) state, a window of bound levels with their energies
// and dipoles, and a discretized continuum whose energy-normalized couplings
// are scaled by the square root of the bin width so that golden-rule rates
// come out right on a finite basis.

namespace rydnoise {

struct TruncatedBasis {
  static constexpr std::size_t kDefaultCap = 4096;

  double mean_energy = 0.0;  // rotating-frame reference energy (a.u.)

  // Bound window, ascending energies; dipoles are the real matrix elements
  // d_n (field amplitude excluded).
  std::vector<double> bound_energy;
  std::vector<double> bound_dipole;
  std::vector<int> bound_n;  // principal labels, for diagnostics

  // Continuum bins, ascending center energies; dipole = d_eps sqrt(width).
  std::vector<double> bin_energy;
  std::vector<double> bin_dipole;

  std::size_t size() const {
    return 1 + bound_energy.size() + bin_energy.size();
  }

  // Throws std::invalid_argument listing every violation: mismatched array
  // lengths, non-ascending energies, non-finite or negative dipoles, or
  // total size above the cap.
  void validate(std::size_t cap = kDefaultCap) const;
};

// Bound levels n in [n_lo, n_hi] plus n_bins uniform continuum bins covering
// (0, e_max]. Throws on an out-of-range window, non-positive e_max/n_bins,
// or a basis larger than cap.
TruncatedBasis make_truncated_basis(const QdtSystem& sys, int n_lo, int n_hi,
                                    double e_max, int n_bins,
                                    std::size_t cap = TruncatedBasis::kDefaultCap);

// Abstract two-level validator basis: one excited level at the given
// rotating-frame detuning, no continuum.
TruncatedBasis two_level_basis(double detuning, double dipole);

}  // namespace rydnoise
