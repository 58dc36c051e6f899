#include "rydnoise/basis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rydnoise {

namespace {

void check_channel(std::ostringstream& bad, const char* name,
                   const std::vector<double>& energy,
                   const std::vector<double>& dipole) {
  if (energy.size() != dipole.size())
    bad << "; " << name << " energy/dipole lengths differ";
  for (std::size_t i = 0; i + 1 < energy.size(); ++i) {
    if (!(energy[i] < energy[i + 1])) {
      bad << "; " << name << " energies must strictly increase";
      break;
    }
  }
  for (const double d : dipole) {
    if (!std::isfinite(d) || d < 0.0) {
      bad << "; " << name << " dipoles must be finite and >= 0";
      break;
    }
  }
}

}  // namespace

void TruncatedBasis::validate(std::size_t cap) const {
  std::ostringstream bad;
  if (bound_n.size() != bound_energy.size())
    bad << "; bound label/energy lengths differ";
  check_channel(bad, "bound", bound_energy, bound_dipole);
  check_channel(bad, "bin", bin_energy, bin_dipole);
  if (size() > cap) bad << "; basis size " << size() << " exceeds cap " << cap;
  const std::string msg = bad.str();
  if (!msg.empty())
    throw std::invalid_argument("TruncatedBasis: " + msg.substr(2));
}

TruncatedBasis make_truncated_basis(const QdtSystem& sys, int n_lo, int n_hi,
                                    double e_max, int n_bins,
                                    std::size_t cap) {
  if (n_lo < sys.n_min || n_hi > sys.n_max || n_lo > n_hi)
    throw std::invalid_argument(
        "make_truncated_basis: bound window outside the series truncation");
  if (!(e_max > 0.0) || n_bins < 1)
    throw std::invalid_argument(
        "make_truncated_basis: continuum needs e_max > 0 and n_bins >= 1");

  TruncatedBasis basis;
  basis.mean_energy = sys.mean_energy;
  for (int n = n_lo; n <= n_hi; ++n) {
    basis.bound_n.push_back(n);
    basis.bound_energy.push_back(level_energy(n, sys));
    basis.bound_dipole.push_back(dipole(n, sys));
  }
  const double width = e_max / n_bins;
  for (int j = 0; j < n_bins; ++j) {
    basis.bin_energy.push_back((j + 0.5) * width);
    basis.bin_dipole.push_back(sys.dipole_deps * std::sqrt(width));
  }
  basis.validate(cap);
  return basis;
}

TruncatedBasis two_level_basis(double detuning, double dipole) {
  TruncatedBasis basis;
  basis.mean_energy = 0.0;
  basis.bound_n = {0};
  basis.bound_energy = {detuning};
  basis.bound_dipole = {dipole};
  basis.validate();
  return basis;
}

}  // namespace rydnoise
