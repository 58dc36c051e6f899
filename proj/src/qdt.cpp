#include "rydnoise/qdt.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rydnoise {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cplx = std::complex<double>;

void require_in_range(int n, const QdtSystem& sys, const char* who) {
  if (n < sys.n_min || n > sys.n_max) {
    std::ostringstream os;
    os << who << ": n=" << n << " outside truncation range [" << sys.n_min
       << ", " << sys.n_max << "]";
    throw std::out_of_range(os.str());
  }
}

}  // namespace

void QdtSystem::validate(double bandwidth) const {
  std::string errs;
  const auto add = [&](const std::string& e) {
    if (!errs.empty()) errs += "; ";
    errs += e;
  };
  if (!(quantum_defect >= 0.0 && quantum_defect < 1.0))
    add("quantum_defect must lie in [0, 1)");
  if (n_min < 2) add("n_min must be >= 2");
  if (n_min > n_max) add("n_min must be <= n_max");
  if (!(n_min - quantum_defect > 1.0))
    add("n_min - quantum_defect must exceed 1");
  if (continuum_energies.size() != continuum_weights.size())
    add("continuum grid energies and weights must have equal length");
  for (std::size_t i = 0; i < continuum_energies.size(); ++i) {
    if (!(continuum_energies[i] > 0.0)) {
      add("continuum energies must be strictly positive");
      break;
    }
    if (i > 0 && !(continuum_energies[i] > continuum_energies[i - 1])) {
      add("continuum energies must be strictly increasing");
      break;
    }
  }
  for (double w : continuum_weights) {
    if (!(w > 0.0)) {
      add("continuum weights must be positive");
      break;
    }
  }
  if (bandwidth > 0.0 && mean_energy > -bandwidth) {
    const double need = mean_energy + 10.0 * bandwidth;
    if (continuum_energies.empty() || continuum_energies.back() < need)
      add("continuum grid must cover [0, mean_energy + 10*bandwidth]");
  }
  if (!errs.empty()) throw std::invalid_argument("QdtSystem: " + errs);
}

EnergyGrid make_log_energy_grid(double e_max, int n_points, double e_min) {
  if (!(e_max > 0.0))
    throw std::invalid_argument("make_log_energy_grid: e_max must be > 0");
  if (n_points < 2)
    throw std::invalid_argument("make_log_energy_grid: need >= 2 points");
  if (e_min <= 0.0) e_min = 1e-8 * e_max;
  if (!(e_min < e_max))
    throw std::invalid_argument("make_log_energy_grid: e_min must be < e_max");
  EnergyGrid g;
  g.energies.resize(n_points);
  g.weights.assign(n_points, 0.0);
  const double ratio = std::log(e_max / e_min);
  for (int i = 0; i < n_points; ++i)
    g.energies[i] = e_min * std::exp(ratio * i / (n_points - 1));
  for (int i = 0; i < n_points; ++i) {
    const double lo = (i == 0) ? g.energies[0] : g.energies[i - 1];
    const double hi = (i + 1 == n_points) ? g.energies[i] : g.energies[i + 1];
    g.weights[i] = 0.5 * (hi - lo);
  }
  g.weights[0] += g.energies[0];  // rectangle stub covering (0, e_min]
  return g;
}

double level_energy(int n, const QdtSystem& sys) {
  require_in_range(n, sys, "level_energy");
  const double nu = n - sys.quantum_defect;
  return -1.0 / (2.0 * nu * nu);
}

double dipole(int n, const QdtSystem& sys) {
  require_in_range(n, sys, "dipole");
  return sys.dipole_deps * std::pow(n - sys.quantum_defect, -1.5);
}

double level_spacing(double n, const QdtSystem& sys) {
  return std::pow(n - sys.quantum_defect, -3.0);
}

double kepler_period(double energy) {
  if (!(energy < 0.0))
    throw std::domain_error("kepler_period: energy must be negative");
  return 2.0 * kPi * std::pow(-2.0 * energy, -1.5);
}

double resonance_index(double energy) {
  if (!(energy < 0.0))
    throw std::domain_error("resonance_index: energy must be negative");
  return 1.0 / std::sqrt(-2.0 * energy);
}

double gamma_rate(const QdtSystem& sys, const NoiseModel& model) {
  return 2.0 * kPi * sys.dipole_deps * sys.dipole_deps * model.amplitude_sq;
}

double effective_gamma(const QdtSystem& sys, const NoiseModel& model) {
  // Gamma = 2 pi d_eps^2 Int_0^inf S(ebar - e) de; substituting u = e - ebar
  // and using the evenness of S turns it into the one-sided spectral mass
  // above -ebar.
  return 2.0 * kPi * sys.dipole_deps * sys.dipole_deps *
         spectrum_integral_above(model, -sys.mean_energy);
}

namespace {

cplx self_energy_core(cplx z, const QdtSystem& sys, double gamma) {
  const cplx nu = 1.0 / std::sqrt(-2.0 * z) + sys.quantum_defect;
  const cplx two_pi_i(0.0, 2.0 * kPi);
  cplx pole_part;
  const double nr = std::round(nu.real());
  const cplx u = two_pi_i * (nu - nr);  // e^{-2 pi i nu} = e^{-u} exactly
  const double growth = 2.0 * kPi * nu.imag();
  if (std::abs(u) < 1e-2) {
    // Bernoulli series for 1/(1 - e^{-u}) keeps full precision across the
    // near-pole cancellation of the direct form.
    const cplx u2 = u * u;
    pole_part = 1.0 / u + 0.5 +
                u * (1.0 / 12.0 + u2 * (-1.0 / 720.0 + u2 * (1.0 / 30240.0)));
  } else if (growth > 40.0) {
    // Near threshold e^{-2 pi i nu} overflows; expand in its tiny reciprocal.
    const cplx w = std::exp(two_pi_i * nu);
    pole_part = -w * (1.0 + w);
  } else {
    pole_part = 1.0 / (1.0 - std::exp(-two_pi_i * nu));
  }
  return sys.stark_shift + cplx(0.0, -0.5 * gamma) +
         cplx(0.0, gamma) * pole_part;
}

}  // namespace

std::complex<double> self_energy(std::complex<double> z, const QdtSystem& sys,
                                 double gamma) {
  if (!(z.imag() > 0.0))
    throw std::domain_error("self_energy: Im z must be > 0");
  // Since Im z > 0, Im nu > 0 and |e^{-2 pi i nu}| = e^{2 pi Im nu} > 1, so
  // the pole-part denominator never vanishes off the real axis.
  return self_energy_core(z, sys, gamma);
}

std::complex<double> self_energy_extended(std::complex<double> z,
                                          const QdtSystem& sys, double gamma) {
  if (z == cplx(0.0, 0.0))
    throw std::domain_error("self_energy_extended: z = 0 is the accumulation "
                            "point of the bound series");
  if (z.imag() != 0.0) return self_energy_core(z, sys, gamma);
  // Boundary value from above.  For Re z > 0 the principal square root of
  // -2z must be taken on the lower side of its cut: -2(x + i0) carries a
  // negative signed zero, which std::sqrt maps to -i*sqrt(2x) and hence
  // nu = alpha + i/sqrt(2x), the decaying (retarded) branch.  Passing z with
  // imag = +0.0 achieves exactly that; normalize a -0.0 input so both signed
  // zeros mean the same limit.
  return self_energy_core(cplx(z.real(), +0.0), sys, gamma);
}

}  // namespace rydnoise
