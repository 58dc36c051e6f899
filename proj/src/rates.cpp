#include "rydnoise/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rydnoise/kernels.hpp"
#include "rydnoise/quadrature.hpp"

namespace rydnoise {

namespace {

constexpr double kPi = 3.14159265358979323846;
using cplx = std::complex<double>;

}  // namespace

double RateSystem::spectrum_at(double omega) const {
  if (table) return (*table)(omega);
  return spectrum(model, omega);
}

double RateSystem::total_bound_rate() const {
  double acc = 0.0;
  for (double r : bound_rate) acc += r;
  return acc;
}

RateSystem build_rates(const QdtSystem& system, const NoiseModel& model) {
  model.validate();
  const double bandwidth = effective_bandwidth(model);
  system.validate(bandwidth);

  RateSystem r;
  r.system = system;
  r.model = model;
  r.gamma = gamma_rate(system, model);
  r.gamma_eff = effective_gamma(system, model);

  const double ebar = system.mean_energy;

  // The OU spectrum is a panel quadrature per point; cache it once over the
  // full range of needed detunings.  Closed-form and tabulated models are
  // cheap to query directly.
  if (model.kind == NoiseKind::ou_frequency) {
    double om_max = std::max(std::abs(ebar - level_energy(system.n_min, system)),
                             std::abs(ebar));
    if (!system.continuum_energies.empty()) {
      om_max = std::max(om_max, system.continuum_energies.back() - ebar);
    }
    r.table = std::make_shared<SpectrumTable>(model, 1.02 * om_max, 4096);
  }

  const double pref = r.gamma / model.amplitude_sq;  // 2 pi d_eps^2

  const int count = system.n_max - system.n_min + 1;
  r.bound_n.reserve(count);
  r.bound_energy.reserve(count);
  r.bound_rate.reserve(count);
  r.bound_weight.assign(count, 1.0);
  for (int n = system.n_min; n <= system.n_max; ++n) {
    const double e = level_energy(n, system);
    const double rate = pref * level_spacing(n, system) * r.spectrum_at(ebar - e);
    if (r.bound_rate.size() > 0 && rate > r.bound_rate[r.peak_index]) {
      r.peak_index = r.bound_rate.size();
    }
    r.bound_n.push_back(n);
    r.bound_energy.push_back(e);
    r.bound_rate.push_back(rate);
  }

  r.cont_energy = system.continuum_energies;
  r.cont_rate.reserve(r.cont_energy.size());
  for (double e : r.cont_energy) {
    r.cont_rate.push_back(pref * r.spectrum_at(ebar - e));
  }

  r.threshold_rate_density = pref * r.spectrum_at(ebar);
  r.tail_edge_nu = system.n_max + 0.5 - system.quantum_defect;
  return r;
}

// --------------------------------------------------------------- evolution --

namespace {

// State layout: y[0] = rho_gg, y[1..N] = rho_nn, y[N+1] = p_ion.  The
// generator has zero column sums, so every implicit stage conserves
// probability identically; only roundoff can break it.
struct RateOde {
  const std::vector<double>& R;
  const std::vector<double>& m;  // level multiplicities (ones)
  double total_rate;             // sum R_n
  double gamma_eff;

  std::size_t dim() const { return R.size() + 2; }

  void rhs(const double* y, double* f) const {
    const std::size_t n = R.size();
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += R[i] * y[1 + i];
    f[0] = -(total_rate + gamma_eff) * y[0] + dot;
    for (std::size_t i = 0; i < n; ++i) f[1 + i] = R[i] * (y[0] - y[1 + i]);
    f[n + 1] = gamma_eff * y[0];
  }

  // Solve (I - c A) x = r by eliminating the arrow structure: each level row
  // gives x_i in terms of x_g, which collapses the ground-state row to a
  // scalar equation.
  void solve(double c, const double* r, double* x) const {
    const std::size_t n = R.size();
    double a = 0.0, b = 0.0;
    if (n > 0) kernels::arrow_sums(R.data(), m.data(), r + 1, c, n, a, b);
    const double den = 1.0 + c * (total_rate + gamma_eff) - c * c * b;
    const double xg = (r[0] + c * a) / den;
    x[0] = xg;
    for (std::size_t i = 0; i < n; ++i) {
      x[1 + i] = (r[1 + i] + c * R[i] * xg) / (1.0 + c * R[i]);
    }
    x[n + 1] = r[n + 1] + c * gamma_eff * xg;
  }
};

// One TR-BDF2 step (trapezoidal to t + g h, BDF2 to t + h, g = 2 - sqrt 2);
// L-stable and second order.  scratch vectors are caller-provided.
void trbdf2_step(const RateOde& ode, const std::vector<double>& y, double h,
                 std::vector<double>& f, std::vector<double>& r,
                 std::vector<double>& y1, std::vector<double>& out) {
  static const double g = 2.0 - std::sqrt(2.0);
  static const double k0 = 1.0 / (g * (2.0 - g));
  static const double k1 = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));
  const std::size_t dim = ode.dim();
  const double c_tr = 0.5 * g * h;

  ode.rhs(y.data(), f.data());
  for (std::size_t i = 0; i < dim; ++i) r[i] = y[i] + c_tr * f[i];
  ode.solve(c_tr, r.data(), y1.data());

  const double c_bdf = h * (1.0 - g) / (2.0 - g);
  for (std::size_t i = 0; i < dim; ++i) r[i] = k0 * y1[i] - k1 * y[i];
  ode.solve(c_bdf, r.data(), out.data());
}

}  // namespace

PopulationSeries evolve(const RateSystem& rates, const std::vector<double>& times,
                        const EvolveOptions& opts) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw std::invalid_argument("evolve: times must be >= 0");
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw std::invalid_argument("evolve: times must be strictly increasing");
    }
  }
  if (!(opts.rtol > 0.0) || !(opts.atol >= 0.0)) {
    throw std::invalid_argument("evolve: bad tolerances");
  }

  const RateOde ode{rates.bound_rate, rates.bound_weight,
                    rates.total_bound_rate(), rates.gamma_eff};
  const std::size_t dim = ode.dim();
  const std::size_t nlev = rates.bound_rate.size();

  std::vector<double> y(dim, 0.0);
  y[0] = 1.0;  // start in the ground state

  PopulationSeries s;
  s.times = times;
  s.rho_gg.reserve(times.size());
  s.p_ion.reserve(times.size());
  s.rho_excited.reserve(times.size());
  if (opts.store_levels) {
    s.level_n = rates.bound_n;
    s.rho_levels.reserve(times.size());
  }
  auto record = [&](const std::vector<double>& state) {
    s.rho_gg.push_back(state[0]);
    s.p_ion.push_back(state[nlev + 1]);
    double exc = 0.0;
    for (std::size_t i = 0; i < nlev; ++i) exc += state[1 + i];
    s.rho_excited.push_back(exc);
    if (opts.store_levels) {
      s.rho_levels.emplace_back(state.begin() + 1, state.begin() + 1 + nlev);
    }
  };

  std::vector<double> f(dim), r(dim), y1(dim), full(dim), mid(dim), half(dim);

  double t = 0.0;
  const double scale0 = ode.total_rate + ode.gamma_eff;
  double h = (scale0 > 0.0) ? 1e-3 / scale0 : std::numeric_limits<double>::infinity();
  std::size_t steps = 0;

  for (double target : times) {
    if (target <= t) {  // only possible for target == 0
      record(y);
      continue;
    }
    while (t < target) {
      double hs = std::min(h, target - t);
      if (!(hs > 0.0) || t + hs == t) {
        throw std::runtime_error("evolve: step size underflow");
      }
      // Step doubling: one full step vs two halves; the halves are kept and
      // the difference drives the controller (local order 3 => factor 1/3).
      trbdf2_step(ode, y, hs, f, r, y1, full);
      trbdf2_step(ode, y, 0.5 * hs, f, r, y1, mid);
      trbdf2_step(ode, mid, 0.5 * hs, f, r, y1, half);
      double err = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double sc =
            opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(half[i]));
        err = std::max(err, std::abs(full[i] - half[i]) / (3.0 * sc));
      }
      err = std::max(err, 1e-30);
      const double fac = std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 4.0);
      if (err <= 1.0) {
        y.swap(half);
        t += hs;
        h = hs * fac;
      } else {
        h = hs * std::min(fac, 0.5);
      }
      if (++steps > opts.max_steps) {
        throw std::runtime_error("evolve: step limit exceeded");
      }
    }
    record(y);
  }
  return s;
}

// ----------------------------------------------------------- Laplace space --

std::complex<double> sigma_kernel(const RateSystem& rates, std::complex<double> z) {
  if (!(z.imag() > 0.0)) {
    throw std::domain_error("sigma_kernel: Im z must be > 0");
  }
  const cplx iz = cplx(0.0, 1.0) * z;
  cplx sig = 0.0;
  if (!rates.bound_rate.empty()) {
    sig = kernels::sigma_sum(rates.bound_rate.data(), rates.bound_weight.data(), z,
                             rates.bound_rate.size());
  }

  // Levels beyond the truncation: unit density in effective quantum number nu,
  // R(nu) = 2 pi d_eps^2 nu^-3 S(ebar - eps(nu)).  Quadrature covers the range
  // where the terms still saturate; past nu_cut every term is R/(-iz) to
  // relative 1e-3 and the series sums analytically.
  const double cbar = rates.threshold_rate_density;
  const double nu_edge = rates.tail_edge_nu;
  if (cbar > 0.0 && nu_edge > 0.0) {
    const double pref = rates.gamma / rates.model.amplitude_sq;
    const double ebar = rates.system.mean_energy;
    auto rate_at = [&](double nu) {
      return pref * std::pow(nu, -3.0) * rates.spectrum_at(ebar + 0.5 / (nu * nu));
    };
    double nu_cut = std::cbrt(cbar / (1e-3 * std::abs(z)));
    if (nu_cut > nu_edge) {
      auto g = [&](double nu) -> cplx {
        const double rr = rate_at(nu);
        return rr / (rr - iz);
      };
      double lo = nu_edge;
      while (lo < nu_cut) {
        const double hi = std::min(2.0 * lo, nu_cut);
        const double midp = 0.5 * (lo + hi), halfw = 0.5 * (hi - lo);
        cplx acc = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
          acc += gl16_w[i] *
                 (g(midp + halfw * gl16_x[i]) + g(midp - halfw * gl16_x[i]));
        }
        sig += acc * halfw;
        lo = hi;
      }
    } else {
      nu_cut = nu_edge;
    }
    // Integral of R over (nu_cut, inf) with the local nu^-3 profile.
    sig += rate_at(nu_cut) * nu_cut * 0.5 / (-iz);
  }
  return sig;
}

LaplacePoint laplace_populations(const RateSystem& rates, std::complex<double> z,
                                 ResolventVariant variant) {
  LaplacePoint p;
  p.sigma = sigma_kernel(rates, z);
  const cplx iz = cplx(0.0, 1.0) * z;
  const cplx comb =
      (variant == ResolventVariant::exact) ? 1.0 + p.sigma : p.sigma;
  p.rho_gg = 1.0 / (rates.gamma_eff - iz * comb);
  p.p_ion = cplx(0.0, 1.0) * rates.gamma_eff * p.rho_gg / z;
  return p;
}

LaplaceGrid make_laplace_grid(double t_max, double x_half, double rate_floor,
                              double pad) {
  if (!(t_max > 0.0) || !(x_half > 0.0) || !(rate_floor > 0.0) || !(pad >= 1.0)) {
    throw std::invalid_argument(
        "make_laplace_grid: need t_max > 0, x_half > 0, rate_floor > 0, pad >= 1");
  }
  const double period = pad * t_max;
  LaplaceGrid g;
  g.dx = kPi / period;
  g.eta = std::min(rate_floor / 20.0, 18.0 / period);
  const auto n_half = static_cast<std::size_t>(std::ceil(x_half / g.dx));
  g.n = 2 * n_half + 1;
  g.x_min = -g.dx * static_cast<double>(n_half);
  return g;
}

namespace {

// Infinitely differentiable step: 1 at u <= 0, 0 at u >= 1, all derivatives
// vanishing at both junctions (the classic exp(-1/u) partition of unity).
double smooth_step_down(double u) {
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - u));  // -> f(1-u)
  const double b = std::exp(-1.0 / u);          // -> f(u)
  return a / (a + b);
}

}  // namespace

InversionResult invert_laplace(const LaplaceGrid& grid,
                               const std::vector<std::complex<double>>& values,
                               const std::vector<double>& times) {
  if (grid.n < 2 || values.size() != grid.n) {
    throw std::invalid_argument("invert_laplace: grid/value size mismatch");
  }
  if (!(grid.taper_fraction >= 0.0) || grid.taper_fraction >= 1.0) {
    throw std::invalid_argument("invert_laplace: taper_fraction must be in [0, 1)");
  }
  const double t_nyquist = kPi / grid.dx;
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("invert_laplace: t must be >= 0");
    if (t > t_nyquist * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "invert_laplace: t exceeds the Nyquist horizon pi/dx of the grid");
    }
    if (grid.eta * t > 30.0) {
      throw std::invalid_argument(
          "invert_laplace: eta*t > 30 would amplify roundoff past usefulness");
    }
  }

  const bool tapered = grid.taper_fraction > 0.0;
  std::vector<cplx> windowed;
  const cplx* data = values.data();
  if (tapered) {
    windowed.resize(grid.n);
    const double x_edge = std::abs(grid.x_min);
    const double start = 1.0 - grid.taper_fraction;
    for (std::size_t j = 0; j < grid.n; ++j) {
      const double s = std::abs(grid.x(j)) / x_edge;
      const double w = smooth_step_down((s - start) / grid.taper_fraction);
      windowed[j] = values[j] * w;
    }
    data = windowed.data();
  }

  InversionResult out;
  out.values.reserve(times.size());
  const double x_last = grid.x(grid.n - 1);
  double max_re = 0.0, max_im = 0.0;
  for (double t : times) {
    cplx s = kernels::phased_sum(data, grid.n, -grid.x_min * t, -grid.dx * t);
    if (!tapered) {
      // Trapezoid endpoints carry half weight (the window already zeroes them).
      s -= 0.5 * (values.front() * std::exp(cplx(0.0, -grid.x_min * t)) +
                  values.back() * std::exp(cplx(0.0, -x_last * t)));
    }
    const cplx val = s * (grid.dx / (2.0 * kPi)) * std::exp(grid.eta * t);
    out.values.push_back(val.real());
    max_re = std::max(max_re, std::abs(val.real()));
    max_im = std::max(max_im, std::abs(val.imag()));
  }
  out.max_imag_ratio =
      max_im / std::max(max_re, std::numeric_limits<double>::min());
  return out;
}

PopulationSeries laplace_series(const RateSystem& rates, const LaplaceGrid& grid,
                                const std::vector<double>& times,
                                ResolventVariant variant,
                                LaplaceDiagnostics* diag) {
  const double kappa = rates.total_bound_rate() + rates.gamma_eff;
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("laplace_series: system has no decay channels");
  }
  std::vector<cplx> v_rho(grid.n), v_p(grid.n);
  const cplx i1(0.0, 1.0);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const cplx z = grid.z(j);
    const LaplacePoint lp = laplace_populations(rates, z, variant);
    v_rho[j] = lp.rho_gg - i1 / (z + i1 * kappa);
    v_p[j] = lp.p_ion - i1 / z + i1 / (z + i1 * kappa);
  }
  const InversionResult inv_rho = invert_laplace(grid, v_rho, times);
  const InversionResult inv_p = invert_laplace(grid, v_p, times);

  PopulationSeries s;
  s.times = times;
  s.rho_gg.resize(times.size());
  s.p_ion.resize(times.size());
  s.rho_excited.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double decay = std::exp(-kappa * times[k]);
    s.rho_gg[k] = decay + inv_rho.values[k];
    s.p_ion[k] = 1.0 - decay + inv_p.values[k];
    // The rate model conserves probability, so the excited weight is the
    // deficit.
    s.rho_excited[k] = 1.0 - s.rho_gg[k] - s.p_ion[k];
  }
  if (diag) {
    diag->max_imag_ratio_rho = inv_rho.max_imag_ratio;
    diag->max_imag_ratio_p = inv_p.max_imag_ratio;
  }
  return s;
}

// ---------------------------------------------------------------- validity --

ValidityReport check_validity(const RateSystem& rates) {
  ValidityReport rep;
  if (rates.bound_rate.empty()) {
    throw std::invalid_argument("check_validity: no bound levels");
  }
  const double bw = effective_bandwidth(rates.model);
  const double amp = rates.model.amplitude_sq;
  const double ebar = rates.system.mean_energy;

  // Strongest Rabi coupling among levels within one bandwidth of the mean
  // energy (fall back to the nearest level if none are that close).
  double rabi_sq = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  bool found = false;
  for (std::size_t i = 0; i < rates.bound_n.size(); ++i) {
    const double gap = std::abs(rates.bound_energy[i] - ebar);
    if (gap < best_gap) {
      best_gap = gap;
      nearest = i;
    }
    if (gap <= bw) {
      const double d = dipole(rates.bound_n[i], rates.system);
      rabi_sq = std::max(rabi_sq, 4.0 * d * d * amp);
      found = true;
    }
  }
  if (!found) {
    const double d = dipole(rates.bound_n[nearest], rates.system);
    rabi_sq = 4.0 * d * d * amp;
  }

  rep.bandwidth_sq_over_rabi_sq = 2.0 * bw * bw / rabi_sq;
  const double spacing =
      level_spacing(rates.bound_n[rates.peak_index], rates.system);
  rep.spacing_over_peak_rate = spacing / rates.bound_rate[rates.peak_index];
  rep.bandwidth_over_gamma = kPi * bw / rates.gamma;

  rep.ok_rabi = rep.bandwidth_sq_over_rabi_sq >= 10.0;
  rep.ok_spacing = rep.spacing_over_peak_rate >= 10.0;
  rep.ok_gamma = rep.bandwidth_over_gamma >= 10.0;
  return rep;
}

std::string ValidityReport::summary() const {
  std::ostringstream os;
  os << "rate-equation validity:";
  os << " 2B^2/<Omega_R>^2=" << bandwidth_sq_over_rabi_sq
     << (ok_rabi ? " (ok)" : " (VIOLATED)");
  os << " spacing/R_peak=" << spacing_over_peak_rate
     << (ok_spacing ? " (ok)" : " (VIOLATED)");
  os << " pi*B/gamma=" << bandwidth_over_gamma
     << (ok_gamma ? " (ok)" : " (VIOLATED)");
  return os.str();
}

}  // namespace rydnoise
