#include "rydnoise/noise.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "rydnoise/quadrature.hpp"

namespace rydnoise {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pdm(const NoiseModel& m) {
  return m.kind == NoiseKind::pdm || std::isinf(m.cutoff_beta);
}

// K(tau) for the frequency-noise model, exact closed form.
double ou_correlation(double amp_sq, double b, double beta, double tau) {
  return amp_sq * std::exp(-b * tau + b / beta * (1.0 - std::exp(-beta * tau)));
}

// Half-line cosine transform (1/pi) Int_0^tmax K(tau) cos(Omega tau) dtau
// plus the analytic remainder: beyond tau_max the envelope is exponentially
// close to amp * e^{b/beta} e^{-b tau}, whose transform is elementary.
//
// Panel layout: fine panels (<= 0.5/beta wide) resolve the initial
// correlation transient on [0, 8/beta]; afterwards panel width pi/max(|Omega|, b)
// tracks the oscillation.  tau_max = (42 + b/beta)/b keeps the truncated
// weight below ~1e-18 relative to K(0).
double ou_spectrum(double amp_sq, double b, double beta, double omega) {
  const double om = std::abs(omega);
  // Deep tail: the quadrature result decays like Omega^-4 while its roundoff
  // floor does not, so beyond 12(b+beta) switch to the integration-by-parts
  // asymptotic series (coefficients are odd derivatives of K at 0; accurate
  // to ~2e-6 at the switch point, rapidly better beyond).
  if (om > 12.0 * (b + beta)) {
    const double om2 = om * om;
    const double c4 = b * beta * beta;
    const double c6 = -b * beta * beta * beta * (beta - 10.0 * b);
    const double c8 =
        b * std::pow(beta, 4) * (beta * beta - 56.0 * b * beta + 105.0 * b * b);
    return amp_sq / kPi * (c4 + (c6 + c8 / om2) / om2) / (om2 * om2);
  }
  const double tau_max = (42.0 + b / beta) / b;
  std::vector<double> edges{0.0};
  const double t_transient = std::min(8.0 / beta, tau_max);
  const double w_osc = kPi / std::max(om, b);
  // Transient panels must resolve both the correlation decay (scale 1/beta)
  // and the integrand oscillation (scale 1/Omega), whichever is finer.
  const double w_transient = std::min(0.5 / beta, w_osc);
  while (edges.back() < t_transient) {
    edges.push_back(std::min(edges.back() + w_transient, t_transient));
  }
  while (edges.back() < tau_max) {
    edges.push_back(std::min(edges.back() + w_osc, tau_max));
  }
  const auto f = [&](double tau) {
    return ou_correlation(amp_sq, b, beta, tau) * std::cos(om * tau);
  };
  double integral = gl16_panels(f, edges);
  // Re[ amp e^{b/beta} e^{-(b+i om) tau_max} / (b + i om) ]
  const double envelope = amp_sq * std::exp(b / beta - b * tau_max);
  integral += envelope * (b * std::cos(om * tau_max) - om * std::sin(om * tau_max)) /
              (b * b + om * om);
  return integral / kPi;
}

double tabulated_spectrum(const NoiseModel& m, double omega) {
  const auto& xs = m.tab_omega;
  const auto& ys = m.tab_s;
  if (omega < xs.front() || omega > xs.back()) {
    if (m.oor_counter) m.oor_counter->fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), omega);
  const std::size_t i =
      std::min(xs.size() - 2, static_cast<std::size_t>(it - xs.begin()) - 1);
  const double t = (omega - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

}  // namespace

NoiseModel NoiseModel::make_pdm(double b, double amp_sq) {
  NoiseModel m;
  m.kind = NoiseKind::pdm;
  m.bandwidth_b = b;
  m.amplitude_sq = amp_sq;
  m.validate();
  return m;
}

NoiseModel NoiseModel::make_ou(double b, double beta, double amp_sq) {
  NoiseModel m;
  m.kind = NoiseKind::ou_frequency;
  m.bandwidth_b = b;
  m.cutoff_beta = beta;
  m.amplitude_sq = amp_sq;
  m.validate();
  return m;
}

NoiseModel NoiseModel::make_tabulated(std::vector<double> omega,
                                      std::vector<double> s) {
  NoiseModel m;
  m.kind = NoiseKind::tabulated;
  m.tab_omega = std::move(omega);
  m.tab_s = std::move(s);
  m.validate();
  return m;
}

void NoiseModel::validate() const {
  if (!(amplitude_sq >= 0.0))
    throw std::invalid_argument("noise: amplitude_sq must be >= 0");
  if (kind == NoiseKind::tabulated) {
    if (tab_omega.size() < 2 || tab_omega.size() != tab_s.size())
      throw std::invalid_argument("noise: tabulated spectrum needs >= 2 rows");
    for (std::size_t i = 0; i < tab_omega.size(); ++i) {
      if (i + 1 < tab_omega.size() && !(tab_omega[i] < tab_omega[i + 1]))
        throw std::invalid_argument("noise: tabulated omega must increase");
      if (!(tab_s[i] >= 0.0))
        throw std::invalid_argument("noise: tabulated spectrum must be >= 0");
    }
    return;
  }
  if (!(bandwidth_b > 0.0))
    throw std::invalid_argument("noise: bandwidth_b must be > 0");
  if (kind == NoiseKind::ou_frequency && !(cutoff_beta > 0.0))
    throw std::invalid_argument("noise: cutoff_beta must be > 0");
  if (kind == NoiseKind::pdm && !std::isinf(cutoff_beta) && !(cutoff_beta > 0.0))
    throw std::invalid_argument("noise: cutoff_beta must be > 0 or infinite");
}

double correlation(const NoiseModel& model, double tau) {
  if (tau < 0.0) throw std::domain_error("correlation: tau must be >= 0");
  if (model.kind == NoiseKind::tabulated)
    throw std::invalid_argument("correlation: tabulated models are spectrum-only");
  if (is_pdm(model)) return model.amplitude_sq * std::exp(-model.bandwidth_b * tau);
  return ou_correlation(model.amplitude_sq, model.bandwidth_b, model.cutoff_beta,
                        tau);
}

double spectrum_lorentzian(double amp_sq, double b, double omega) {
  return amp_sq / kPi * b / (b * b + omega * omega);
}

double spectrum(const NoiseModel& model, double omega) {
  switch (model.kind) {
    case NoiseKind::tabulated:
      return tabulated_spectrum(model, omega);
    case NoiseKind::pdm:
      return spectrum_lorentzian(model.amplitude_sq, model.bandwidth_b, omega);
    case NoiseKind::ou_frequency:
      if (is_pdm(model))
        return spectrum_lorentzian(model.amplitude_sq, model.bandwidth_b, omega);
      return ou_spectrum(model.amplitude_sq, model.bandwidth_b, model.cutoff_beta,
                         omega);
  }
  throw std::logic_error("spectrum: unknown model kind");
}

double spectrum_product_approx(const NoiseModel& model, double omega) {
  const double beta = model.cutoff_beta;
  const double lor =
      spectrum_lorentzian(model.amplitude_sq, model.bandwidth_b, omega);
  if (std::isinf(beta)) return lor;
  return lor * beta * beta / (beta * beta + omega * omega);
}

double effective_bandwidth(const NoiseModel& model) {
  if (is_pdm(model) && model.kind != NoiseKind::tabulated)
    return model.bandwidth_b;
  const double s0 = spectrum(model, 0.0);
  if (!(s0 > 0.0))
    throw std::runtime_error("effective_bandwidth: degenerate spectrum, S(0) == 0");
  return model.amplitude_sq / (kPi * s0);
}

double spectrum_normalization(const NoiseModel& model) {
  if (model.kind == NoiseKind::tabulated) {
    // Trapezoid over the table's own nodes is exact for linear interpolation.
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < model.tab_omega.size(); ++i)
      acc += 0.5 * (model.tab_s[i] + model.tab_s[i + 1]) *
             (model.tab_omega[i + 1] - model.tab_omega[i]);
    return acc;
  }
  const double b = model.bandwidth_b;
  const double beta = model.cutoff_beta;
  // Core: linear panels over the Lorentzian body.  Wing: geometric panels.
  // Remainder beyond the wing edge: the spectrum has an exact algebraic
  // decay (Omega^-2 for PDM, Omega^-4 beyond the cutoff otherwise), so a
  // power-law tail calibrated at the edge closes the integral.
  const double x_core = 5.0 * b;
  const double x_max = std::isinf(beta) ? 640.0 * b : std::max(40.0 * beta, 640.0 * b);
  std::vector<double> edges;
  for (int i = 0; i <= 40; ++i) edges.push_back(x_core * i / 40.0);
  const int n_log = 60;
  for (int i = 1; i <= n_log; ++i)
    edges.push_back(x_core * std::pow(x_max / x_core, double(i) / n_log));
  const auto f = [&](double om) { return spectrum(model, om); };
  double half = gl16_panels(f, edges);
  const double p = std::isinf(beta) ? 2.0 : 4.0;
  half += spectrum(model, x_max) * x_max / (p - 1.0);
  return 2.0 * half;
}

namespace {

// Int_lower^inf S for lower >= 0: dense linear panels across the remaining
// Lorentzian body, geometric panels through the wing, then a power-law
// remainder with the exponent fitted at the far edge (exactly 2 for PDM,
// 4 beyond a finite cutoff; the fit absorbs the crossover).
double spectral_mass_above(const NoiseModel& model, double lower) {
  const double b = model.bandwidth_b;
  const double beta = model.cutoff_beta;
  const double x_far = std::max(
      {1e4 * b, 1e3 * lower, std::isinf(beta) ? 0.0 : 50.0 * beta});
  const double core_end = std::max(8.0 * b, 2.0 * lower);
  const double w_lin = std::max(b / 4.0, (core_end - lower) / 256.0);
  std::vector<double> edges{lower};
  while (edges.back() < core_end)
    edges.push_back(std::min(edges.back() + w_lin, core_end));
  double w = w_lin;
  while (edges.back() < x_far) {
    w *= 1.6;
    edges.push_back(std::min(edges.back() + w, x_far));
  }
  const auto f = [&](double om) { return spectrum(model, om); };
  const double integral = gl16_panels(f, edges);
  const double s_mid = spectrum(model, 0.6 * x_far);
  const double s_far = spectrum(model, x_far);
  double p = std::log(s_mid / s_far) / std::log(1.0 / 0.6);
  if (!(p > 1.1)) p = 2.0;
  return integral + s_far * x_far / (p - 1.0);
}

}  // namespace

double spectrum_integral_above(const NoiseModel& model, double lower) {
  if (model.kind == NoiseKind::tabulated) {
    const auto& xs = model.tab_omega;
    const auto& ys = model.tab_s;
    if (lower >= xs.back()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (xs[i + 1] <= lower) continue;
      double x0 = xs[i], y0 = ys[i];
      if (x0 < lower) {  // clip the partial panel at the lower bound
        const double t = (lower - xs[i]) / (xs[i + 1] - xs[i]);
        x0 = lower;
        y0 = ys[i] + t * (ys[i + 1] - ys[i]);
      }
      acc += 0.5 * (y0 + ys[i + 1]) * (xs[i + 1] - x0);
    }
    return acc;
  }
  if (lower >= 0.0) return spectral_mass_above(model, lower);
  // S is even: Int_lower^inf = Int_{-inf}^{inf} - Int_{-lower}^{inf}
  return 2.0 * spectral_mass_above(model, 0.0) -
         spectral_mass_above(model, -lower);
}

double lambda_sp_pdm_closed(double b, double mean_energy) {
  const std::complex<double> i(0.0, 1.0);
  const double r = mean_energy / b;
  const std::complex<double> val =
      (1.0 - 2.0 * i * r) * std::sqrt(std::complex<double>(r, -1.0));
  return std::sqrt(b / (2.0 * kPi * kPi)) * val.real();
}

double lambda_sp(const NoiseModel& model, double mean_energy) {
  const double b = model.bandwidth_b;
  const double scale = std::max(b, std::abs(mean_energy));
  // Geometric ladder, refined around the spectral peak when the mean energy
  // sits below threshold (the peak of S(mean+e) is at e = -mean).
  std::vector<double> edges{0.0, 1e-3 * scale};
  while (edges.back() < 4e6 * scale) edges.push_back(2.0 * edges.back());
  if (mean_energy < 0.0) {
    const double peak = -mean_energy;
    for (int i = -16; i <= 16; ++i) {
      const double e = peak + 0.5 * b * i;
      if (e > 0.0) edges.push_back(e);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const double amp = model.amplitude_sq;
  const auto f = [&](double e) {
    const double s = spectrum(model, mean_energy + e);
    return s * s * std::pow(2.0 * e, 1.5);
  };
  double integral = gl16_panels(f, edges);
  // Tail: locally S ~ c/e^2 with c calibrated at the edge (exact for the
  // Lorentzian wing, conservative for steeper cutoffs).
  const double e_top = edges.back();
  const double c = spectrum(model, mean_energy + e_top) * e_top * e_top;
  integral += c * c * std::pow(2.0, 2.5) / 3.0 * std::pow(e_top, -1.5);
  return integral / (amp * amp);
}

PhasePath sample_phase_path(const NoiseModel& model, double dt, int n_steps,
                            std::uint64_t seed) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_phase_path: dt must be > 0");
  if (n_steps < 1)
    throw std::invalid_argument("sample_phase_path: n_steps must be >= 1");
  if (model.kind == NoiseKind::tabulated)
    throw std::invalid_argument("sample_phase_path: tabulated models have no SDE");

  PhasePath path;
  path.dt = dt;
  path.seed = seed;
  path.phases.resize(static_cast<std::size_t>(n_steps) + 1);
  path.phases[0] = 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  if (is_pdm(model)) {
    const double sigma = std::sqrt(2.0 * model.bandwidth_b * dt);
    for (int k = 0; k < n_steps; ++k)
      path.phases[k + 1] = path.phases[k] + sigma * nd(rng);
    return path;
  }

  const double b = model.bandwidth_b, beta = model.cutoff_beta;
  if (dt > 0.1 / beta)
    throw std::invalid_argument(
        "sample_phase_path: dt must be <= 0.1/beta for the explicit scheme");
  // Stationary initial draw, then Euler-Maruyama for
  //   d phi = -phi beta dt + sqrt(2b) beta dW
  path.freq.resize(path.phases.size());
  double phi = std::sqrt(beta * b) * nd(rng);
  path.freq[0] = phi;
  const double kick = std::sqrt(2.0 * b) * beta * std::sqrt(dt);
  for (int k = 0; k < n_steps; ++k) {
    const double phi_next = phi - phi * beta * dt + kick * nd(rng);
    path.phases[k + 1] = path.phases[k] + 0.5 * dt * (phi + phi_next);
    path.freq[k + 1] = phi_next;
    phi = phi_next;
  }
  return path;
}

SpectrumTable::SpectrumTable(const NoiseModel& model, double omega_max,
                             std::size_t n, double omega_min) {
  if (omega_min <= 0.0) omega_min = 1e-4 * model.bandwidth_b;
  if (!(omega_max > omega_min))
    throw std::invalid_argument("SpectrumTable: omega_max must exceed omega_min");
  s0_ = spectrum(model, 0.0);
  omega_min_ = omega_min;
  omega_max_ = omega_max;
  std::vector<double> lx(n), ly(n);
  const double l0 = std::log(omega_min), l1 = std::log(omega_max);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = l0 + (l1 - l0) * double(i) / double(n - 1);
    ly[i] = std::log(spectrum(model, std::exp(lx[i])));
  }
  s_min_ = std::exp(ly.front());
  s_max_ = std::exp(ly.back());
  tail_power_ = -(ly[n - 1] - ly[n - 2]) / (lx[n - 1] - lx[n - 2]);
  loglog_ = PchipInterpolant(std::move(lx), std::move(ly));
}

double SpectrumTable::operator()(double omega) const {
  const double om = std::abs(omega);
  if (om <= omega_min_) {
    const double t = om / omega_min_;
    return s0_ + (s_min_ - s0_) * t * t;
  }
  if (om >= omega_max_)
    return s_max_ * std::pow(omega_max_ / om, tail_power_);
  return std::exp(loglog_(std::log(om)));
}

}  // namespace rydnoise
