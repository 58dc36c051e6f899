#include "rydnoise/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace rydnoise {

namespace {

using cplx = std::complex<double>;

constexpr double kStepSafety = 0.05;  // fraction of the fastest timescale
// Extra margin applied when the caller lets the ensemble pick the step: the
// midpoint-phase stepping carries a weak O(b dt) bias in relaxation rates
// (about b dt / 2 relative), and 0.1x the hard bound keeps it far below the
// statistical error of any ensemble this validator is sized for.
constexpr double kAutoStepFactor = 0.1;
constexpr int kBlock = 64;  // realizations per reduction block

// splitmix64 finalizer; with the Weyl increment below it decorrelates
// per-realization generator seeds for any (base seed, index) pair.
std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

std::uint64_t stream_seed(std::uint64_t base, int index) {
  const auto k = static_cast<std::uint64_t>(index) + 1;
  return mix64(base + 0x9e3779b97f4a7c15ull * k);
}

// Validates the grid and maps each requested time to its nearest step index.
std::vector<long long> snap_grid(const std::vector<double>& t_grid,
                                 double dt) {
  if (t_grid.empty()) {
    throw std::invalid_argument("time grid is empty");
  }
  std::vector<long long> snap(t_grid.size());
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    if (!std::isfinite(t) || t < 0.0) {
      throw std::invalid_argument("time grid must be finite and >= 0");
    }
    if (j > 0 && t < t_grid[j - 1]) {
      throw std::invalid_argument("time grid must be non-decreasing");
    }
    snap[j] = std::llround(t / dt);
  }
  if (snap.back() > (1ll << 31) - 2) {
    std::ostringstream os;
    os << "time grid needs " << snap.back() << " steps of " << dt
       << "; raise dt or shorten the horizon";
    throw std::invalid_argument(os.str());
  }
  return snap;
}

// Per-run constants of the split propagator: detunings (bound then bins),
// their exact half-step phase factors, and the normalized coupling direction
// with the rotation angle per step.
struct Stepper {
  std::vector<double> u;         // d_k / |d|
  std::vector<cplx> half_phase;  // exp(-i (e_k - mean_energy) dt / 2)
  double cos_th = 1.0;
  double sin_th = 0.0;

  Stepper(const TruncatedBasis& basis, const NoiseModel& model, double dt) {
    double dsq = 0.0;
    auto add = [&](const std::vector<double>& energy,
                   const std::vector<double>& dipole) {
      for (std::size_t i = 0; i < energy.size(); ++i) {
        u.push_back(dipole[i]);
        dsq += dipole[i] * dipole[i];
        half_phase.push_back(
            std::polar(1.0, -0.5 * (energy[i] - basis.mean_energy) * dt));
      }
    };
    add(basis.bound_energy, basis.bound_dipole);
    add(basis.bin_energy, basis.bin_dipole);
    const double dnorm = std::sqrt(dsq);
    const double theta =
        dnorm > 0.0 ? std::sqrt(model.amplitude_sq) * dnorm * dt : 0.0;
    if (dnorm > 0.0) {
      for (double& v : u) v /= dnorm;
    }
    cos_th = std::cos(theta);
    sin_th = std::sin(theta);
  }
};

struct Accum {
  std::vector<double> g_sum, g_sq, b_sum, b_sq, c_sum, c_sq;
  double drift = 0.0;

  explicit Accum(std::size_t n)
      : g_sum(n, 0.0),
        g_sq(n, 0.0),
        b_sum(n, 0.0),
        b_sq(n, 0.0),
        c_sum(n, 0.0),
        c_sq(n, 0.0) {}
};

}  // namespace

double max_split_step(const TruncatedBasis& basis, const NoiseModel& model) {
  basis.validate();
  model.validate();
  if (model.kind == NoiseKind::tabulated) {
    throw std::invalid_argument(
        "max_split_step: tabulated spectra carry no sample paths; use a pdm "
        "or ou_frequency model");
  }
  // Fastest rate among: phase decorrelation, collective Rabi cycling, and
  // the spacing of the two deepest bound levels (the largest gap of the
  // Rydberg window, hence the shortest beat period).
  double rate = model.bandwidth_b;
  if (model.kind == NoiseKind::ou_frequency) {
    rate = std::max(rate, model.cutoff_beta);
  }
  double dsq = 0.0;
  for (double d : basis.bound_dipole) dsq += d * d;
  for (double d : basis.bin_dipole) dsq += d * d;
  rate = std::max(rate, 2.0 * std::sqrt(model.amplitude_sq * dsq));
  if (basis.bound_energy.size() >= 2) {
    rate = std::max(rate, basis.bound_energy[1] - basis.bound_energy[0]);
  }
  return kStepSafety / rate;
}

RealizationSeries evolve_realization(const TruncatedBasis& basis,
                                     const NoiseModel& model,
                                     const PhasePath& path,
                                     const std::vector<double>& t_grid) {
  const double bound = max_split_step(basis, model);  // validates both inputs
  const double dt = path.dt;
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("phase path step must be positive");
  }
  if (dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "phase path step " << dt << " exceeds the split-step bound "
       << bound << " for this basis and noise model";
    throw std::invalid_argument(os.str());
  }
  const std::vector<long long> snap = snap_grid(t_grid, dt);
  if (path.phases.size() < static_cast<std::size_t>(snap.back()) + 1) {
    throw std::invalid_argument("phase path is shorter than the time grid");
  }

  const Stepper st(basis, model, dt);
  const std::size_t nb = basis.bound_energy.size();
  const std::size_t nl = st.u.size();

  cplx a(1.0, 0.0);
  std::vector<cplx> psi(nl, cplx(0.0, 0.0));

  RealizationSeries out;
  out.times.reserve(snap.size());
  out.ground.reserve(snap.size());
  out.bound.reserve(snap.size());
  out.continuum.reserve(snap.size());

  auto record = [&](long long step) {
    out.times.push_back(static_cast<double>(step) * dt);
    const double g = std::norm(a);
    out.ground.push_back(g);
    std::vector<double> row(nb);
    double total = g;
    for (std::size_t k = 0; k < nb; ++k) {
      row[k] = std::norm(psi[k]);
      total += row[k];
    }
    double csum = 0.0;
    for (std::size_t k = nb; k < nl; ++k) csum += std::norm(psi[k]);
    total += csum;
    out.bound.push_back(std::move(row));
    out.continuum.push_back(csum);
    out.norm_drift = std::max(out.norm_drift, std::abs(1.0 - total));
  };

  const cplx mi(0.0, -1.0);
  std::size_t gp = 0;
  for (long long step = 0;; ++step) {
    while (gp < snap.size() && snap[gp] == step) {
      record(step);
      ++gp;
    }
    if (gp == snap.size()) break;

    for (std::size_t k = 0; k < nl; ++k) psi[k] *= st.half_phase[k];

    // Exact rotation by the rank-one coupling at the midpoint accumulated
    // phase: the bright combination c = <u|psi> and the ground amplitude
    // form a closed two-dimensional block.
    const double phi =
        0.5 * (path.phases[static_cast<std::size_t>(step)] +
               path.phases[static_cast<std::size_t>(step) + 1]);
    const cplx eip = std::polar(1.0, phi);
    cplx c(0.0, 0.0);
    for (std::size_t k = 0; k < nl; ++k) c += st.u[k] * psi[k];
    const cplx a_next = st.cos_th * a + mi * eip * st.sin_th * c;
    const cplx c_next = mi * std::conj(eip) * st.sin_th * a + st.cos_th * c;
    const cplx dc = c_next - c;
    for (std::size_t k = 0; k < nl; ++k) psi[k] += dc * st.u[k];
    a = a_next;

    for (std::size_t k = 0; k < nl; ++k) psi[k] *= st.half_phase[k];
  }
  return out;
}

EnsembleSeries ensemble_average(const TruncatedBasis& basis,
                                const NoiseModel& model, int realizations,
                                const std::vector<double>& t_grid,
                                const EnsembleOptions& opts) {
  if (realizations < 100) {
    throw std::invalid_argument(
        "ensemble_average: need at least 100 realizations");
  }
  if (opts.jobs < 1) {
    throw std::invalid_argument("ensemble_average: jobs must be >= 1");
  }
  const double bound = max_split_step(basis, model);  // validates both inputs
  double dt = opts.dt;
  if (dt == 0.0) {
    dt = kAutoStepFactor * bound;
  } else if (!(dt > 0.0) || !std::isfinite(dt) ||
             dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "ensemble_average: dt " << opts.dt
       << " violates the split-step bound " << bound;
    throw std::invalid_argument(os.str());
  }
  const std::vector<long long> snap = snap_grid(t_grid, dt);
  const int n_steps = static_cast<int>(snap.back());
  const std::size_t nt = t_grid.size();

  const int n_blocks = (realizations + kBlock - 1) / kBlock;
  std::vector<Accum> blocks(n_blocks, Accum(nt));

  auto run_one = [&](int index, Accum& acc) {
    const PhasePath path =
        sample_phase_path(model, dt, n_steps, stream_seed(opts.seed, index));
    const RealizationSeries s = evolve_realization(basis, model, path, t_grid);
    for (std::size_t j = 0; j < nt; ++j) {
      const double g = s.ground[j];
      double b = 0.0;
      for (double p : s.bound[j]) b += p;
      const double c = s.continuum[j];
      acc.g_sum[j] += g;
      acc.g_sq[j] += g * g;
      acc.b_sum[j] += b;
      acc.b_sq[j] += b * b;
      acc.c_sum[j] += c;
      acc.c_sq[j] += c * c;
    }
    acc.drift = std::max(acc.drift, s.norm_drift);
  };

  // Work is handed out block by block, but each block's partial sums are
  // written by exactly one worker and merged in index order below, so the
  // result is bit-identical for every thread count.
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&]() {
    try {
      for (;;) {
        const int blk = next.fetch_add(1);
        if (blk >= n_blocks) return;
        const int lo = blk * kBlock;
        const int hi = std::min(realizations, lo + kBlock);
        for (int i = lo; i < hi; ++i) run_one(i, blocks[blk]);
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(err_mutex);
      if (!err) err = std::current_exception();
    }
  };

  const int jobs = std::min(opts.jobs, n_blocks);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);

  Accum total(nt);
  for (const Accum& acc : blocks) {
    for (std::size_t j = 0; j < nt; ++j) {
      total.g_sum[j] += acc.g_sum[j];
      total.g_sq[j] += acc.g_sq[j];
      total.b_sum[j] += acc.b_sum[j];
      total.b_sq[j] += acc.b_sq[j];
      total.c_sum[j] += acc.c_sum[j];
      total.c_sq[j] += acc.c_sq[j];
    }
    total.drift = std::max(total.drift, acc.drift);
  }

  const double m = static_cast<double>(realizations);
  auto standard_error = [&](double sum, double sq) {
    const double var = std::max(0.0, sq - sum * sum / m);
    return std::sqrt(var / (m * (m - 1.0)));
  };

  EnsembleSeries out;
  out.times.resize(nt);
  out.ground.resize(nt);
  out.ground_err.resize(nt);
  out.bound_sum.resize(nt);
  out.bound_sum_err.resize(nt);
  out.continuum.resize(nt);
  out.continuum_err.resize(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    out.times[j] = static_cast<double>(snap[j]) * dt;
    out.ground[j] = total.g_sum[j] / m;
    out.ground_err[j] = standard_error(total.g_sum[j], total.g_sq[j]);
    out.bound_sum[j] = total.b_sum[j] / m;
    out.bound_sum_err[j] = standard_error(total.b_sum[j], total.b_sq[j]);
    out.continuum[j] = total.c_sum[j] / m;
    out.continuum_err[j] = standard_error(total.c_sum[j], total.c_sq[j]);
  }
  out.realizations = realizations;
  out.max_norm_drift = total.drift;
  return out;
}

}  // namespace rydnoise
