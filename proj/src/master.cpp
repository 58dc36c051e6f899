#include "rydnoise/master.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/Dense>

#include "rydnoise/kernels.hpp"
#include "rydnoise/quadrature.hpp"
#include "rydnoise/rates.hpp"

namespace rydnoise {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};
constexpr double kPi = 3.14159265358979323846;

// Complex-valued Gauss-Legendre 16 on [a, c]; real and imaginary parts
// accumulated separately so the templated real routine stays untouched.
template <typename F>
cplx cgl16(F&& f, double a, double c) {
  const double mid = 0.5 * (a + c);
  const double half = 0.5 * (c - a);
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < gl16_x.size(); ++i) {
    const double dx = half * gl16_x[i];
    const cplx v = f(mid + dx) + f(mid - dx);
    re += gl16_w[i] * v.real();
    im += gl16_w[i] * v.imag();
  }
  return half * cplx(re, im);
}

}  // namespace

// --------------------------------------------------------------------------
// Memory kernel
// --------------------------------------------------------------------------

cplx continued_fraction(double b, double beta, cplx zeta, int depth) {
  if (!(b >= 0.0) || std::isnan(b)) {
    throw std::invalid_argument("continued_fraction: b must be >= 0");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("continued_fraction: beta must be > 0");
  }
  if (depth < 0) {
    throw std::invalid_argument("continued_fraction: depth must be >= 0");
  }
  if (std::isinf(beta)) return cplx(1.0, 0.0);
  const cplx iz = kI * zeta / beta;
  const double r = b / beta;
  cplx a(0.0, 0.0);  // alpha~^{depth+1} = 0
  for (int n = depth; n >= 0; --n) {
    a = 1.0 / (static_cast<double>(n + 1) + iz +
               (r * static_cast<double>(n + 2)) * a);
  }
  return a;
}

cplx MemoryKernel::alpha0(cplx zeta) const {
  if (white) return cplx(1.0, 0.0);
  return continued_fraction(b, beta, zeta, depth);
}

cplx MemoryKernel::wtilde(double delta, cplx z) const {
  if (white) return cplx(0.0, 0.0);
  return 1.0 - alpha0(delta - z);
}

cplx MemoryKernel::wtilde_mirror(double delta, cplx z) const {
  if (white) return cplx(0.0, 0.0);
  return 1.0 - std::conj(alpha0(delta + std::conj(z)));
}

MemoryKernel make_memory_kernel(const NoiseModel& model) {
  if (model.kind == NoiseKind::tabulated) {
    throw std::invalid_argument(
        "make_memory_kernel: tabulated spectra carry no analytic response "
        "hierarchy; fit a cutoff model first");
  }
  if (!(model.bandwidth_b >= 0.0) || std::isnan(model.bandwidth_b)) {
    throw std::invalid_argument("make_memory_kernel: bandwidth must be >= 0");
  }
  MemoryKernel k;
  k.b = model.bandwidth_b;
  k.beta = model.cutoff_beta;
  if (model.kind == NoiseKind::pdm || std::isinf(k.beta)) {
    k.beta = std::numeric_limits<double>::infinity();
    k.white = true;
    k.depth = 0;
    return k;
  }
  if (!(k.beta > 0.0)) {
    throw std::invalid_argument("make_memory_kernel: cutoff must be > 0");
  }
  k.white = false;
  const double b = k.b;
  const double beta = k.beta;
  // Probe arguments covering the physical evaluation contours: detunings up
  // to a few bandwidths/cutoffs, both axes, both half-planes.
  const cplx probes[] = {
      cplx(0.0, 0.0),          cplx(b, 0.0),
      cplx(-b, 0.0),           cplx(0.0, b),
      cplx(0.0, -b),           cplx(beta, 0.0),
      cplx(0.0, beta),         cplx(0.0, -beta),
      cplx(3.0 * (b + beta), 0.0), cplx(0.0, -3.0 * (b + beta)),
      cplx(b, -beta)};
  for (int depth = 20; depth <= 5120; depth *= 2) {
    bool ok = true;
    for (const cplx& zeta : probes) {
      const cplx lo = continued_fraction(b, beta, zeta, depth);
      const cplx hi = continued_fraction(b, beta, zeta, depth + depth / 2);
      if (!(std::abs(hi - lo) <= 1e-8 * std::max(1.0, std::abs(hi)))) {
        ok = false;
        break;
      }
    }
    if (ok) {
      k.depth = depth;
      return k;
    }
  }
  std::ostringstream msg;
  msg << "make_memory_kernel: continued fraction still moving at depth 5120; "
         "largest growth coefficient |b/beta (n+2)| = "
      << (b / beta) * 5122.0;
  throw std::runtime_error(msg.str());
}

// --------------------------------------------------------------------------
// Dressed-resolvent amplitudes
// --------------------------------------------------------------------------

cplx AmplitudeEvaluator::denominator(cplx z) const {
  return z + kI * b - ebar - sigma(z);
}

cplx AmplitudeEvaluator::gg(cplx z) const { return kI / denominator(z); }

cplx AmplitudeEvaluator::g_level(cplx z, double e, double d) const {
  return -kI * (eps0 * d) / ((z - e) * denominator(z));
}

cplx AmplitudeEvaluator::level_level(cplx z, double e_row, double d_row,
                                     double e_col, double d_col) const {
  cplx v(0.0, 0.0);
  if (e_row == e_col) v += kI / (z - e_row);
  v += kI * (eps0 * eps0 * d_row * d_col) /
       ((z - e_row) * (z - e_col) * denominator(z));
  return v;
}

AmplitudeEvaluator make_amplitudes(const QdtSystem& system, double gamma,
                                   double b, double amplitude_sq) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("make_amplitudes: gamma must be finite, >= 0");
  }
  if (!(b >= 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("make_amplitudes: b must be finite, >= 0");
  }
  if (!(amplitude_sq > 0.0) || !std::isfinite(amplitude_sq)) {
    throw std::invalid_argument("make_amplitudes: amplitude_sq must be > 0");
  }
  AmplitudeEvaluator amps;
  amps.ebar = system.mean_energy;
  amps.b = b;
  amps.eps0 = std::sqrt(amplitude_sq);
  amps.continuum_cut = true;
  const QdtSystem sys = system;
  amps.sigma = [sys, gamma](cplx z) {
    return self_energy_extended(z, sys, gamma);
  };
  // The ladder form has a simple pole at every integer index >= 1 (its
  // analytic continuation is blind to the configured window); seed them all
  // so the quadrature can straddle each one.
  const double alpha = system.quantum_defect;
  amps.sigma_poles.reserve(static_cast<std::size_t>(system.n_max));
  for (int m = 1; m <= system.n_max; ++m) {
    const double nu = static_cast<double>(m) - alpha;
    amps.sigma_poles.push_back(-0.5 / (nu * nu));
  }
  return amps;
}

AmplitudeEvaluator make_amplitudes(const TruncatedBasis& basis,
                                   const NoiseModel& model) {
  basis.validate();
  if (!(model.amplitude_sq > 0.0) || !std::isfinite(model.amplitude_sq)) {
    throw std::invalid_argument("make_amplitudes: amplitude_sq must be > 0");
  }
  if (!(model.bandwidth_b >= 0.0) || !std::isfinite(model.bandwidth_b)) {
    throw std::invalid_argument(
        "make_amplitudes: bandwidth must be finite, >= 0");
  }
  AmplitudeEvaluator amps;
  amps.ebar = basis.mean_energy;
  amps.b = model.bandwidth_b;
  amps.eps0 = std::sqrt(model.amplitude_sq);
  amps.continuum_cut = false;
  std::vector<std::pair<double, double>> poles;  // (energy, weight)
  poles.reserve(basis.bound_energy.size() + basis.bin_energy.size());
  for (std::size_t i = 0; i < basis.bound_energy.size(); ++i) {
    const double d = basis.bound_dipole[i];
    if (d > 0.0) {
      poles.emplace_back(basis.bound_energy[i],
                         model.amplitude_sq * d * d);
    }
  }
  for (std::size_t i = 0; i < basis.bin_energy.size(); ++i) {
    const double d = basis.bin_dipole[i];
    if (d > 0.0) {
      poles.emplace_back(basis.bin_energy[i], model.amplitude_sq * d * d);
    }
  }
  std::sort(poles.begin(), poles.end());
  auto en = std::make_shared<std::vector<double>>();
  auto wt = std::make_shared<std::vector<double>>();
  en->reserve(poles.size());
  wt->reserve(poles.size());
  for (const auto& [e, w] : poles) {
    en->push_back(e);
    wt->push_back(w);
    amps.sigma_poles.push_back(e);
  }
  amps.sigma = [en, wt](cplx z) {
    return kernels::pole_sum(wt->data(), en->data(), z, en->size());
  };
  return amps;
}

// --------------------------------------------------------------------------
// Two-sided spectral overlaps
// --------------------------------------------------------------------------

namespace {

// Boundary conventions: the first factor is evaluated at z1 + i0 (the
// retarded sheet), the reflected factor on the conjugate-coefficient sheet
// where sigma on the axis is the boundary value from below.
cplx sigma_upper(const AmplitudeEvaluator& a, cplx w) {
  if (w.imag() == 0.0) w = cplx(w.real(), 0.0);
  return a.sigma(w);
}

cplx sigma_lower(const AmplitudeEvaluator& a, cplx w) {
  if (w.imag() == 0.0) return std::conj(a.sigma(cplx(w.real(), 0.0)));
  return a.sigma(w);
}

cplx denom_upper(const AmplitudeEvaluator& a, cplx w) {
  return w + kI * a.b - a.ebar - sigma_upper(a, w);
}

cplx denom_lower(const AmplitudeEvaluator& a, cplx w) {
  return w - kI * a.b - a.ebar - sigma_lower(a, w);
}

// Whether a leg ever divides by the dressed denominator.
bool uses_denominator(const SpectralLeg& leg) {
  return leg.kind != SpectralLeg::Kind::level_level || leg.coupled;
}

// One factor of the overlap.  `reflected` selects the conjugate-coefficient
// family (overall i -> -i, +ib -> -ib, sigma from the lower boundary).
cplx leg_value(const AmplitudeEvaluator& a, const SpectralLeg& leg,
               bool reflected, cplx w) {
  const cplx sgn = reflected ? -kI : kI;
  cplx den(0.0, 0.0);
  if (uses_denominator(leg)) {
    den = reflected ? denom_lower(a, w) : denom_upper(a, w);
  }
  switch (leg.kind) {
    case SpectralLeg::Kind::ground_ground:
      return sgn / den;
    case SpectralLeg::Kind::ground_level:
      return -sgn * (a.eps0 * leg.d_row) / ((w - leg.e_row) * den);
    case SpectralLeg::Kind::level_level: {
      cplx v(0.0, 0.0);
      if (leg.e_row == leg.e_col) v += sgn / (w - leg.e_row);
      if (leg.coupled) {
        v += sgn * (a.eps0 * a.eps0 * leg.d_row * leg.d_col) /
             ((w - leg.e_row) * (w - leg.e_col) * den);
      }
      return v;
    }
  }
  return cplx(0.0, 0.0);
}

// True when `e` coincides (to roundoff) with one of the sorted sigma poles.
bool is_sigma_pole(const std::vector<double>& poles, double e) {
  auto it = std::lower_bound(poles.begin(), poles.end(), e);
  const double tol = 1e-9 * std::abs(e) + 1e-300;
  if (it != poles.end() && std::abs(*it - e) <= tol) return true;
  if (it != poles.begin() && std::abs(*(it - 1) - e) <= tol) return true;
  return false;
}

// Real zeros of D(x) = x - ebar - sigma(x) for an undamped ground state
// (b = 0, pole-sum sigma).  D is strictly increasing between consecutive
// sigma poles, so each gap holds exactly one zero, plus one beyond each end.
std::vector<double> dressed_zeros(const AmplitudeEvaluator& a) {
  auto D = [&](double x) {
    return x - a.ebar - a.sigma(cplx(x, 0.0)).real();
  };
  std::vector<double> zs;
  auto bisect = [&](double lo, double hi) {
    // Invariant: D(lo) < 0 < D(hi).
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (lo + hi);
      if (m <= lo || m >= hi) break;
      (D(m) < 0.0 ? lo : hi) = m;
    }
    zs.push_back(0.5 * (lo + hi));
  };
  const auto& P = a.sigma_poles;
  if (P.empty()) {
    // No poles: sigma is regular; expand a bracket around ebar.
    double w = std::max(1.0, std::abs(a.ebar));
    double lo = a.ebar - w, hi = a.ebar + w;
    for (int it = 0; it < 120 && D(lo) >= 0.0; ++it) lo -= (w *= 2.0);
    for (int it = 0; it < 120 && D(hi) <= 0.0; ++it) hi += (w *= 2.0);
    if (D(lo) < 0.0 && D(hi) > 0.0) bisect(lo, hi);
    return zs;
  }
  auto off_into_gap = [&](double p, double gap) {
    return std::max(gap * 1e-9, std::abs(p) * 1e-14 + 1e-300);
  };
  // Interior gaps.
  for (std::size_t i = 0; i + 1 < P.size(); ++i) {
    const double gap = P[i + 1] - P[i];
    if (!(gap > 0.0)) continue;
    double lo = P[i] + off_into_gap(P[i], gap);
    double hi = P[i + 1] - off_into_gap(P[i + 1], gap);
    for (int it = 0; it < 60 && D(lo) >= 0.0; ++it) lo = P[i] + 0.5 * (lo - P[i]);
    for (int it = 0; it < 60 && D(hi) <= 0.0; ++it) hi = P[i + 1] - 0.5 * (P[i + 1] - hi);
    if (lo < hi && D(lo) < 0.0 && D(hi) > 0.0) bisect(lo, hi);
  }
  // Below the lowest pole: D -> +inf approaching it, D -> -inf far left.
  {
    double step = std::max(1.0, std::abs(P.front()) + std::abs(a.ebar));
    double hi = P.front() - off_into_gap(P.front(), step);
    for (int it = 0; it < 60 && D(hi) <= 0.0; ++it) {
      hi = P.front() - 0.5 * (P.front() - hi);
    }
    double lo = P.front() - step;
    for (int it = 0; it < 120 && D(lo) >= 0.0; ++it) lo -= (step *= 2.0);
    if (D(lo) < 0.0 && D(hi) > 0.0) bisect(lo, hi);
  }
  // Above the highest pole: D -> -inf approaching it, D -> +inf far right.
  {
    double step = std::max(1.0, std::abs(P.back()) + std::abs(a.ebar));
    double lo = P.back() + off_into_gap(P.back(), step);
    for (int it = 0; it < 60 && D(lo) >= 0.0; ++it) {
      lo = P.back() + 0.5 * (lo - P.back());
    }
    double hi = P.back() + step;
    for (int it = 0; it < 120 && D(hi) <= 0.0; ++it) hi += (step *= 2.0);
    if (D(lo) < 0.0 && D(hi) > 0.0) bisect(lo, hi);
  }
  std::sort(zs.begin(), zs.end());
  return zs;
}

struct AxisPole {
  double x = 0.0;
  cplx residue;  // residue of the full two-leg product
};

struct PoleWindow {
  double x0 = 0.0;
  double lo = 0.0, hi = 0.0;
  cplx residue;
};

struct Leaf {
  double a = 0.0, c = 0.0;
  cplx val;
  double err = 0.0;
  int depth = 0;
  int window = -1;  // index into the window list, -1 for plain panels
  bool operator<(const Leaf& o) const { return err < o.err; }
};

}  // namespace

OverlapResult spectral_overlap(cplx z, const SpectralLeg& first,
                               const SpectralLeg& second,
                               const AmplitudeEvaluator& amps,
                               const OverlapOptions& opts) {
  if (z.imag() == 0.0 || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::invalid_argument("spectral_overlap: Im z must be nonzero");
  }
  if (!(opts.rel_tol > 0.0) || !(opts.cut_scale >= 2.0) || opts.max_depth < 4 ||
      opts.max_panels < 16) {
    throw std::invalid_argument("spectral_overlap: bad options");
  }
  // Normalize the legs: a level-level coupling with a vanishing drive weight
  // is the free form; drive-decoupled off-diagonal legs vanish identically.
  SpectralLeg L1 = first, L2 = second;
  auto normalize = [&](SpectralLeg& leg) -> bool {  // false: leg is zero
    if (leg.kind == SpectralLeg::Kind::ground_level) {
      return amps.eps0 * leg.d_row != 0.0;
    }
    if (leg.kind == SpectralLeg::Kind::level_level) {
      if (amps.eps0 * amps.eps0 * leg.d_row * leg.d_col == 0.0) {
        leg.coupled = false;
      }
      return leg.coupled || leg.e_row == leg.e_col;
    }
    return true;
  };
  if (!normalize(L1) || !normalize(L2)) return OverlapResult{};

  const double eta = z.imag();
  const bool need_d1 = uses_denominator(L1);
  const bool need_d2 = uses_denominator(L2);
  if (amps.b == 0.0 && (need_d1 || need_d2) && amps.continuum_cut) {
    throw std::invalid_argument(
        "spectral_overlap: undamped ground state against a branch-cut "
        "self-energy puts dressed poles on the integration line");
  }

  // ---- genuine on-axis poles of the first factor --------------------------
  std::vector<AxisPole> poles;
  auto leg2_at = [&](double x) { return leg_value(amps, L2, true, cplx(x, 0.0) - z); };
  auto d_up = [&](double e) { return denom_upper(amps, cplx(e, 0.0)); };
  const std::vector<double>& sp = amps.sigma_poles;
  switch (L1.kind) {
    case SpectralLeg::Kind::ground_ground:
      break;
    case SpectralLeg::Kind::ground_level:
      if (!is_sigma_pole(sp, L1.e_row)) {
        const cplx r1 = -kI * (amps.eps0 * L1.d_row) / d_up(L1.e_row);
        poles.push_back({L1.e_row, r1 * leg2_at(L1.e_row)});
      }
      break;
    case SpectralLeg::Kind::level_level:
      if (L1.e_row == L1.e_col) {
        if (!L1.coupled) {
          poles.push_back({L1.e_row, kI * leg2_at(L1.e_row)});
        } else if (!is_sigma_pole(sp, L1.e_row)) {
          throw std::invalid_argument(
              "spectral_overlap: self-label outside the self-energy pole set "
              "gives a second-order pole on the line");
        }
      } else if (L1.coupled) {
        const double w12 = amps.eps0 * amps.eps0 * L1.d_row * L1.d_col;
        if (!is_sigma_pole(sp, L1.e_row)) {
          const cplx r1 = kI * w12 / ((L1.e_row - L1.e_col) * d_up(L1.e_row));
          poles.push_back({L1.e_row, r1 * leg2_at(L1.e_row)});
        }
        if (!is_sigma_pole(sp, L1.e_col)) {
          const cplx r1 = kI * w12 / ((L1.e_col - L1.e_row) * d_up(L1.e_col));
          poles.push_back({L1.e_col, r1 * leg2_at(L1.e_col)});
        }
      }
      break;
  }
  // Undamped dressed states: real zeros of the first-factor denominator.
  std::vector<double> zeros;
  if (amps.b == 0.0 && (need_d1 || need_d2)) {
    zeros = dressed_zeros(amps);
    if (need_d1) {
      for (const double x0 : zeros) {
        // Numerical slope of the (real) denominator at the crossing.
        double hd = std::max(std::abs(x0), std::abs(amps.ebar)) * 1e-7 + 1e-300;
        if (!sp.empty()) {
          auto it = std::lower_bound(sp.begin(), sp.end(), x0);
          double dist = std::numeric_limits<double>::infinity();
          if (it != sp.end()) dist = std::min(dist, *it - x0);
          if (it != sp.begin()) dist = std::min(dist, x0 - *(it - 1));
          hd = std::min(hd, 1e-4 * dist);
        }
        const double dp =
            (d_up(x0 + hd).real() - d_up(x0 - hd).real()) / (2.0 * hd);
        cplx num(0.0, 0.0);
        switch (L1.kind) {
          case SpectralLeg::Kind::ground_ground:
            num = kI;
            break;
          case SpectralLeg::Kind::ground_level:
            num = -kI * (amps.eps0 * L1.d_row) / (x0 - L1.e_row);
            break;
          case SpectralLeg::Kind::level_level:
            num = kI * (amps.eps0 * amps.eps0 * L1.d_row * L1.d_col) /
                  ((x0 - L1.e_row) * (x0 - L1.e_col));
            break;
        }
        poles.push_back({x0, (num / dp) * leg2_at(x0)});
      }
    }
  }
  std::sort(poles.begin(), poles.end(),
            [](const AxisPole& a, const AxisPole& b) { return a.x < b.x; });

  // ---- feature list and window extents ------------------------------------
  std::vector<double> feats;
  auto add_feat = [&](double v) {
    if (std::isfinite(v)) feats.push_back(v);
  };
  auto add_leg_feats = [&](const SpectralLeg& leg, double shift) {
    if (leg.kind == SpectralLeg::Kind::ground_level) add_feat(leg.e_row + shift);
    if (leg.kind == SpectralLeg::Kind::level_level) {
      add_feat(leg.e_row + shift);
      add_feat(leg.e_col + shift);
    }
  };
  add_leg_feats(L1, 0.0);
  add_leg_feats(L2, z.real());
  for (const double p : sp) {
    add_feat(p);
    add_feat(p + z.real());
  }
  for (const double x0 : zeros) {
    add_feat(x0);
    add_feat(x0 + z.real());
  }
  add_feat(amps.ebar);
  add_feat(amps.ebar + z.real());
  if (amps.continuum_cut) {
    add_feat(0.0);
    add_feat(z.real());
  }
  double core = std::max({amps.b, std::abs(amps.ebar), std::abs(z), 1e-30});
  auto widen_core = [&](const SpectralLeg& leg) {
    if (leg.kind == SpectralLeg::Kind::ground_level) {
      core = std::max(core, std::abs(leg.e_row));
    }
    if (leg.kind == SpectralLeg::Kind::level_level) {
      core = std::max({core, std::abs(leg.e_row), std::abs(leg.e_col)});
    }
  };
  widen_core(L1);
  widen_core(L2);
  double xl = -opts.cut_scale * core;
  double xr = opts.cut_scale * core;
  if (!feats.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(feats.begin(), feats.end());
    xl = std::min(xl, *lo_it - 0.35 * (std::abs(*lo_it) + core));
    xr = std::max(xr, *hi_it + 0.35 * (std::abs(*hi_it) + core));
  }

  // ---- panel seeds: thinned features, windows straddling the poles --------
  const double sep = std::max(0.25 * std::abs(eta), (xr - xl) * 1e-13);
  std::sort(feats.begin(), feats.end());
  std::vector<double> seeds;
  for (const double f : feats) {
    if (f <= xl + sep || f >= xr - sep) continue;
    if (!seeds.empty() && f - seeds.back() < sep) continue;
    bool near_pole = false;
    for (const auto& p : poles) {
      if (std::abs(f - p.x) < sep) {
        near_pole = true;
        break;
      }
    }
    if (!near_pole) seeds.push_back(f);
  }
  std::vector<PoleWindow> windows;
  windows.reserve(poles.size());
  for (std::size_t k = 0; k < poles.size(); ++k) {
    const double x0 = poles[k].x;
    double dist = std::min(x0 - xl, xr - x0);
    if (k > 0) dist = std::min(dist, x0 - poles[k - 1].x);
    if (k + 1 < poles.size()) dist = std::min(dist, poles[k + 1].x - x0);
    auto it = std::lower_bound(seeds.begin(), seeds.end(), x0);
    if (it != seeds.end()) dist = std::min(dist, *it - x0);
    if (it != seeds.begin()) dist = std::min(dist, x0 - *(it - 1));
    double h = 0.45 * std::min(dist, 0.05 * (xr - xl));
    h = std::max(h, std::max(std::abs(x0), core) * 4e-13);
    windows.push_back({x0, x0 - h, x0 + h, poles[k].residue});
  }
  // Drop seeds swallowed by a window.
  {
    std::vector<double> kept;
    for (const double s : seeds) {
      bool inside = false;
      for (const auto& w : windows) {
        if (s > w.lo - sep && s < w.hi + sep) {
          inside = true;
          break;
        }
      }
      if (!inside) kept.push_back(s);
    }
    seeds.swap(kept);
  }
  std::vector<double> edges;
  edges.push_back(xl);
  for (const double s : seeds) edges.push_back(s);
  for (const auto& w : windows) {
    edges.push_back(w.lo);
    edges.push_back(w.hi);
  }
  edges.push_back(xr);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // ---- integrand ----------------------------------------------------------
  long evals = 0;
  auto product = [&](double x) {
    ++evals;
    return leg_value(amps, L1, false, cplx(x, 0.0)) * leg2_at(x);
  };
  auto integrand = [&](double x, int win) {
    cplx v = product(x);
    if (win >= 0) v -= windows[win].residue / (x - windows[win].x0);
    return v;
  };
  auto window_of = [&](double mid) {
    for (std::size_t k = 0; k < windows.size(); ++k) {
      if (mid > windows[k].lo && mid < windows[k].hi) {
        return static_cast<int>(k);
      }
    }
    return -1;
  };

  // ---- globally adaptive panel refinement ---------------------------------
  std::priority_queue<Leaf> heap;
  cplx total(0.0, 0.0);
  double abs_sum = 0.0;
  double total_err = 0.0;
  std::size_t n_panels = 0;
  auto push_leaf = [&](const Leaf& lf) {
    total += lf.val;
    abs_sum += std::abs(lf.val);
    total_err += lf.err;
    heap.push(lf);
    ++n_panels;
  };
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], c = edges[i + 1];
    if (!(c > a)) continue;
    const int win = window_of(0.5 * (a + c));
    auto f = [&](double x) { return integrand(x, win); };
    const cplx parent = cgl16(f, a, c);
    const double mid = 0.5 * (a + c);
    const cplx v1 = cgl16(f, a, mid);
    const cplx v2 = cgl16(f, mid, c);
    const double e_child = 0.5 * std::abs(parent - v1 - v2) + 1e-300;
    push_leaf({a, mid, v1, e_child, 1, win});
    push_leaf({mid, c, v2, e_child, 1, win});
  }
  while (n_panels < opts.max_panels && !heap.empty()) {
    const double tol_now =
        opts.rel_tol * std::max(std::abs(total), 1e-3 * abs_sum);
    if (total_err <= tol_now) break;
    const Leaf t = heap.top();
    heap.pop();
    if (t.depth >= opts.max_depth) continue;  // frozen: error stays counted
    auto f = [&](double x) { return integrand(x, t.window); };
    const double mid = 0.5 * (t.a + t.c);
    const cplx v1 = cgl16(f, t.a, mid);
    const cplx v2 = cgl16(f, mid, t.c);
    total += v1 + v2 - t.val;
    abs_sum += std::abs(v1) + std::abs(v2) - std::abs(t.val);
    const double e_child = 0.5 * std::abs(t.val - v1 - v2) + 1e-300;
    total_err += 2.0 * e_child - t.err;
    heap.push({t.a, mid, v1, e_child, t.depth + 1, t.window});
    heap.push({mid, t.c, v2, e_child, t.depth + 1, t.window});
    ++n_panels;
  }

  // ---- half-residue terms from the +i0 prescription -----------------------
  cplx sokhotski(0.0, 0.0);
  for (const auto& w : windows) sokhotski += -kI * kPi * w.residue;

  // ---- analytic tails: fit c2/x^2 + c3/x^3 beyond each cut ----------------
  double tail_err = 0.0;
  cplx tails(0.0, 0.0);
  double tail_abs = 0.0;
  auto fit_tail = [&](double edge, int sign) {
    const double fac[4] = {1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0};
    double u[4], t3[4];
    cplx v[4];
    double norm = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double x = sign * std::abs(edge) * fac[i];
      u[i] = 1.0 / (x * x);
      t3[i] = 1.0 / (x * x * x);
      v[i] = product(x);
      norm += std::norm(v[i]);
    }
    if (norm == 0.0) return cplx(0.0, 0.0);
    double suu = 0.0, sut = 0.0, stt = 0.0;
    cplx suv(0.0, 0.0), stv(0.0, 0.0);
    for (int i = 0; i < 4; ++i) {
      suu += u[i] * u[i];
      sut += u[i] * t3[i];
      stt += t3[i] * t3[i];
      suv += u[i] * v[i];
      stv += t3[i] * v[i];
    }
    const double det = suu * stt - sut * sut;
    if (det == 0.0) return cplx(0.0, 0.0);
    const cplx c2 = (stt * suv - sut * stv) / det;
    const cplx c3 = (suu * stv - sut * suv) / det;
    double res2 = 0.0;
    for (int i = 0; i < 4; ++i) {
      res2 += std::norm(v[i] - c2 * u[i] - c3 * t3[i]);
    }
    const double rel = std::sqrt(res2 / norm);
    const double X = std::abs(edge);
    const cplx tail = c2 / X + static_cast<double>(sign) * c3 / (2.0 * X * X);
    if (rel > 0.3) {
      std::ostringstream msg;
      msg << "spectral_overlap: tail-estimate failure at " << (sign > 0 ? "+" : "-")
          << X << " (relative fit residual " << rel << ")";
      throw std::runtime_error(msg.str());
    }
    tail_err += (rel + 0.02) * std::abs(tail);
    return tail;
  };
  tails += fit_tail(xr, +1);
  tails += fit_tail(xl, -1);
  tail_abs = std::abs(tails);

  OverlapResult out;
  const double two_pi = 2.0 * kPi;
  out.value = (total + sokhotski + tails) / two_pi;
  out.tail_abs = tail_abs / two_pi;
  out.est_error = (total_err + tail_err) / two_pi;
  out.evaluations = evals;
  return out;
}

OverlapResult h_abcd(cplx z, const SpectralLabel& a, const SpectralLabel& b,
                     const SpectralLabel& c, const SpectralLabel& d,
                     const AmplitudeEvaluator& amps,
                     const OverlapOptions& opts) {
  auto make_leg = [](const SpectralLabel& row, const SpectralLabel& col) {
    if (row.ground && col.ground) return SpectralLeg::gg();
    if (row.ground) return SpectralLeg::gl(col.energy, col.dipole);
    if (col.ground) return SpectralLeg::gl(row.energy, row.dipole);
    return SpectralLeg::ll(row.energy, row.dipole, col.energy, col.dipole);
  };
  // First factor <a|U|b>; reflected factor from <d|U|c>.
  return spectral_overlap(z, make_leg(a, b), make_leg(d, c), amps, opts);
}

// --------------------------------------------------------------------------
// Per-level collision coefficients (line-quadrature route)
// --------------------------------------------------------------------------

CoefficientSet coefficients(cplx z, double level_energy, double level_dipole,
                            bool bound, const AmplitudeEvaluator& amps,
                            const MemoryKernel& kernel,
                            const OverlapOptions& opts) {
  if (amps.eps0 * level_dipole == 0.0) {
    throw std::invalid_argument(
        "coefficients: level must be drive-coupled (eps0 * dipole != 0)");
  }
  CoefficientSet out;
  const double delta = level_energy - amps.ebar;
  const auto leg_gl = SpectralLeg::gl(level_energy, level_dipole);
  const auto leg_ll =
      SpectralLeg::ll(level_energy, level_dipole, level_energy, level_dipole,
                      bound);
  out.E = spectral_overlap(z, leg_gl, SpectralLeg::gg(), amps, opts).value /
          (amps.eps0 * level_dipole);
  out.F = spectral_overlap(z, SpectralLeg::gg(), leg_gl, amps, opts).value /
          (amps.eps0 * level_dipole);
  const double b = kernel.b;
  const cplx wt = kernel.wtilde(delta, z);
  const cplx wtm = kernel.wtilde_mirror(delta, z);
  out.G = cplx(0.0, 0.0);
  out.J = cplx(0.0, 0.0);
  if (b != 0.0 && wt != cplx(0.0, 0.0)) {
    out.G = b * wt *
            spectral_overlap(z, leg_ll, SpectralLeg::gg(), amps, opts).value;
  }
  if (b != 0.0 && wtm != cplx(0.0, 0.0)) {
    out.J = b * wtm *
            spectral_overlap(z, SpectralLeg::gg(), leg_ll, amps, opts).value;
  }
  out.C = bound ? b * (out.E - out.F) / z : cplx(0.0, 0.0);
  return out;
}

// --------------------------------------------------------------------------
// Resolvent-route solver
// --------------------------------------------------------------------------

struct MasterSolver::Workspace {
  std::vector<cplx> clam, cwgg;  // conj(lambda), conj(wgg)
  std::vector<cplx> Tj, Uk;      // ground-contracted double-sum partials
  cplx Hgggg{0.0, 0.0};
  std::vector<cplx> E, F, G, J, C, wt, wtm;
  std::vector<cplx> inv2, inv3;  // 1/(delta_n - delta_l -+ z); diagonal 0
  bool tables_ready = false;
  std::vector<cplx> alpha, beta, S, T;
  std::vector<cplx> u1, u2, u3, u4;
};

MasterSolver::MasterSolver(const TruncatedBasis& basis,
                           const NoiseModel& model) {
  basis.validate();
  if (!(model.amplitude_sq > 0.0) || !std::isfinite(model.amplitude_sq)) {
    throw std::invalid_argument("MasterSolver: amplitude_sq must be > 0");
  }
  if (!(model.bandwidth_b >= 0.0) || !std::isfinite(model.bandwidth_b)) {
    throw std::invalid_argument("MasterSolver: bandwidth must be finite, >= 0");
  }
  kernel_ = make_memory_kernel(model);
  b_ = model.bandwidth_b;
  eps0_ = std::sqrt(model.amplitude_sq);
  n_bound_ = basis.bound_energy.size();
  const std::size_t nl = n_bound_ + basis.bin_energy.size();
  if (nl == 0) {
    throw std::invalid_argument("MasterSolver: basis has no excited levels");
  }
  delta_.reserve(nl);
  dip_.reserve(nl);
  rw_.reserve(nl);
  for (std::size_t i = 0; i < n_bound_; ++i) {
    delta_.push_back(basis.bound_energy[i] - basis.mean_energy);
    dip_.push_back(basis.bound_dipole[i]);
  }
  for (std::size_t i = 0; i < basis.bin_energy.size(); ++i) {
    delta_.push_back(basis.bin_energy[i] - basis.mean_energy);
    dip_.push_back(basis.bin_dipole[i]);
  }
  for (std::size_t i = 0; i < nl; ++i) {
    if (!(dip_[i] > 0.0)) {
      throw std::invalid_argument(
          "MasterSolver: every level needs a positive dipole");
    }
    rw_.push_back(eps0_ * dip_[i] * eps0_ * dip_[i]);
  }
  {
    std::vector<double> sorted = delta_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      if (!(sorted[i + 1] > sorted[i])) {
        throw std::invalid_argument(
            "MasterSolver: degenerate level energies are not supported");
      }
    }
  }
  const std::size_t n = nl + 1;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
  m(0, 0) = cplx(0.0, -b_);
  for (std::size_t l = 0; l < nl; ++l) {
    const auto li = static_cast<Eigen::Index>(l + 1);
    m(li, li) = delta_[l];
    m(0, li) = -eps0_ * dip_[l];
    m(li, 0) = -eps0_ * dip_[l];
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("MasterSolver: eigendecomposition failed");
  }
  const Eigen::MatrixXcd& v = es.eigenvectors();
  Eigen::MatrixXcd vinv = v.partialPivLu().solve(
      Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(n)));
  lambda_.resize(n);
  wgg_.resize(n);
  wgl_.assign(nl * n, cplx(0.0, 0.0));
  wll_.assign(nl * n, cplx(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    lambda_[j] = es.eigenvalues()(ji);
    wgg_[j] = v(0, ji) * vinv(ji, 0);
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const auto li = static_cast<Eigen::Index>(l + 1);
    for (std::size_t j = 0; j < n; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      wgl_[l * n + j] = v(0, ji) * vinv(ji, li);
      wll_[l * n + j] = v(li, ji) * vinv(ji, li);
    }
  }
  cplx s(0.0, 0.0);
  for (const cplx& w : wgg_) s += w;
  if (std::abs(s - 1.0) > 1e-8 * static_cast<double>(n)) {
    throw std::runtime_error(
        "MasterSolver: spectral weights fail the completeness check");
  }
  if (nl <= 1200) {
    inv_dd_.assign(nl * nl, 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t k = 0; k < nl; ++k) {
        if (k != l) inv_dd_[l * nl + k] = 1.0 / (delta_[l] - delta_[k]);
      }
    }
  }
}

void MasterSolver::coefficient_pass(cplx z, Workspace& w) const {
  const std::size_t n = lambda_.size();
  const std::size_t nl = delta_.size();
  w.clam.resize(n);
  w.cwgg.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    w.clam[k] = std::conj(lambda_[k]);
    w.cwgg[k] = std::conj(wgg_[k]);
  }
  w.Tj.assign(n, cplx(0.0, 0.0));
  w.Uk.assign(n, cplx(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const cplx zj = z - lambda_[j];
    const cplx wj = wgg_[j];
    cplx tj(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx t = kI / (zj + w.clam[k]);
      tj += w.cwgg[k] * t;
      w.Uk[k] += wj * t;
    }
    w.Tj[j] = tj;
  }
  w.Hgggg = cplx(0.0, 0.0);
  for (std::size_t j = 0; j < n; ++j) w.Hgggg += wgg_[j] * w.Tj[j];
  w.E.resize(nl);
  w.F.resize(nl);
  w.G.resize(nl);
  w.J.resize(nl);
  w.C.resize(nl);
  w.wt.resize(nl);
  w.wtm.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    const cplx* gl_row = &wgl_[l * n];
    cplx se(0.0, 0.0), sf(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      se += gl_row[j] * w.Tj[j];
      sf += std::conj(gl_row[j]) * w.Uk[j];
    }
    const double ed = eps0_ * dip_[l];
    w.E[l] = se / ed;
    w.F[l] = sf / ed;
    w.wt[l] = kernel_.wtilde(delta_[l], z);
    w.wtm[l] = kernel_.wtilde_mirror(delta_[l], z);
    cplx sg(0.0, 0.0), sj(0.0, 0.0);
    if (b_ != 0.0 && !kernel_.white) {
      if (l < n_bound_) {
        const cplx* ll_row = &wll_[l * n];
        for (std::size_t j = 0; j < n; ++j) {
          sg += ll_row[j] * w.Tj[j];
          sj += std::conj(ll_row[j]) * w.Uk[j];
        }
      } else {
        // Free continuum bin: the level resolvent is bare.
        for (std::size_t k = 0; k < n; ++k) {
          sg += w.cwgg[k] * (kI / (z - delta_[l] + w.clam[k]));
        }
        for (std::size_t j = 0; j < n; ++j) {
          sj += wgg_[j] * (kI / (z + delta_[l] - lambda_[j]));
        }
      }
    }
    w.G[l] = b_ * w.wt[l] * sg;
    w.J[l] = b_ * w.wtm[l] * sj;
    w.C[l] = (l < n_bound_ && b_ != 0.0) ? b_ * (w.E[l] - w.F[l]) / z
                                         : cplx(0.0, 0.0);
  }
}

void MasterSolver::sweep_pass(cplx z, Workspace& w) const {
  const std::size_t nl = delta_.size();
  w.u1.resize(nl);
  w.u2.resize(nl);
  w.u3.resize(nl);
  w.u4.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    w.u1[l] = rw_[l] * w.beta[l] * w.F[l];
    w.u2[l] = rw_[l] * w.beta[l];
    w.u3[l] = rw_[l] * w.alpha[l];
    w.u4[l] = rw_[l] * w.alpha[l] * w.E[l];
  }
  const bool tables = !inv_dd_.empty();
  if (tables && !w.tables_ready) {
    w.inv2.assign(nl * nl, cplx(0.0, 0.0));
    w.inv3.assign(nl * nl, cplx(0.0, 0.0));
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t k = 0; k < nl; ++k) {
        if (k == l) continue;
        w.inv2[l * nl + k] = 1.0 / (delta_[k] - delta_[l] - z);
        w.inv3[l * nl + k] = 1.0 / (delta_[k] - delta_[l] + z);
      }
    }
    w.tables_ready = true;
  }
  for (std::size_t l = 0; l < nl; ++l) {
    cplx a1(0.0, 0.0), a2(0.0, 0.0), a3(0.0, 0.0), a4(0.0, 0.0);
    cplx b1(0.0, 0.0), b2(0.0, 0.0), b3(0.0, 0.0), b4(0.0, 0.0);
    if (tables) {
      const double* i1 = &inv_dd_[l * nl];
      const cplx* i2 = &w.inv2[l * nl];
      const cplx* i3 = &w.inv3[l * nl];
      for (std::size_t k = 0; k < nl; ++k) {
        a1 += i1[k] * w.u1[k];
        a2 += i1[k] * w.u2[k];
        a3 += i2[k] * w.u3[k];
        a4 += i2[k] * w.u4[k];
        b1 += i1[k] * w.u4[k];
        b2 += i1[k] * w.u3[k];
        b3 += i3[k] * w.u2[k];
        b4 += i3[k] * w.u1[k];
      }
    } else {
      for (std::size_t k = 0; k < nl; ++k) {
        if (k == l) continue;
        const double d1 = 1.0 / (delta_[l] - delta_[k]);
        const cplx d2 = 1.0 / (delta_[k] - delta_[l] - z);
        const cplx d3 = 1.0 / (delta_[k] - delta_[l] + z);
        a1 += d1 * w.u1[k];
        a2 += d1 * w.u2[k];
        a3 += d2 * w.u3[k];
        a4 += d2 * w.u4[k];
        b1 += d1 * w.u4[k];
        b2 += d1 * w.u3[k];
        b3 += d3 * w.u2[k];
        b4 += d3 * w.u1[k];
      }
    }
    w.S[l] = b_ * (a1 - w.F[l] * a2 - w.F[l] * a3 + a4);
    w.T[l] = b_ * (b1 - w.E[l] * b2 - w.E[l] * b3 + b4);
  }
}

SolverState MasterSolver::iterate(cplx z, int max_sweeps, double tol) const {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument("MasterSolver::iterate: Im z must be > 0");
  }
  if (max_sweeps < 1 || !(tol > 0.0)) {
    throw std::invalid_argument("MasterSolver::iterate: bad sweep controls");
  }
  Workspace w;
  coefficient_pass(z, w);
  const std::size_t nl = delta_.size();
  w.alpha.assign(nl, cplx(0.0, 0.0));
  w.beta.assign(nl, cplx(0.0, 0.0));
  w.S.assign(nl, cplx(0.0, 0.0));
  w.T.assign(nl, cplx(0.0, 0.0));
  SolverState st;
  st.z = z;
  bool converged = false;
  for (int it = 1; it <= max_sweeps; ++it) {
    double num = 0.0;
    double den = 1e-300;
    for (std::size_t l = 0; l < nl; ++l) {
      const double r = rw_[l];
      const cplx one_g = 1.0 - w.G[l];
      const cplx one_j = 1.0 - w.J[l];
      const cplx cr = w.C[l] * r;
      const cplx gap = one_g * one_j - w.wt[l] * w.wtm[l] * cr * cr;
      const cplx x = w.wtm[l] * cr;
      const cplx y = w.wt[l] * cr;
      const cplx rhs_a = w.E[l] + w.T[l];
      const cplx rhs_b = w.F[l] + w.S[l];
      const cplx na = (one_j * rhs_a + x * rhs_b) / gap;
      const cplx nb = (one_g * rhs_b + y * rhs_a) / gap;
      num = std::max(num,
                     std::abs(na - w.alpha[l]) + std::abs(nb - w.beta[l]));
      den = std::max(den, std::abs(na) + std::abs(nb));
      w.alpha[l] = na;
      w.beta[l] = nb;
    }
    const double resid = num / den;
    st.residual_history.push_back(resid);
    st.iteration_count = it;
    if (resid <= tol) {
      converged = true;
      break;
    }
    if (it < max_sweeps) sweep_pass(z, w);
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "MasterSolver::iterate: not converged after " << max_sweeps
        << " sweeps at z = (" << z.real() << ", " << z.imag()
        << "); residuals:";
    for (const double r : st.residual_history) msg << " " << r;
    throw std::runtime_error(msg.str());
  }
  st.residual = st.residual_history.back();
  cplx kk = w.Hgggg;
  for (std::size_t l = 0; l < nl; ++l) {
    kk += b_ * rw_[l] *
          (w.E[l] * w.wt[l] * w.alpha[l] + w.F[l] * w.wtm[l] * w.beta[l]);
  }
  st.kernel_K = kk;
  st.alphas = std::move(w.alpha);
  st.betas = std::move(w.beta);
  st.S = std::move(w.S);
  st.T = std::move(w.T);
  return st;
}

cplx MasterSolver::h_gggg(cplx z) const {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument("MasterSolver::h_gggg: Im z must be > 0");
  }
  const std::size_t n = lambda_.size();
  cplx acc(0.0, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx zj = z - lambda_[j];
    cplx tj(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      tj += std::conj(wgg_[k]) * (kI / (zj + std::conj(lambda_[k])));
    }
    acc += wgg_[j] * tj;
  }
  return acc;
}

CoefficientSet MasterSolver::level_coefficients(cplx z,
                                                std::size_t level) const {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument(
        "MasterSolver::level_coefficients: Im z must be > 0");
  }
  if (level >= delta_.size()) {
    throw std::out_of_range("MasterSolver::level_coefficients: bad level");
  }
  Workspace w;
  coefficient_pass(z, w);
  return {w.C[level], w.G[level], w.J[level], w.E[level], w.F[level]};
}

MasterSolver::LaplacePopulations MasterSolver::populations_point(
    cplx z, int max_sweeps, double tol) const {
  LaplacePopulations out;
  out.state = iterate(z, max_sweeps, tol);
  const cplx kk = out.state.kernel_K;
  const cplx denom = 1.0 - 2.0 * b_ * kk;
  out.rho_gg = kk / denom;
  cplx s(0.0, 0.0);
  for (std::size_t l = n_bound_; l < delta_.size(); ++l) {
    s += rw_[l] * (out.state.alphas[l] - out.state.betas[l]);
  }
  out.p_ion = s / (z * denom);
  return out;
}

// --------------------------------------------------------------------------
// Time-domain populations
// --------------------------------------------------------------------------

MasterSeries solve_populations(const TruncatedBasis& basis,
                               const NoiseModel& model,
                               const std::vector<double>& times,
                               const SolverOptions& opts) {
  if (times.empty()) {
    throw std::invalid_argument("solve_populations: empty time grid");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0 ||
        (i > 0 && times[i] < times[i - 1])) {
      throw std::invalid_argument(
          "solve_populations: times must be finite, nonnegative, "
          "nondecreasing");
    }
  }
  if (opts.jobs < 1 || opts.max_sweeps < 1 || !(opts.sweep_tol > 0.0) ||
      !(opts.x_half_scale > 0.0) || !(opts.window_ratio > 1.0)) {
    throw std::invalid_argument("solve_populations: bad options");
  }
  const MasterSolver solver(basis, model);
  const std::size_t n_t = times.size();
  MasterSeries out;
  out.times = times;
  out.rho_gg.assign(n_t, 0.0);
  out.p_ion.assign(n_t, 0.0);
  std::size_t i = 0;
  while (i < n_t && times[i] == 0.0) {
    out.rho_gg[i] = 1.0;
    out.p_ion[i] = 0.0;
    ++i;
  }
  while (i < n_t) {
    const double t0 = times[i];
    std::size_t j_end = i;
    while (j_end < n_t &&
           times[j_end] <= opts.window_ratio * t0 * (1.0 + 1e-12)) {
      ++j_end;
    }
    const std::vector<double> wt(times.begin() + static_cast<long>(i),
                                 times.begin() + static_cast<long>(j_end));
    const LaplaceGrid grid =
        make_laplace_grid(wt.back(), opts.x_half_scale / t0, 1e300, 1.4);
    const std::size_t n_half = (grid.n - 1) / 2;
    const std::size_t m = grid.n - n_half;
    std::vector<cplx> rv(grid.n), pv(grid.n);
    std::vector<int> counts(m, 0);
    std::vector<double> resids(m, 0.0);
    const int jobs = std::min<int>(opts.jobs, static_cast<int>(m));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    auto work = [&](int id) {
      try {
        for (std::size_t q = static_cast<std::size_t>(id); q < m;
             q += static_cast<std::size_t>(jobs)) {
          const std::size_t j = n_half + q;
          const auto p =
              solver.populations_point(grid.z(j), opts.max_sweeps,
                                       opts.sweep_tol);
          rv[j] = p.rho_gg;
          pv[j] = p.p_ion;
          counts[q] = p.state.iteration_count;
          resids[q] = p.state.residual;
        }
      } catch (...) {
        errors[static_cast<std::size_t>(id)] = std::current_exception();
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(jobs));
      for (int id = 0; id < jobs; ++id) pool.emplace_back(work, id);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t q = 0; q < m; ++q) {
      out.sweep_counts.push_back(counts[q]);
      out.final_residuals.push_back(resids[q]);
      out.max_sweeps_used = std::max(out.max_sweeps_used, counts[q]);
      out.max_residual = std::max(out.max_residual, resids[q]);
    }
    // The populations are real in time, so their transforms obey
    // F(-x + i eta) = conj F(x + i eta): mirror the evaluated half.
    for (std::size_t j = 0; j < n_half; ++j) {
      rv[j] = std::conj(rv[grid.n - 1 - j]);
      pv[j] = std::conj(pv[grid.n - 1 - j]);
    }
    // Subtract the slowly decaying parts analytically: the ground population
    // tends to its transform-dominant constant 1, the ion yield to its
    // saturation plateau estimated at the contour top.
    const cplx p0 = pv[n_half];
    const double c_ion = (-kI * grid.z(n_half) * p0).real();
    for (std::size_t j = 0; j < grid.n; ++j) {
      const cplx ref = kI / grid.z(j);
      rv[j] -= ref;
      pv[j] -= c_ion * ref;
    }
    const InversionResult ir = invert_laplace(grid, rv, wt);
    const InversionResult ip = invert_laplace(grid, pv, wt);
    for (std::size_t k = 0; k < wt.size(); ++k) {
      out.rho_gg[i + k] = 1.0 + ir.values[k];
      out.p_ion[i + k] = c_ion + ip.values[k];
    }
    out.max_imag_ratio = std::max(
        {out.max_imag_ratio, ir.max_imag_ratio, ip.max_imag_ratio});
    out.windows += 1;
    out.z_evaluations += static_cast<long>(m);
    i = j_end;
  }
  return out;
}

}  // namespace rydnoise
