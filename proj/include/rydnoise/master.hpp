#pragma once
// Laplace-domain master-equation solver for the noise-driven Rydberg comb.
//
// The ground-state population and the ionized fraction are obtained from a
// closed set of per-level equations in the Laplace variable z.  The pieces:
//
//  * a memory kernel for finite-cutoff frequency noise, evaluated as a
//    bottom-up continued fraction over the hierarchy of noise responses
//    (white phase diffusion collapses it to a constant);
//  * dressed-resolvent amplitudes i/(z - H_eff), with the ground state
//    damped at the noise bandwidth and its self-energy supplied by either
//    the closed ladder form or an explicit truncated-basis pole sum;
//  * two-sided spectral overlaps of two such amplitudes along the real
//    axis, done by pole-aware adaptive panel quadrature with analytic
//    tail estimates;
//  * per-level coefficient assembly and a damped fixed-point sweep that
//    closes the level amplitudes (alpha, beta) on themselves;
//  * population series through the shared Fourier-Laplace inversion grid.
//
// The quadrature route evaluates the coefficients from their defining line
// integrals; MasterSolver evaluates the same objects as closed double sums
// over the dressed spectrum of the truncated Hamiltonian.  The two routes
// are cross-checked in the tests and must agree to quadrature accuracy.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "rydnoise/basis.hpp"
#include "rydnoise/noise.hpp"
#include "rydnoise/qdt.hpp"

namespace rydnoise {

// ------------------------------------------------------------------------
// Memory kernel
// ------------------------------------------------------------------------

// Deepest element alpha~^0 of the continued fraction
//   1/alpha~^n = (n+1) + i zeta/beta + (b/beta) (n+2) alpha~^{n+1}
// truncated with alpha~^{depth+1} = 0.  zeta is the complex detuning
// argument (level energy minus mean energy minus the Laplace variable).
// beta = +inf returns 1 exactly (white-noise limit).
std::complex<double> continued_fraction(double b, double beta,
                                        std::complex<double> zeta, int depth);

// Laplace-domain memory weights of the noise correlator.  For white phase
// diffusion (beta = inf) the weights w~ vanish identically; for a finite
// cutoff they are O(( |zeta| + b ) / beta) and feed the level equations.
struct MemoryKernel {
  double b = 0.0;  // noise bandwidth (a.u.)
  double beta = std::numeric_limits<double>::infinity();  // frequency cutoff
  int depth = 0;       // continued-fraction truncation actually used
  bool white = true;   // beta = inf: alpha0 == 1, wtilde == 0

  // alpha~^0 at complex argument zeta.
  std::complex<double> alpha0(std::complex<double> zeta) const;

  // w~(z) for a level detuned by delta from the mean energy, and the
  // reflected partner w~*(-z) entering the time-reversed leg.
  std::complex<double> wtilde(double delta, std::complex<double> z) const;
  std::complex<double> wtilde_mirror(double delta,
                                     std::complex<double> z) const;
};

// Build the kernel for an analytic noise model.  The truncation depth is
// chosen adaptively (20, 40, ... doubling) until a 50% deeper evaluation
// agrees to 1e-8 on a spread of probe arguments; failure to converge by
// depth 5120 throws std::runtime_error quoting the largest growth
// coefficient |b/beta (n+2)|.  Tabulated noise has no analytic hierarchy
// and throws std::invalid_argument.
MemoryKernel make_memory_kernel(const NoiseModel& model);

// ------------------------------------------------------------------------
// Dressed-resolvent amplitudes
// ------------------------------------------------------------------------

// Matrix elements of i/(z - H_eff) for the driven comb, where H_eff damps
// the ground state at the noise bandwidth (-i b |g><g|) and the ground
// self-energy sigma(z) sums the level ladder.  sigma must be Schwarz
// symmetric on the whole plane (sigma(conj z) = conj sigma(z)) so that the
// reflected factors of the two-sided overlaps evaluate through the same
// function below the axis.
struct AmplitudeEvaluator {
  std::function<std::complex<double>(std::complex<double>)> sigma;
  double ebar = 0.0;  // mean excited energy reached by the drive (a.u.)
  double b = 0.0;     // ground damping = noise bandwidth (a.u.)
  double eps0 = 1.0;  // field normalization multiplying every dipole
  // Sorted energies at which sigma has simple poles (bound levels and, for
  // a truncated basis, the bin centers).  Used by the line quadrature to
  // seed panels and classify label poles.
  std::vector<double> sigma_poles;
  // True when sigma carries a branch cut on the positive real axis (closed
  // ladder form) instead of being a finite pole sum.
  bool continuum_cut = false;

  // D(z) = z + i b - ebar - sigma(z).
  std::complex<double> denominator(std::complex<double> z) const;
  // <g| i/(z - H_eff) |g> = i / D(z).
  std::complex<double> gg(std::complex<double> z) const;
  // <g| i/(z - H_eff) |n> for a level at energy e with dipole d.
  std::complex<double> g_level(std::complex<double> z, double e,
                               double d) const;
  // <n| i/(z - H_eff) |l>; the diagonal term i/(z - e) appears when the
  // two labels coincide (compared by energy).
  std::complex<double> level_level(std::complex<double> z, double e_row,
                                   double d_row, double e_col,
                                   double d_col) const;
};

// Closed-ladder amplitudes: sigma is the analytic whole-plane self-energy
// of the Rydberg series, gamma the flat golden-rule rate at threshold.
AmplitudeEvaluator make_amplitudes(const QdtSystem& system, double gamma,
                                   double b, double amplitude_sq = 1.0);

// Truncated-basis amplitudes: sigma is the explicit pole sum over the
// basis levels and bins with weights (eps0 d_i)^2.
AmplitudeEvaluator make_amplitudes(const TruncatedBasis& basis,
                                   const NoiseModel& model);

// ------------------------------------------------------------------------
// Two-sided spectral overlaps
// ------------------------------------------------------------------------

// One factor of an overlap: which resolvent matrix element, and whether a
// level-level element keeps its drive-coupling part.  The bound-branch
// gate of the collision coefficients drops the coupling for continuum
// labels, leaving the free i/(z - e) form.
struct SpectralLeg {
  enum class Kind { ground_ground, ground_level, level_level };
  Kind kind = Kind::ground_ground;
  double e_row = 0.0, d_row = 0.0;
  double e_col = 0.0, d_col = 0.0;
  bool coupled = true;

  static SpectralLeg gg() { return {}; }
  static SpectralLeg gl(double e, double d) {
    return {Kind::ground_level, e, d, 0.0, 0.0, true};
  }
  static SpectralLeg ll(double e_row, double d_row, double e_col,
                        double d_col, bool coupled = true) {
    return {Kind::level_level, e_row, d_row, e_col, d_col, coupled};
  }
};

struct OverlapOptions {
  double rel_tol = 1e-6;     // target relative accuracy of the line integral
  double cut_scale = 60.0;   // window half-width in units of the coarse scale
  int max_depth = 42;        // panel bisection limit (beyond: error recorded)
  std::size_t max_panels = 200000;
};

struct OverlapResult {
  std::complex<double> value;
  double tail_abs = 0.0;   // magnitude of the analytic tail contribution
  double est_error = 0.0;  // accumulated quadrature + tail error estimate
  long evaluations = 0;    // integrand evaluations spent
};

// (1/2pi) integral over the real axis of
//   [first leg at z1 + i0] x [second leg reflected at z1 - z],
// where the reflected factor is the conjugate-coefficient family of the
// second matrix element (equal to conj(A(conj(z1 - z))) off the axis).
// Requires Im z != 0.  Throws std::invalid_argument for label structures
// with second-order on-axis poles (continuum self-label against a branch-
// cut sigma) and std::runtime_error on tail-estimate failure.
OverlapResult spectral_overlap(std::complex<double> z,
                               const SpectralLeg& first,
                               const SpectralLeg& second,
                               const AmplitudeEvaluator& amps,
                               const OverlapOptions& opts = {});

// Label for one slot of the four-index overlap.
struct SpectralLabel {
  bool ground = true;
  double energy = 0.0;
  double dipole = 0.0;

  static SpectralLabel g() { return {}; }
  static SpectralLabel level(double e, double d) { return {false, e, d}; }
};

// H_abcd(z): overlap of <a|U(z1+i0)|b> with the reflected conjugate of
// <d|U|c>.  Satisfies the Hermitian pairing H_abcd(z) = conj(H_dcba(-conj z)).
OverlapResult h_abcd(std::complex<double> z, const SpectralLabel& a,
                     const SpectralLabel& b, const SpectralLabel& c,
                     const SpectralLabel& d, const AmplitudeEvaluator& amps,
                     const OverlapOptions& opts = {});

// ------------------------------------------------------------------------
// Per-level collision coefficients
// ------------------------------------------------------------------------

struct CoefficientSet {
  std::complex<double> C, G, J, E, F;
};

// Line-quadrature evaluation of the five coefficients of one level at
// Laplace point z.  `bound` selects the bound branch: drive-coupled
// level-level overlaps in G and J and a nonzero C = b (E - F)/z; continuum
// bins get the free-level forms and C = 0.
CoefficientSet coefficients(std::complex<double> z, double level_energy,
                            double level_dipole, bool bound,
                            const AmplitudeEvaluator& amps,
                            const MemoryKernel& kernel,
                            const OverlapOptions& opts = {});

// ------------------------------------------------------------------------
// Self-consistent solver
// ------------------------------------------------------------------------

// Converged per-level amplitudes at one Laplace point, plus the residual
// history of the sweep that produced them.
struct SolverState {
  std::complex<double> z;
  std::vector<std::complex<double>> alphas, betas;  // per level
  std::vector<std::complex<double>> S, T;           // cross-level sums
  std::complex<double> kernel_K;  // scalar kernel K(z) of the ground equation
  int iteration_count = 0;
  double residual = 0.0;  // last sweep-to-sweep relative change
  std::vector<double> residual_history;
};

struct SolverOptions {
  int max_sweeps = 50;
  double sweep_tol = 1e-8;
  int jobs = 1;                 // worker threads across Laplace points
  double x_half_scale = 400.0;  // contour half-width = this / (window t_lo)
  double window_ratio = 8.0;    // max t_hi/t_lo per inversion window
};

// Resolvent-route evaluator on a truncated basis: one eigendecomposition of
// the damped Hamiltonian up front, then every coefficient is a double sum
// over dressed states -- no line quadrature.  All evaluation methods are
// const and safe to call concurrently.
class MasterSolver {
 public:
  MasterSolver(const TruncatedBasis& basis, const NoiseModel& model);

  std::size_t levels() const { return delta_.size(); }
  const MemoryKernel& kernel() const { return kernel_; }

  // Ground-ground overlap H_gggg(z) (the b -> 0 and white-noise kernel K).
  std::complex<double> h_gggg(std::complex<double> z) const;

  // The coefficient set of one level, for cross-checks against the
  // quadrature route.
  CoefficientSet level_coefficients(std::complex<double> z,
                                    std::size_t level) const;

  // Run the self-consistency sweep at one Laplace point (Im z > 0).
  // Throws std::runtime_error with the residual history if the sweep fails
  // to reach tol within max_sweeps.
  SolverState iterate(std::complex<double> z, int max_sweeps = 50,
                      double tol = 1e-8) const;

  // Laplace-domain populations at one point.
  struct LaplacePopulations {
    std::complex<double> rho_gg;
    std::complex<double> p_ion;
    SolverState state;
  };
  LaplacePopulations populations_point(std::complex<double> z,
                                       int max_sweeps = 50,
                                       double tol = 1e-8) const;

 private:
  struct Workspace;
  void coefficient_pass(std::complex<double> z, Workspace& w) const;
  void sweep_pass(std::complex<double> z, Workspace& w) const;

  MemoryKernel kernel_;
  double b_ = 0.0;
  double eps0_ = 1.0;
  std::size_t n_bound_ = 0;
  std::vector<double> delta_;  // level detunings from the mean energy
  std::vector<double> dip_;    // level dipoles (field excluded)
  std::vector<double> rw_;     // coupling weights R_l = (eps0 d_l)^2
  // Dressed spectrum of the damped Hamiltonian in the detuning frame and
  // the spectral weights contracted with ground/level projectors.
  std::vector<std::complex<double>> lambda_;  // eigenvalues
  std::vector<std::complex<double>> wgg_;     // <g|j><j|g>, size N
  std::vector<std::complex<double>> wgl_;     // <g|j><j|l>, L x N row-major
  std::vector<std::complex<double>> wll_;     // <l|j><j|l>, L x N row-major
  std::vector<double> inv_dd_;                // 1/(delta_l - delta_n), L x L
};

// Time-domain populations through the shared Fourier-Laplace inversion
// grid.  Times must be nondecreasing and nonnegative; t = 0 returns the
// exact initial condition.  The contour is split into geometric windows of
// span window_ratio, each inverted on its own grid; the Hermitian mirror
// symmetry of the populations halves the evaluations per window.
struct MasterSeries {
  std::vector<double> times;
  std::vector<double> rho_gg;
  std::vector<double> p_ion;
  // Diagnostics, one entry per evaluated Laplace point.
  std::vector<int> sweep_counts;
  std::vector<double> final_residuals;
  int max_sweeps_used = 0;
  double max_residual = 0.0;
  double max_imag_ratio = 0.0;  // worst imaginary leakage of the inversion
  std::size_t windows = 0;
  long z_evaluations = 0;
};

MasterSeries solve_populations(const TruncatedBasis& basis,
                               const NoiseModel& model,
                               const std::vector<double>& times,
                               const SolverOptions& opts = {});

}  // namespace rydnoise
