#include "rydnoise/lindblad.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace rydnoise {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

// In the dressed eigenbasis (H = V diag(lambda) V^T) the ground projector is
// the rank-one pi = u u^T with u = V^T e_g, so the whole dissipator reduces
// to outer products of u with y = R u and x^T = u^T R:
//   dR/dt = -i (lambda_a - lambda_b) R_ab
//           + 2b [ (u.y) u_a u_b - (u_a x_b + y_a u_b) / 2 ].
// One evaluation is O(n^2); no matrix products appear.  x is contracted
// explicitly (not via conj(y)) so the map stays linear off the Hermitian
// subspace and roundoff deviations inherit the generator's damping.
struct Rhs {
  const VectorXd& lam;
  const VectorXd& u;
  double two_b;

  void operator()(const MatrixXcd& r, MatrixXcd& out) const {
    const Eigen::Index n = r.rows();
    const VectorXcd y = r * u;
    const VectorXcd x = r.transpose() * u;
    const cplx q = u.cast<cplx>().dot(y);  // u real: plain contraction
    for (Eigen::Index b = 0; b < n; ++b) {
      const cplx xb = x[b];
      for (Eigen::Index a = 0; a < n; ++a) {
        const cplx phase(0.0, lam[b] - lam[a]);
        out(a, b) = phase * r(a, b) +
                    two_b * (q * u[a] * u[b] -
                             0.5 * (u[a] * xb + y[a] * u[b]));
      }
    }
  }
};

void rk4_step(const Rhs& rhs, MatrixXcd& r, double dt, MatrixXcd& k1,
              MatrixXcd& k2, MatrixXcd& k3, MatrixXcd& k4, MatrixXcd& tmp) {
  rhs(r, k1);
  tmp = r + (0.5 * dt) * k1;
  rhs(tmp, k2);
  tmp = r + (0.5 * dt) * k2;
  rhs(tmp, k3);
  tmp = r + dt * k3;
  rhs(tmp, k4);
  r += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

LindbladSeries pdm_lindblad(const TruncatedBasis& basis,
                            const NoiseModel& model,
                            const std::vector<double>& t_grid,
                            const LindbladOptions& opts) {
  basis.validate();
  model.validate();
  if (model.kind != NoiseKind::pdm) {
    throw std::invalid_argument(
        "pdm_lindblad: requires a pure phase-diffusion model (finite-cutoff "
        "fields carry memory beyond a Lindblad generator)");
  }
  if (t_grid.empty()) throw std::invalid_argument("pdm_lindblad: empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i]) || t_grid[i] < 0.0 ||
        (i > 0 && t_grid[i] < t_grid[i - 1])) {
      throw std::invalid_argument(
          "pdm_lindblad: time grid must be finite, non-negative, ascending");
    }
  }
  if (!std::isfinite(opts.dt) || opts.dt < 0.0) {
    throw std::invalid_argument("pdm_lindblad: dt must be finite and >= 0");
  }

  const std::size_t n_bound = basis.bound_energy.size();
  const std::size_t n_bins = basis.bin_energy.size();
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  const double eps0 = std::sqrt(model.amplitude_sq);
  const double b = model.bandwidth_b;

  // Rotating-frame Hamiltonian: ground at 0, levels at their detunings.
  MatrixXd h = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < n_bound; ++k) {
    const Eigen::Index j = static_cast<Eigen::Index>(1 + k);
    h(j, j) = basis.bound_energy[k] - basis.mean_energy;
    h(0, j) = h(j, 0) = -eps0 * basis.bound_dipole[k];
  }
  for (std::size_t k = 0; k < n_bins; ++k) {
    const Eigen::Index j = static_cast<Eigen::Index>(1 + n_bound + k);
    h(j, j) = basis.bin_energy[k] - basis.mean_energy;
    h(0, j) = h(j, 0) = -eps0 * basis.bin_dipole[k];
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("pdm_lindblad: eigendecomposition failed");
  }
  const VectorXd lam = es.eigenvalues();
  const MatrixXd v = es.eigenvectors();  // columns; row i = bare level i
  const VectorXd u = v.row(0).transpose();

  double dt = opts.dt;
  if (dt == 0.0) {
    const double spread = lam[n - 1] - lam[0];
    dt = std::numeric_limits<double>::infinity();
    if (spread > 0.0) dt = std::min(dt, 0.2 / spread);
    if (b > 0.0) dt = std::min(dt, 0.05 / b);
    if (!std::isfinite(dt)) dt = 1.0;  // static problem: any step is exact
  }

  const Rhs rhs{lam, u, 2.0 * b};
  MatrixXcd r = (u * u.transpose()).cast<cplx>();
  MatrixXcd k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);

  LindbladSeries out;
  out.times = t_grid;
  out.ground.reserve(t_grid.size());
  out.bound_sum.reserve(t_grid.size());
  out.continuum.reserve(t_grid.size());
  out.min_eigenvalue = 1.0;

  const auto bare_population = [&](std::size_t i) {
    const VectorXd row = v.row(static_cast<Eigen::Index>(i)).transpose();
    return (row.cast<cplx>().dot(r * row)).real();
  };

  double t_now = 0.0;
  for (double t_rec : t_grid) {
    const double gap = t_rec - t_now;
    if (gap > 0.0) {
      const auto steps = static_cast<long>(std::ceil(gap / dt - 1e-9));
      const double h_step = gap / static_cast<double>(std::max(steps, 1L));
      for (long s = 0; s < std::max(steps, 1L); ++s)
        rk4_step(rhs, r, h_step, k1, k2, k3, k4, tmp);
      t_now = t_rec;
    }

    out.ground.push_back(bare_population(0));
    double bsum = 0.0, csum = 0.0;
    for (std::size_t i = 0; i < n_bound; ++i) bsum += bare_population(1 + i);
    for (std::size_t i = 0; i < n_bins; ++i)
      csum += bare_population(1 + n_bound + i);
    out.bound_sum.push_back(bsum);
    out.continuum.push_back(csum);
    if (n_bins > 0) {
      out.max_edge_population =
          std::max(out.max_edge_population, bare_population(basis.size() - 1));
    }

    out.max_trace_error =
        std::max(out.max_trace_error, std::abs(r.trace().real() - 1.0) +
                                          std::abs(r.trace().imag()));
    out.max_hermiticity_error = std::max(
        out.max_hermiticity_error,
        (r - r.adjoint()).cwiseAbs().maxCoeff());
    if (opts.track_spectrum) {
      Eigen::SelfAdjointEigenSolver<MatrixXcd> spec(
          0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
      out.min_eigenvalue =
          std::min(out.min_eigenvalue, spec.eigenvalues().minCoeff());
    }
  }
  if (!opts.track_spectrum) out.min_eigenvalue = 0.0;
  return out;
}

}  // namespace rydnoise
