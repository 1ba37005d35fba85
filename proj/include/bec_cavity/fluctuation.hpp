#ifndef BEC_CAVITY_FLUCTUATION_HPP
#define BEC_CAVITY_FLUCTUATION_HPP

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "bec_cavity/errors.hpp"
#include "bec_cavity/grid.hpp"
#include "bec_cavity/meanfield.hpp"
#include "bec_cavity/params.hpp"

namespace bec_cavity {

struct FluctuationOptions {
  bool subtract_mu = true;
  /// Restricts atomic fluctuations to the complement of phi. With this off the
  /// zero mode is defective whenever U0 != 0 and no stationary depletion exists.
  bool project_condensate = true;
};

/// Linear generator of (da, da+, dPsi(x_j), dPsi+(x_j)).
///
/// Layout: 0 = da, 1 = da+, 2..Ng+1 = dPsi, Ng+2..2Ng+1 = dPsi+.
struct FluctuationMatrix {
  Eigen::MatrixXcd m;
  std::complex<double> a_diag;   ///< -delta_c + N u_avg - i kappa
  int ng = 0;
  double dx = 0.0;
  double kappa = 0.0;
  Eigen::VectorXd phi;
  FluctuationOptions options;

  Eigen::Index dim() const { return m.rows(); }
  Eigen::Index psi(int j) const { return 2 + j; }
  Eigen::Index psi_dag(int j) const { return 2 + ng + j; }
};

/// Swaps 0 <-> 1 and the dPsi block with the dPsi+ block.
inline Eigen::VectorXcd gamma_transform(const Eigen::Ref<const Eigen::VectorXcd>& v, int ng) {
  if (v.size() != 2 * ng + 2) throw ValidationError("gamma_transform: length mismatch");
  Eigen::VectorXcd out(v.size());
  out[0] = v[1];
  out[1] = v[0];
  out.segment(2, ng) = v.segment(2 + ng, ng);
  out.segment(2 + ng, ng) = v.segment(2, ng);
  return out;
}

inline Eigen::MatrixXcd gamma_conjugate(const Eigen::MatrixXcd& m, int ng) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n || n != 2 * ng + 2) throw ValidationError("gamma_conjugate: shape mismatch");
  Eigen::VectorXi perm(n);
  perm[0] = 1;
  perm[1] = 0;
  for (int j = 0; j < ng; ++j) {
    perm[2 + j] = 2 + ng + j;
    perm[2 + ng + j] = 2 + j;
  }
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m(perm[r], perm[c]);
  return out;
}

/// max |(Gamma M Gamma + M*)_{ij}|.
inline double symmetry_defect(const FluctuationMatrix& fm) {
  return (gamma_conjugate(fm.m, fm.ng) + fm.m.conjugate()).cwiseAbs().maxCoeff();
}

/// ||M M+ - M+ M||_F / ||M||_F^2.
inline double non_normality(const Eigen::MatrixXcd& m) {
  const double scale = m.squaredNorm();
  if (scale == 0.0) return 0.0;
  return (m * m.adjoint() - m.adjoint() * m).norm() / scale;
}

inline FluctuationMatrix build_matrix(const MeanFieldState& state, const SystemParams& params,
                                      const Grid& grid, const FluctuationOptions& opt = {}) {
  using namespace std::complex_literals;
  const SystemParams p = validate(params);
  if (!state.convergence.converged) throw ValidationError("build_matrix: mean-field state not converged");
  const int ng = grid.size();
  if (state.phi.size() != ng || p.grid_points != ng)
    throw ValidationError("build_matrix: state and grid sizes differ");
  if (state.phi.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw ValidationError("build_matrix: phi is not gauge-fixed real");

  const double dx = grid.dx();
  const double sqrt_n = std::sqrt(static_cast<double>(p.n_atoms));
  const Eigen::VectorXd phi = state.phi.real();
  const Eigen::VectorXd u = potential_profile(grid, p.u0);
  const std::complex<double> alpha = state.alpha;
  const std::complex<double> a = -p.delta_c + static_cast<double>(p.n_atoms) * state.u_avg - 1i * p.kappa;

  Eigen::VectorXd y = sqrt_n * phi.cwiseProduct(u);
  Eigen::MatrixXd h = kinetic_matrix(grid);
  h.diagonal() += state.intensity() * u;
  if (opt.subtract_mu) h.diagonal().array() -= state.mu;
  if (opt.project_condensate) {
    y -= sqrt_n * state.u_avg * phi;
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(ng, ng) - dx * phi * phi.transpose();
    h = q * h * q;
    h = 0.5 * (h + h.transpose()).eval();
  }

  FluctuationMatrix fm;
  fm.ng = ng;
  fm.dx = dx;
  fm.kappa = p.kappa;
  fm.a_diag = a;
  fm.phi = phi;
  fm.options = opt;
  const Eigen::Index n = 2 * ng + 2;
  fm.m = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd& m = fm.m;

  m(0, 0) = a;
  m(1, 1) = -std::conj(a);
  for (int j = 0; j < ng; ++j) {
    const Eigen::Index r3 = 2 + j;
    const Eigen::Index r4 = 2 + ng + j;
    m(0, r3) = m(0, r4) = alpha * y[j] * dx;
    m(1, r3) = m(1, r4) = -std::conj(alpha) * y[j] * dx;
    m(r3, 0) = std::conj(alpha) * y[j];
    m(r3, 1) = alpha * y[j];
    m(r4, 0) = -std::conj(alpha) * y[j];
    m(r4, 1) = -alpha * y[j];
  }
  m.block(2, 2, ng, ng) = h.cast<std::complex<double>>();
  m.block(2 + ng, 2 + ng, ng, ng) = -h.cast<std::complex<double>>();
  return fm;
}

/// (0, 0, phi, -phi): the phase mode of the condensate.
inline Eigen::VectorXcd goldstone_vector(const FluctuationMatrix& fm) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(fm.dim());
  v.segment(2, fm.ng) = fm.phi.cast<std::complex<double>>();
  v.segment(2 + fm.ng, fm.ng) = -fm.phi.cast<std::complex<double>>();
  return v;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_FLUCTUATION_HPP
