#ifndef BEC_CAVITY_MEANFIELD_HPP
#define BEC_CAVITY_MEANFIELD_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "bec_cavity/errors.hpp"
#include "bec_cavity/grid.hpp"
#include "bec_cavity/params.hpp"

namespace bec_cavity {

struct MeanFieldOptions {
  double itp_dt = 1e-3;     ///< imaginary-time step, 1/omega_R
  double tol_phi = 1e-9;    ///< stop when max|phi_new - phi_old| < tol_phi * itp_dt
  double tol_alpha = 1e-10;
  double mixing = 0.3;      ///< under-relaxation of the cavity amplitude, in (0, 1]
  long max_iters = 1000000;
  /// Removes the O(dt^2) splitting bias after the split-step stage converges.
  bool refine = true;
  /// Holds the cavity amplitude fixed (external lattice of depth |alpha|^2 u0).
  std::optional<std::complex<double>> frozen_alpha;
  long history_stride = 500;
};

struct IterationRecord {
  long iteration;
  double phi_step;
  double alpha_step;
  std::complex<double> alpha;
};

struct ConvergenceInfo {
  bool converged = false;
  long split_step_iterations = 0;
  long refine_iterations = 0;
  double phi_step = 0.0;          ///< last max|phi_new - phi_old|
  double alpha_step = 0.0;        ///< last |alpha_new - alpha_old|
  double self_consistency = 0.0;  ///< |alpha - steady_alpha(u_avg)|
  double eigen_residual = 0.0;    ///< max|H0 phi - mu phi|
};

struct MeanFieldState {
  Eigen::VectorXcd phi;           ///< real, nonnegative, integrate(|phi|^2) = 1
  std::complex<double> alpha;
  double u_avg = 0.0;             ///< integral of phi U phi
  double mu = 0.0;                ///< <phi|H0|phi>
  bool heating_regime = false;    ///< delta_c - N u_avg > 0
  ConvergenceInfo convergence;
  std::vector<IterationRecord> history;

  double intensity() const { return std::norm(alpha); }
};

/// Stationary cavity amplitude for a given condensate-averaged light shift.
inline std::complex<double> steady_alpha(const SystemParams& p, double u_avg) {
  using namespace std::complex_literals;
  const double n = static_cast<double>(p.n_atoms);
  return 1i * p.eta / (p.delta_c - n * u_avg + 1i * p.kappa);
}

/// <phi|U|phi> with the grid quadrature.
inline double expectation(const Grid& grid, const Eigen::VectorXd& values, const Eigen::VectorXcd& phi) {
  return (phi.cwiseAbs2().array() * values.array()).sum() * grid.dx();
}

inline void normalize(const Grid& grid, Eigen::VectorXcd& phi) {
  phi /= std::sqrt(phi.squaredNorm() * grid.dx());
}

/// E[phi] = <phi|K|phi> + intensity <phi|U|phi>.
inline double energy(const Grid& grid, SpectralKinetic& kinetic, const Eigen::VectorXd& potential,
                     double intensity, const Eigen::VectorXcd& phi) {
  const Eigen::VectorXcd kphi = kinetic.apply(phi);
  return phi.dot(kphi).real() * grid.dx() + intensity * expectation(grid, potential, phi);
}

/// Second-order split-step for imaginary time under K + intensity * U.
class SplitStepPropagator {
public:
  SplitStepPropagator(const Grid& grid, Eigen::VectorXd potential, double dt)
      : grid_(grid), kinetic_(grid), potential_(std::move(potential)), dt_(dt) {}

  /// One step of length dt followed by renormalization.
  Eigen::VectorXcd step(const Eigen::VectorXcd& phi, double intensity) {
    const Eigen::ArrayXd half = (-0.5 * dt_ * intensity * potential_.array()).exp();
    Eigen::VectorXcd next = (half * phi.array()).matrix();
    next = kinetic_.propagate(next, dt_);
    next.array() *= half;
    normalize(grid_, next);
    return next;
  }

private:
  const Grid& grid_;
  SpectralKinetic kinetic_;
  Eigen::VectorXd potential_;
  double dt_;
};

namespace detail {

inline void check_options(const MeanFieldOptions& o) {
  if (!(o.itp_dt > 0.0) || !(o.tol_phi > 0.0) || !(o.tol_alpha > 0.0) || o.max_iters < 1)
    throw ValidationError("mean-field solver knobs must be positive");
  if (!(o.mixing > 0.0 && o.mixing <= 1.0)) throw ValidationError("mixing must lie in (0, 1]");
}

/// Removes the global phase so that phi is real and nonnegative at the potential minimum.
inline void fix_gauge(Eigen::VectorXcd& phi, const Eigen::VectorXd& potential) {
  Eigen::Index anchor = 0;
  if (potential.maxCoeff() != potential.minCoeff()) potential.minCoeff(&anchor);
  else phi.cwiseAbs().maxCoeff(&anchor);
  const std::complex<double> ref = phi[anchor];
  if (std::abs(ref) > 0.0) phi *= std::conj(ref) / std::abs(ref);
  phi = phi.real().cast<std::complex<double>>();
}

} // namespace detail

/// Self-consistent condensate and cavity field by imaginary-time propagation.
///
/// Starts from the uniform state, alternates one split-step of the condensate
/// in the current optical potential with an under-relaxed update of alpha, and
/// stops when both have settled. A preconditioned gradient-flow stage then
/// iterates on the exact discrete Hamiltonian, so the returned phi is the
/// discrete ground state of K + |alpha|^2 U rather than of the split operator.
///
/// Throws ConvergenceError after max_iters iterations without convergence.
inline MeanFieldState solve_ground_state(const SystemParams& params, const Grid& grid,
                                         const MeanFieldOptions& opt = {}) {
  const SystemParams p = validate(params);
  detail::check_options(opt);
  if (grid.size() != p.grid_points) throw ValidationError("grid size does not match grid_points");

  const Eigen::VectorXd potential = potential_profile(grid, p.u0);
  SpectralKinetic kinetic(grid);
  SplitStepPropagator propagator(grid, potential, opt.itp_dt);

  MeanFieldState st;
  st.phi = Eigen::VectorXcd::Constant(grid.size(), 1.0 / std::sqrt(std::numbers::pi));
  st.u_avg = expectation(grid, potential, st.phi);
  st.alpha = opt.frozen_alpha.value_or(steady_alpha(p, st.u_avg));

  ConvergenceInfo& info = st.convergence;
  long total = 0;
  const double phi_tol = opt.tol_phi * opt.itp_dt;

  auto relax_alpha = [&](double u) {
    if (opt.frozen_alpha) return st.alpha;
    return (1.0 - opt.mixing) * st.alpha + opt.mixing * steady_alpha(p, u);
  };

  // One iteration of either stage; returns true once both unknowns have settled.
  auto iterate = [&](Eigen::VectorXcd next) {
    const double u = expectation(grid, potential, next);
    const std::complex<double> a = relax_alpha(u);
    info.phi_step = (next - st.phi).cwiseAbs().maxCoeff();
    info.alpha_step = std::abs(a - st.alpha);
    st.phi = std::move(next);
    st.alpha = a;
    st.u_avg = u;
    info.self_consistency = opt.frozen_alpha ? 0.0 : std::abs(st.alpha - steady_alpha(p, u));
    ++total;
    if (opt.history_stride > 0 && total % opt.history_stride == 0)
      st.history.push_back({total, info.phi_step, info.alpha_step, st.alpha});
    return info.phi_step < phi_tol && info.alpha_step < opt.tol_alpha &&
           info.self_consistency < opt.tol_alpha;
  };

  auto fail = [&](const char* stage) {
    std::ostringstream os;
    os << "mean-field " << stage << " did not converge after " << total
       << " iterations (phi step " << info.phi_step << ", alpha step " << info.alpha_step << ")";
    throw ConvergenceError(os.str(), total, info.phi_step, info.alpha_step);
  };

  bool done = false;
  while (!done && total < opt.max_iters) {
    done = iterate(propagator.step(st.phi, st.intensity()));
    ++info.split_step_iterations;
  }
  if (!done) fail("split-step stage");

  if (opt.refine) {
    done = false;
    while (!done && total < opt.max_iters) {
      const Eigen::VectorXd v = st.intensity() * potential;
      const Eigen::VectorXcd hphi = kinetic.apply(st.phi) + (v.array() * st.phi.array()).matrix();
      const double mu = st.phi.dot(hphi).real() * grid.dx();
      const Eigen::VectorXcd residual = hphi - mu * st.phi;
      // H0 - mu <= K + (max V - min V), so a unit step with this shift is stable.
      const double shift = std::max(v.maxCoeff() - v.minCoeff(), 1.0);
      Eigen::VectorXcd next = st.phi - kinetic.solve_shifted(residual, shift);
      normalize(grid, next);
      done = iterate(std::move(next));
      ++info.refine_iterations;
    }
    if (!done) fail("refinement stage");
  }

  detail::fix_gauge(st.phi, potential);
  normalize(grid, st.phi);
  st.u_avg = expectation(grid, potential, st.phi);
  const Eigen::VectorXcd hphi =
      kinetic.apply(st.phi) + (st.intensity() * potential.array() * st.phi.array()).matrix();
  st.mu = st.phi.dot(hphi).real() * grid.dx();
  info.eigen_residual = (hphi - st.mu * st.phi).cwiseAbs().maxCoeff();
  info.converged = true;
  st.history.push_back({total, info.phi_step, info.alpha_step, st.alpha});
  st.heating_regime = p.delta_c - static_cast<double>(p.n_atoms) * st.u_avg > 0.0;
  return st;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_MEANFIELD_HPP
