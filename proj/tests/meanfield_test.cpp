#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "bec_cavity/meanfield.hpp"

using namespace bec_cavity;

TEST(SteadyAlpha, ClosedForms) {
  const SystemParams p = figure_params(0.0);
  EXPECT_NEAR(std::norm(steady_alpha(p, 0.0)), 1e6 / (1e6 + 1e4), 1e-15);

  SystemParams dark = p;
  dark.eta = 0.0;
  EXPECT_EQ(steady_alpha(dark, 0.0), std::complex<double>(0.0, 0.0));

  // N u_avg = delta_c
  EXPECT_NEAR(std::norm(steady_alpha(p, -1.0)), 100.0, 1e-12);
}

TEST(GroundState, FreeParticle) {
  const SystemParams p = figure_params(0.0);
  const Grid g(p.grid_points);
  const MeanFieldState st = solve_ground_state(p, g);
  EXPECT_TRUE(st.convergence.converged);
  EXPECT_LT((st.phi.array() - 1.0 / std::sqrt(std::numbers::pi)).abs().maxCoeff(), 1e-14);
  EXPECT_EQ(st.u_avg, 0.0);
  EXPECT_NEAR(st.mu, 0.0, 1e-14);
  EXPECT_NEAR(st.intensity(), 0.990099009900990099, 1e-12);
  EXPECT_FALSE(st.heating_regime);
}

TEST(GroundState, CoupledStateInvariants) {
  const SystemParams p = figure_params(-0.5, 64);
  const Grid g(p.grid_points);
  const MeanFieldOptions opt;
  const MeanFieldState st = solve_ground_state(p, g, opt);
  EXPECT_NEAR(st.phi.squaredNorm() * g.dx(), 1.0, 1e-12);
  EXPECT_EQ(st.phi.imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(st.phi.real().minCoeff(), 0.0);
  EXPECT_LT(std::abs(st.alpha - steady_alpha(p, st.u_avg)), opt.tol_alpha);
  EXPECT_LT(st.convergence.eigen_residual, 1e-8);
  const double ratio = st.u_avg / p.u0;
  EXPECT_GE(ratio, 0.5);
  EXPECT_LE(ratio, 1.0);
  EXPECT_FALSE(st.heating_regime);
  // Localized at the antinode x = 0 for u0 < 0.
  Eigen::Index peak;
  st.phi.real().maxCoeff(&peak);
  EXPECT_EQ(peak, 0);
  EXPECT_FALSE(st.history.empty());
}

TEST(GroundState, EnergyDecreasesAlongSplitSteps) {
  const Grid g(64);
  const Eigen::VectorXd u = potential_profile(g, -1.0);
  SplitStepPropagator prop(g, u, 1e-3);
  SpectralKinetic kin(g);
  Eigen::VectorXcd phi(64);
  for (int j = 0; j < 64; ++j) phi[j] = 1.0 + 0.3 * std::sin(3.0 * g.points()[j]) + 0.1 * std::cos(8.0 * g.points()[j]);
  normalize(g, phi);
  const double intensity = 7.0;
  double e = energy(g, kin, u, intensity, phi);
  for (int s = 0; s < 2000; ++s) {
    phi = prop.step(phi, intensity);
    const double next = energy(g, kin, u, intensity, phi);
    ASSERT_LE(next, e + 1e-13) << "step " << s;
    e = next;
  }
}

TEST(GroundState, FrozenLatticeMatchesDenseDiagonalization) {
  SystemParams p = figure_params(-1.0, 64);
  const Grid g(p.grid_points);
  MeanFieldOptions opt;
  opt.frozen_alpha = std::sqrt(10.0);
  const MeanFieldState st = solve_ground_state(p, g, opt);

  Eigen::MatrixXd h = kinetic_matrix(g);
  h.diagonal() += 10.0 * potential_profile(g, -1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Eigen::VectorXd ref = es.eigenvectors().col(0) / std::sqrt(g.dx());
  if (ref[0] < 0) ref = -ref;
  EXPECT_NEAR(st.mu, es.eigenvalues()[0], 1e-8);
  EXPECT_LT((st.phi.real() - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GroundState, IterationLimitRaises) {
  MeanFieldOptions opt;
  opt.max_iters = 5;
  const SystemParams p = figure_params(-0.5, 32);
  try {
    solve_ground_state(p, Grid(32), opt);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 5);
    EXPECT_GT(e.phi_step(), 0.0);
  }
}

TEST(GroundState, RejectsBadKnobs) {
  const SystemParams p = figure_params(-0.5, 32);
  MeanFieldOptions opt;
  opt.mixing = 0.0;
  EXPECT_THROW(solve_ground_state(p, Grid(32), opt), ValidationError);
  opt = {};
  opt.itp_dt = -1.0;
  EXPECT_THROW(solve_ground_state(p, Grid(32), opt), ValidationError);
  EXPECT_THROW(solve_ground_state(p, Grid(16), {}), ValidationError);
}

TEST(GroundState, HeatingSideIsFlagged) {
  const SystemParams p = figure_params(-1.2, 64);
  const MeanFieldState st = solve_ground_state(p, Grid(64));
  EXPECT_TRUE(st.heating_regime);
}
