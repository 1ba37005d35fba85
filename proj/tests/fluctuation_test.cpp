#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "pipeline.hpp"

using namespace bec_cavity;
using namespace std::complex_literals;

namespace {

struct Built {
  SystemParams p;
  Grid g;
  MeanFieldState st;
  Built(double u0, int ng) : p(figure_params(u0, ng)), g(ng), st(solve_ground_state(p, g)) {}
  FluctuationMatrix matrix(FluctuationOptions o = {}) const { return build_matrix(st, p, g, o); }
};

} // namespace

TEST(Fluctuation, BlockDiagonalWithoutCoupling) {
  const Built b(0.0, 16);
  const FluctuationMatrix fm = b.matrix();
  const int ng = 16;
  EXPECT_EQ(fm.dim(), 2 * ng + 2);
  EXPECT_EQ(fm.m(0, 0), 1000.0 - 100.0i);
  EXPECT_EQ(fm.m(1, 1), -1000.0 - 100.0i);
  EXPECT_EQ(fm.m.block(0, 2, 2, 2 * ng).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(fm.m.block(2, 0, 2 * ng, 2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(fm.m.block(2, 2 + ng, ng, ng).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd k = kinetic_matrix(b.g);
  EXPECT_LT((fm.m.block(2, 2, ng, ng).real() - k).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((fm.m.block(2 + ng, 2 + ng, ng, ng).real() + k).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(non_normality(fm.m), 0.0);
}

TEST(Fluctuation, GammaSymmetry) {
  for (double u0 : {-0.1, -0.5, -0.9}) {
    const Built b(u0, 16);
    for (bool project : {true, false}) {
      FluctuationOptions o;
      o.project_condensate = project;
      EXPECT_LE(symmetry_defect(b.matrix(o)), 1e-13) << u0;
    }
  }
}

TEST(Fluctuation, GammaTransform) {
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(10);
  e0[0] = 1.0;
  const Eigen::VectorXcd g = gamma_transform(e0, 4);
  EXPECT_EQ(g[1], 1.0);
  EXPECT_EQ(g.cwiseAbs().sum(), 1.0);

  Eigen::VectorXcd v = Eigen::VectorXcd::Random(10);
  EXPECT_EQ(gamma_transform(gamma_transform(v, 4), 4), v);
  EXPECT_EQ(gamma_transform(v, 4)[2], v[6]);
  EXPECT_THROW(gamma_transform(Eigen::VectorXcd::Zero(9), 4), ValidationError);
}

TEST(Fluctuation, LiteralEntriesWithoutProjection) {
  const Built b(-0.5, 16);
  FluctuationOptions o;
  o.project_condensate = false;
  const FluctuationMatrix fm = b.matrix(o);
  const double sqrt_n = std::sqrt(1000.0);
  const Eigen::VectorXd u = potential_profile(b.g, -0.5);
  const std::complex<double> a = b.st.alpha;
  const int ng = 16;
  for (int j = 0; j < ng; ++j) {
    const double y = sqrt_n * b.st.phi[j].real() * u[j];
    EXPECT_NEAR(std::abs(fm.m(0, 2 + j) - a * y * b.g.dx()), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(fm.m(0, 2 + ng + j) - a * y * b.g.dx()), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(fm.m(1, 2 + j) + std::conj(a) * y * b.g.dx()), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(fm.m(2 + j, 0) - std::conj(a) * y), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(fm.m(2 + j, 1) - a * y), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(fm.m(2 + ng + j, 0) + std::conj(a) * y), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(fm.m(2 + ng + j, 1) + a * y), 0.0, 1e-12);
  }
  const std::complex<double> expected_a = 1000.0 + 1000.0 * b.st.u_avg - 100.0i;
  EXPECT_NEAR(std::abs(fm.a_diag - expected_a), 0.0, 1e-10);
}

TEST(Fluctuation, PhaseModeIsANullVector) {
  const Built b(-0.5, 32);
  for (bool project : {true, false}) {
    FluctuationOptions o;
    o.project_condensate = project;
    const FluctuationMatrix fm = b.matrix(o);
    const Eigen::VectorXcd g = goldstone_vector(fm);
    EXPECT_LT((fm.m * g).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Fluctuation, CouplingMakesTheMatrixNonNormal) {
  const Built b(-0.5, 16);
  const FluctuationMatrix fm = b.matrix();
  EXPECT_GT(non_normality(fm.m), 1e-8);
  const int ng = 16;
  EXPECT_GT(fm.m.block(2, 0, ng, 1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(fm.m.block(2, 1, ng, 1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Fluctuation, ProjectionRemovesTheCondensateDirection) {
  const Built b(-0.5, 16);
  const FluctuationMatrix fm = b.matrix();
  const Eigen::VectorXcd phi = fm.phi.cast<std::complex<double>>();
  // phi^T (coupling row) = 0 and the atom block annihilates phi.
  EXPECT_LT(std::abs(fm.m.row(0).segment(2, 16).dot(phi.conjugate())), 1e-12);
  EXPECT_LT((fm.m.block(2, 2, 16, 16) * phi).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fluctuation, RejectsUnconvergedOrMismatchedState) {
  Built b(-0.5, 16);
  MeanFieldState bad = b.st;
  bad.convergence.converged = false;
  EXPECT_THROW(build_matrix(bad, b.p, b.g), ValidationError);
  EXPECT_THROW(build_matrix(b.st, b.p, Grid(32)), ValidationError);
}

TEST(Fluctuation, ChemicalPotentialSwitch) {
  const Built b(-0.5, 16);
  FluctuationOptions with, without;
  without.subtract_mu = false;
  with.project_condensate = without.project_condensate = false;
  const Eigen::MatrixXcd diff = b.matrix(without).m - b.matrix(with).m;
  EXPECT_NEAR(diff(2, 2).real(), b.st.mu, 1e-12);
  EXPECT_NEAR(diff(20, 20).real(), -b.st.mu, 1e-12);
}
