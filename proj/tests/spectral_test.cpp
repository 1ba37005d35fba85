#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "pipeline.hpp"

using namespace bec_cavity;
using namespace std::complex_literals;
using testing_support::figure_point;

namespace {

Eigen::MatrixXcd random_matrix(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = {d(rng), d(rng)};
  return m;
}

} // namespace

TEST(Decompose, DiagonalMatrix) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = 1.0 + 2.0i;
  m(1, 1) = 3.0;
  const ModeDecomposition dec = decompose(m, 0, 1.0, 1.0);
  EXPECT_EQ(dec.omegas[0], 1.0 + 2.0i);
  EXPECT_EQ(dec.omegas[1], 3.0);
  EXPECT_LT((dec.right.cwiseAbs() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((dec.left_adjoint * dec.right - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Decompose, RandomMatricesDiagonalize) {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Eigen::MatrixXcd m = random_matrix(6, seed);
    const ModeDecomposition dec = decompose(m, 2, 1.0, 1.0);
    const Eigen::MatrixXcd d = dec.left_adjoint * m * dec.right;
    const Eigen::MatrixXcd off = d - Eigen::MatrixXcd(dec.omegas.asDiagonal());
    EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-9) << seed;
    EXPECT_LT(biorthogonality_defect(dec), 1e-10);
    EXPECT_LT(reconstruction_defect(dec, m), 1e-12);
    for (Eigen::Index k = 0; k < dec.size(); ++k) EXPECT_GE(petermann_factor(dec, k), 1.0 - 1e-10);
  }
}

TEST(Decompose, NormalMatrixHasUnitPetermannFactors) {
  const Eigen::MatrixXcd a = random_matrix(6, 99);
  const Eigen::MatrixXcd h = a + a.adjoint();
  const ModeDecomposition dec = decompose(h, 2, 1.0, 1.0);
  for (Eigen::Index k = 0; k < dec.size(); ++k) EXPECT_NEAR(petermann_factor(dec, k), 1.0, 1e-10);
}

TEST(Decompose, IllConditionedBasisIsRefused) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0 + 1e-12;
  m(0, 1) = 1.0;
  EXPECT_THROW(decompose(m, 0, 1.0, 1.0), SingularBasisError);
  SpectralOptions loose;
  loose.max_condition = 1e300;
  EXPECT_NO_THROW(decompose(m, 0, 1.0, 1.0, loose));
}

TEST(Decompose, RejectsBadInput) {
  EXPECT_THROW(decompose(Eigen::MatrixXcd::Zero(3, 3), 0, 1.0, 1.0), ValidationError);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(decompose(m, 0, 1.0, 1.0), ValidationError);
}

TEST(Spectrum, UncoupledLimit) {
  const auto pl = figure_point(0.0, 16);
  const ModeDecomposition& dec = pl.dec;
  auto count_near = [&](std::complex<double> w) {
    return std::count_if(dec.omegas.begin(), dec.omegas.end(),
                         [&](std::complex<double> z) { return std::abs(z - w) < 1e-8 * std::abs(w) + 1e-9; });
  };
  EXPECT_EQ(count_near(1000.0 - 100.0i), 1);
  EXPECT_EQ(count_near(-1000.0 - 100.0i), 1);
  for (double e : {4.0, 16.0, 36.0, 64.0}) {
    EXPECT_EQ(count_near(e), 2) << e;
    EXPECT_EQ(count_near(-e), 2) << e;
  }
  for (Eigen::Index k = 0; k < dec.size(); ++k) EXPECT_NEAR(petermann_factor(dec, k), 1.0, 1e-10);
  EXPECT_EQ(pl.stability.kind, Stability::stable);
  EXPECT_GT(pl.stability.undamped_modes, 0);
}

TEST(Spectrum, PairingIsAnInvolution) {
  const auto pl = figure_point(-0.5, 16);
  const double scale = pl.dec.omegas.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < pl.dec.size(); ++k) {
    const int j = pl.dec.pairing[k];
    ASSERT_GE(j, 0);
    EXPECT_EQ(pl.dec.pairing[j], k);
    EXPECT_LT(std::abs(pl.dec.omegas[j] + std::conj(pl.dec.omegas[k])), 1e-8 * scale);
  }
  EXPECT_LT(pairing_defect(pl.dec.omegas), 1e-8 * scale);
}

TEST(Spectrum, GoldstoneClusterCarriesNoPhotonWeight) {
  const auto pl = figure_point(-0.5, 32);
  EXPECT_GE(pl.stability.goldstone_modes, 1);
  for (Eigen::Index k = 0; k < pl.dec.size(); ++k)
    if (std::abs(pl.dec.omegas[k]) < 1e-6) {
      EXPECT_LT(std::abs(pl.dec.l1(k)), 1e-8);
      EXPECT_LT(std::abs(pl.dec.l2(k)), 1e-8);
    }
}

TEST(Spectrum, PhotonBranchIsDampedAtKappaAndExcessNoiseAppears) {
  const auto pl = figure_point(-0.5, 32);
  EXPECT_EQ(pl.stability.kind, Stability::stable);
  EXPECT_LE(pl.stability.max_growth, 1e-6);
  double kmax = 0.0;
  for (Eigen::Index k = 0; k < pl.dec.size(); ++k) kmax = std::max(kmax, petermann_factor(pl.dec, k));
  EXPECT_GT(kmax, 1.0 + 1e-6);
}

TEST(Spectrum, BeyondResonanceIsUnstable) {
  const auto pl = figure_point(-1.2, 32);
  EXPECT_TRUE(pl.state.heating_regime);
  EXPECT_EQ(pl.stability.kind, Stability::unstable);
  EXPECT_GT(pl.stability.max_growth, 0.0);
}

TEST(Stability, MarginalWhenANoiseCoupledModeIsUndamped) {
  // Two-level toy: mode 0 couples to both photon quadratures and has Im = 0.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  m(0, 1) = 0.3;
  const ModeDecomposition dec = decompose(m, 0, 1.0, 1.0);
  EXPECT_EQ(classify_stability(dec).kind, Stability::marginal);
  m(0, 0) = 1.0 + 1e-3i;
  EXPECT_EQ(classify_stability(decompose(m, 0, 1.0, 1.0)).kind, Stability::unstable);
  m(0, 0) = 1.0 - 1e-3i;
  m(1, 1) = -1.0 - 1e-3i;
  EXPECT_EQ(classify_stability(decompose(m, 0, 1.0, 1.0)).kind, Stability::stable);
}
