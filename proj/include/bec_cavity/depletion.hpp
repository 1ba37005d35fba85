#ifndef BEC_CAVITY_DEPLETION_HPP
#define BEC_CAVITY_DEPLETION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bec_cavity/errors.hpp"
#include "bec_cavity/fluctuation.hpp"
#include "bec_cavity/spectral.hpp"

namespace bec_cavity {

struct DepletionOptions {
  double tol_pair = 1e-9;     ///< |omega_k + omega_l| below this is a zero denominator
  double tol_noise = 1e-10;   ///< |l1^(k)| |l2^(l)| below this carries no photon noise
  double tol_zero = 1e-6;
  std::size_t top_pairs = 8;
};

struct PairContribution {
  int k;
  int l;
  std::complex<double> value;   ///< contribution to the steady-state double sum
};

struct SkippedPair {
  int k;
  int l;
  std::complex<double> denominator;
  double noise_weight;
  double would_be;              ///< |contribution| had the pair been kept
  std::string reason;
};

struct DepletionResult {
  std::vector<double> times;          ///< +inf marks the steady state
  std::vector<double> values;
  std::vector<double> imag_parts;     ///< discarded imaginary parts
  std::vector<PairContribution> top_pairs;
  std::vector<SkippedPair> skipped;
  bool diverged = false;
  std::string status = "ok";
};

/// (1 - exp(-i z t)) / (i z), with a series branch for small |z| t.
inline std::complex<double> depletion_kernel(std::complex<double> z, double t) {
  using namespace std::complex_literals;
  const std::complex<double> w = 1i * z * t;
  if (std::abs(w) < 1e-4) return t * (1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0);
  return (1.0 - std::exp(-w)) / (1i * z);
}

namespace detail {

/// O_kl = sum_j r4^(k)_j r3^(l)_j dx, unconjugated.
inline Eigen::MatrixXcd overlap_matrix(const ModeDecomposition& dec) {
  const Eigen::MatrixXcd r3 = dec.right.middleRows(2, dec.ng);
  const Eigen::MatrixXcd r4 = dec.right.middleRows(2 + dec.ng, dec.ng);
  return dec.dx * (r4.transpose() * r3);
}

/// W_kl = 2 kappa conj(l1^(k)) conj(l2^(l)) O_kl.
inline Eigen::MatrixXcd pair_weights(const ModeDecomposition& dec) {
  const Eigen::VectorXcd a = dec.left_adjoint.col(0);
  const Eigen::VectorXcd b = dec.left_adjoint.col(1);
  return 2.0 * dec.kappa * (a.asDiagonal() * overlap_matrix(dec) * b.asDiagonal());
}

inline void check_times(const std::vector<double>& times) {
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("depletion times must be finite and >= 0");
}

inline double real_part_checked(std::complex<double> v, std::vector<double>& imag_parts) {
  imag_parts.push_back(v.imag());
  return v.real();
}

} // namespace detail

/// Finite-time depletion from the quasi-normal mode double sum.
inline DepletionResult depletion_at_times(const ModeDecomposition& dec, const std::vector<double>& times) {
  detail::check_times(times);
  const Eigen::MatrixXcd w = detail::pair_weights(dec);
  DepletionResult res;
  res.times = times;
  const Eigen::Index n = dec.size();
  for (double t : times) {
    std::complex<double> sum = 0.0;
    if (t > 0.0)
      for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k)
          sum += depletion_kernel(dec.omegas[k] + dec.omegas[l], t) * w(k, l);
    res.values.push_back(detail::real_part_checked(sum, res.imag_parts));
  }
  return res;
}

/// t -> infinity limit of the double sum.
///
/// Refuses unstable and heating-regime states. Pairs with a vanishing
/// denominator are dropped when their photon weight is negligible
/// ("decoupled") or when they are damped, only slower than tol_pair resolves
/// ("beyond relaxation horizon"); any other such pair makes the result
/// diverge. Every dropped pair is listed in `skipped`.
inline DepletionResult steady_state_depletion(const ModeDecomposition& dec, const StabilityReport& stability,
                                              bool heating_regime, const DepletionOptions& opt = {}) {
  if (stability.kind == Stability::unstable)
    throw RefusedError("steady-state depletion refused: mean field is dynamically unstable");
  if (heating_regime) throw RefusedError("steady-state depletion refused: heating regime");

  using namespace std::complex_literals;
  DepletionResult res;
  res.times = {std::numeric_limits<double>::infinity()};
  if (stability.kind == Stability::marginal) {
    res.diverged = true;
    res.status = "diverged";
    res.values.push_back(std::numeric_limits<double>::infinity());
    res.imag_parts.push_back(0.0);
    return res;
  }

  const Eigen::MatrixXcd w = detail::pair_weights(dec);
  const Eigen::Index n = dec.size();
  std::vector<PairContribution> all;
  std::complex<double> sum = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::complex<double> z = dec.omegas[k] + dec.omegas[l];
      if (std::abs(z) < opt.tol_pair) {
        const double weight = std::abs(dec.l1(k)) * std::abs(dec.l2(l));
        const double would_be = std::abs(w(k, l) / (1i * z));
        SkippedPair s{static_cast<int>(k), static_cast<int>(l), z, weight, would_be, ""};
        if (weight < opt.tol_noise) {
          s.reason = "decoupled";
        } else if (z.imag() <= -opt.tol_zero * weight) {
          s.reason = "beyond relaxation horizon";
        } else {
          res.diverged = true;
          s.reason = "undamped";
        }
        res.skipped.push_back(std::move(s));
        continue;
      }
      const std::complex<double> c = w(k, l) / (1i * z);
      sum += c;
      if (opt.top_pairs > 0) all.push_back({static_cast<int>(k), static_cast<int>(l), c});
    }
  }

  const std::size_t keep = std::min(opt.top_pairs, all.size());
  std::partial_sort(all.begin(), all.begin() + keep, all.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    return a.k != b.k ? a.k < b.k : a.l < b.l;
  });
  all.resize(keep);
  res.top_pairs = std::move(all);

  if (res.diverged) {
    res.status = "diverged";
    res.values.push_back(std::numeric_limits<double>::infinity());
    res.imag_parts.push_back(0.0);
  } else {
    res.values.push_back(detail::real_part_checked(sum, res.imag_parts));
  }
  return res;
}

/// Share of the steady-state depletion carried by mirror pairs
/// (omega_l ~ -conj(omega_k), matched cluster-wise).
inline double dominated_fraction(const ModeDecomposition& dec, const DepletionResult& steady,
                                 const DepletionOptions& opt = {}) {
  if (steady.diverged || steady.values.empty() || steady.values.front() == 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  using namespace std::complex_literals;
  const Eigen::MatrixXcd w = detail::pair_weights(dec);
  std::complex<double> sum = 0.0;
  for (Eigen::Index k = 0; k < dec.size(); ++k) {
    const int partner = dec.pairing[k];
    if (partner < 0) continue;
    for (Eigen::Index l = 0; l < dec.size(); ++l) {
      if (dec.cluster[l] != dec.cluster[partner]) continue;
      const std::complex<double> z = dec.omegas[k] + dec.omegas[l];
      if (std::abs(z) < opt.tol_pair) continue;
      sum += w(k, l) / (1i * z);
    }
  }
  return sum.real() / steady.values.front();
}

/// Slowest decay time among modes that the cavity noise reaches and whose
/// damping is resolved (2|Im omega| >= tol_pair). Infinity if there is none.
inline double relaxation_time(const ModeDecomposition& dec, const DepletionOptions& opt = {}) {
  double slowest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < dec.size(); ++k) {
    const double im = dec.omegas[k].imag();
    if (dec.noise_weight(k) <= opt.tol_noise || 2.0 * std::abs(im) < opt.tol_pair) continue;
    slowest = std::min(slowest, std::abs(im));
  }
  return std::isinf(slowest) ? slowest : 1.0 / slowest;
}

// Moment-equation oracle.
//
// S = <R R^T> obeys dS/dt = -i M S - i S M^T + D with a single source
// D[0,1] = 2 kappa, and the depletion is sum_j S[Ng+2+j, 2+j] dx.

inline constexpr int kOracleMaxGrid = 32;

namespace detail {

inline void check_oracle_size(const FluctuationMatrix& fm) {
  if (fm.ng > kOracleMaxGrid) {
    std::ostringstream os;
    os << "moment-equation oracle is limited to grid_points <= " << kOracleMaxGrid;
    throw ValidationError(os.str());
  }
}

inline double gershgorin_bound(const Eigen::MatrixXcd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

} // namespace detail

/// RK4 integration of the factored moment equation from S(0) = 0.
///
/// With u_a(t) = exp(-i M t) e_a the moment is S(t) = 2 kappa int u_0 u_1^T,
/// so only two state vectors and the scalar depletion are integrated.
/// Step 0.1 / (Gershgorin bound of M), shortened to land on each time.
inline DepletionResult lyapunov_oracle_at_times(const FluctuationMatrix& fm, const std::vector<double>& times) {
  using namespace std::complex_literals;
  detail::check_oracle_size(fm);
  detail::check_times(times);
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());

  const Eigen::Index n = fm.dim();
  const int ng = fm.ng;
  const Eigen::MatrixXcd gen = -1i * fm.m;
  const double h_max = 0.1 / detail::gershgorin_bound(fm.m);
  const double scale = 2.0 * fm.kappa * fm.dx;

  // Columns 0 and 1 are u_0 and u_1.
  auto rhs = [&](const Eigen::MatrixXcd& u, Eigen::MatrixXcd& du, std::complex<double>& dy) {
    du.noalias() = gen * u;
    dy = scale * (u.col(0).segment(2 + ng, ng).cwiseProduct(u.col(1).segment(2, ng))).sum();
  };

  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(n, 2);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  std::complex<double> y = 0.0;
  double t = 0.0;
  Eigen::MatrixXcd k1(n, 2), k2(n, 2), k3(n, 2), k4(n, 2), tmp(n, 2);
  std::complex<double> y1, y2, y3, y4;

  std::vector<std::complex<double>> at_sorted;
  for (double target : sorted) {
    const double span = target - t;
    if (span > 0.0) {
      const long steps = static_cast<long>(std::ceil(span / h_max));
      const double h = span / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        rhs(u, k1, y1);
        tmp = u + 0.5 * h * k1;
        rhs(tmp, k2, y2);
        tmp = u + 0.5 * h * k2;
        rhs(tmp, k3, y3);
        tmp = u + h * k3;
        rhs(tmp, k4, y4);
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        y += (h / 6.0) * (y1 + 2.0 * y2 + 2.0 * y3 + y4);
      }
      t = target;
    }
    at_sorted.push_back(y);
  }

  DepletionResult res;
  res.times = times;
  for (double q : times) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), q);
    res.values.push_back(detail::real_part_checked(at_sorted[it - sorted.begin()], res.imag_parts));
  }
  return res;
}

/// Stationary moment from the vectorized equation (I (x) M + M (x) I) vec S = -i vec D.
///
/// Solved by SVD with singular values below tol_pair discarded, which removes
/// the same zero-denominator directions as the mode sum. Status "truncated"
/// means the right-hand side had weight in the discarded directions.
inline DepletionResult lyapunov_oracle_steady(const FluctuationMatrix& fm, const DepletionOptions& opt = {}) {
  using namespace std::complex_literals;
  detail::check_oracle_size(fm);
  const Eigen::Index n = fm.dim();
  const Eigen::Index nn = n * n;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(nn, nn);
  // vec(M S) = (I (x) M) vec S and vec(S M^T) = (M (x) I) vec S, column-major.
  for (Eigen::Index c = 0; c < n; ++c) t.block(c * n, c * n, n, n) += fm.m;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (fm.m(r, c) != 0.0) t.block(r * n, c * n, n, n).diagonal().array() += fm.m(r, c);

  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nn);
  rhs[0 + 1 * n] = -1i * (2.0 * fm.kappa);

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::VectorXcd proj = svd.matrixU().adjoint() * rhs;
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    if (sv[i] >= opt.tol_pair) coeff[i] = proj[i] / sv[i];
  const Eigen::VectorXcd x = svd.matrixV() * coeff;

  DepletionResult res;
  res.times = {std::numeric_limits<double>::infinity()};
  std::complex<double> dn = 0.0;
  for (int j = 0; j < fm.ng; ++j) dn += x[(2 + fm.ng + j) + (2 + j) * n] * fm.dx;
  const double residual = (t * x - rhs).norm();
  if (!x.allFinite()) {
    res.diverged = true;
    res.status = "singular";
    res.values.push_back(std::numeric_limits<double>::infinity());
    res.imag_parts.push_back(0.0);
    return res;
  }
  res.values.push_back(detail::real_part_checked(dn, res.imag_parts));
  if (residual > 1e-6 * rhs.norm()) res.status = "truncated";
  return res;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_DEPLETION_HPP
