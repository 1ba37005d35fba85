#ifndef BEC_CAVITY_SPECTRAL_HPP
#define BEC_CAVITY_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#include <lapacke.h>

#include "bec_cavity/errors.hpp"
#include "bec_cavity/fluctuation.hpp"

namespace bec_cavity {

struct SpectralOptions {
  double max_condition = 1e6;   ///< refuse bases with ||R||_1 ||R^-1||_1 above this
  double cluster_tol = 1e-6;    ///< relative to max|omega|
};

/// Biorthonormal eigensystem of a fluctuation matrix.
///
/// Columns of `right` are r^(k). Row k of `left_adjoint` is l^(k)+, so that
/// left_adjoint * right = I and l^(k) = conj(left_adjoint.row(k)).
struct ModeDecomposition {
  Eigen::VectorXcd omegas;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd left_adjoint;
  double cond_r = 0.0;
  double max_residual = 0.0;    ///< max_k ||M r_k - omega_k r_k|| / ||M||
  std::vector<int> cluster;     ///< cluster id per mode
  std::vector<int> pairing;     ///< k -> k' with omega_k' ~ -conj(omega_k), -1 if none
  int ng = 0;
  double dx = 0.0;
  double kappa = 0.0;

  Eigen::Index size() const { return omegas.size(); }
  std::complex<double> l1(Eigen::Index k) const { return std::conj(left_adjoint(k, 0)); }
  std::complex<double> l2(Eigen::Index k) const { return std::conj(left_adjoint(k, 1)); }
  double noise_weight(Eigen::Index k) const { return std::abs(l1(k)) * std::abs(l2(k)); }
  std::size_t cluster_size(Eigen::Index k) const {
    return static_cast<std::size_t>(std::count(cluster.begin(), cluster.end(), cluster[k]));
  }
};

namespace detail {

inline double norm1(const Eigen::MatrixXcd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

/// Right eigenpairs by LAPACK zgeev.
inline void general_eigen(const Eigen::MatrixXcd& m, Eigen::VectorXcd& w, Eigen::MatrixXcd& vr) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  Eigen::MatrixXcd a = m;
  w.resize(n);
  vr.resize(n, n);
  std::complex<double> dummy;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, w.data(), &dummy, 1,
                                        vr.data(), n);
  if (info != 0) {
    std::ostringstream os;
    os << "eigensolver failed to converge (zgeev info " << info << ")";
    throw Error(os.str());
  }
}

/// Single-linkage clusters of points closer than tol; ids are assigned in index order.
inline std::vector<int> clusters(const Eigen::VectorXcd& w, double tol) {
  const Eigen::Index n = w.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(w[i] - w[j]) <= tol) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<int> id(n, -1), out(n);
  int next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    if (id[root] < 0) id[root] = next++;
    out[i] = id[root];
  }
  return out;
}

/// Greedy nearest matching of omega_k with -conj(omega_k'); an involution.
inline std::vector<int> mirror_pairing(const Eigen::VectorXcd& w, double tol) {
  const Eigen::Index n = w.size();
  std::vector<int> pair(n, -1);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (pair[k] >= 0) continue;
    const std::complex<double> target = -std::conj(w[k]);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (pair[j] >= 0) continue;
      const double d = std::abs(w[j] - target);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_d <= tol) {
      pair[k] = best;
      pair[best] = static_cast<int>(k);
    }
  }
  return pair;
}

} // namespace detail

/// Eigendecomposition of a general complex matrix with left vectors from R^-1.
///
/// Modes are ordered by (Re omega, Im omega). Throws SingularBasisError when
/// cond_r exceeds opt.max_condition; the moment-equation route does not need
/// an eigenbasis and is the fallback in that case.
inline ModeDecomposition decompose(const Eigen::MatrixXcd& m, int ng, double dx, double kappa,
                                   const SpectralOptions& opt = {}) {
  if (m.rows() != m.cols() || m.rows() != 2 * ng + 2) throw ValidationError("decompose: shape mismatch");
  if (!m.allFinite()) throw ValidationError("decompose: matrix has non-finite entries");

  Eigen::VectorXcd w;
  Eigen::MatrixXcd vr;
  detail::general_eigen(m, w, vr);

  const Eigen::Index n = w.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (w[a].real() != w[b].real()) return w[a].real() < w[b].real();
    return w[a].imag() < w[b].imag();
  });

  ModeDecomposition dec;
  dec.ng = ng;
  dec.dx = dx;
  dec.kappa = kappa;
  dec.omegas.resize(n);
  dec.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    dec.omegas[k] = w[order[k]];
    dec.right.col(k) = vr.col(order[k]).normalized();
  }

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(dec.right);
  dec.left_adjoint = lu.inverse();
  dec.cond_r = detail::norm1(dec.right) * detail::norm1(dec.left_adjoint);
  if (!std::isfinite(dec.cond_r) || dec.cond_r > opt.max_condition) {
    std::ostringstream os;
    os << "eigenvector basis is numerically singular (condition " << dec.cond_r
       << "); use the moment-equation oracle instead";
    throw SingularBasisError(os.str(), dec.cond_r);
  }

  const double mnorm = std::max(m.norm(), std::numeric_limits<double>::min());
  dec.max_residual = ((m * dec.right) - dec.right * dec.omegas.asDiagonal()).colwise().norm().maxCoeff() / mnorm;

  const double scale = std::max(dec.omegas.cwiseAbs().maxCoeff(), 1.0);
  dec.cluster = detail::clusters(dec.omegas, opt.cluster_tol * scale);
  dec.pairing = detail::mirror_pairing(dec.omegas, opt.cluster_tol * scale);
  return dec;
}

inline ModeDecomposition decompose(const FluctuationMatrix& fm, const SpectralOptions& opt = {}) {
  return decompose(fm.m, fm.ng, fm.dx, fm.kappa, opt);
}

/// ||L R - I||_inf.
inline double biorthogonality_defect(const ModeDecomposition& dec) {
  const Eigen::MatrixXcd e = dec.left_adjoint * dec.right - Eigen::MatrixXcd::Identity(dec.size(), dec.size());
  return e.cwiseAbs().rowwise().sum().maxCoeff();
}

/// ||M - R diag(omega) L|| / ||M||.
inline double reconstruction_defect(const ModeDecomposition& dec, const Eigen::MatrixXcd& m) {
  return (m - dec.right * dec.omegas.asDiagonal() * dec.left_adjoint).norm() / m.norm();
}

/// Largest distance between a sorted spectrum and its sorted -conj image.
inline double pairing_defect(const Eigen::VectorXcd& omegas) {
  const Eigen::Index n = omegas.size();
  Eigen::VectorXcd mirror = -omegas.conjugate();
  std::vector<bool> used(n, false);
  double worst = 0.0;
  // Sorted matching: nearest unused partner, processed in (Re, Im) order.
  for (Eigen::Index k = 0; k < n; ++k) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = std::abs(omegas[k] - mirror[j]);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    used[arg] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

/// Petermann factor ||l||^2 ||r||^2 of an isolated mode. For a degenerate
/// cluster C the value is ||P_C||_2^2 of the spectral projector, shared by
/// every member; it reduces to the single-mode expression for |C| = 1.
inline double petermann_factor(const ModeDecomposition& dec, Eigen::Index k) {
  std::vector<Eigen::Index> members;
  for (Eigen::Index j = 0; j < dec.size(); ++j)
    if (dec.cluster[j] == dec.cluster[k]) members.push_back(j);
  if (members.size() == 1)
    return dec.left_adjoint.row(k).squaredNorm() * dec.right.col(k).squaredNorm();
  const Eigen::Index c = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXcd rc(dec.size(), c), lc(c, dec.size());
  for (Eigen::Index i = 0; i < c; ++i) {
    rc.col(i) = dec.right.col(members[i]);
    lc.row(i) = dec.left_adjoint.row(members[i]);
  }
  const Eigen::MatrixXcd g = (rc.adjoint() * rc) * (lc * lc.adjoint());
  return g.eigenvalues().real().maxCoeff();
}

enum class Stability { stable, marginal, unstable };

inline const char* to_string(Stability s) {
  switch (s) {
  case Stability::stable: return "stable";
  case Stability::marginal: return "marginal";
  case Stability::unstable: return "unstable";
  }
  return "?";
}

struct StabilityReport {
  Stability kind = Stability::stable;
  double max_growth = -std::numeric_limits<double>::infinity();  ///< max Im omega outside the zero cluster
  int goldstone_modes = 0;
  int undamped_modes = 0;   ///< |Im omega| <= tol_zero outside the zero cluster
};

/// Zero-frequency modes without photon content.
inline bool is_goldstone(const ModeDecomposition& dec, Eigen::Index k, double tol_zero) {
  return std::abs(dec.omegas[k]) < tol_zero && std::abs(dec.l1(k)) < 1e-8 && std::abs(dec.l2(k)) < 1e-8;
}

/// Unstable when some mode grows faster than tol_zero. Marginal when a
/// noise-coupled mode (|l1||l2| > tol_noise) is damped less than tol_zero
/// times its coupling, so that its noise would accumulate without bound.
/// Undamped modes that the noise cannot reach leave the state stable.
inline StabilityReport classify_stability(const ModeDecomposition& dec, double tol_zero = 1e-6,
                                          double tol_noise = 1e-10) {
  StabilityReport rep;
  bool marginal = false;
  for (Eigen::Index k = 0; k < dec.size(); ++k) {
    if (is_goldstone(dec, k, tol_zero)) {
      ++rep.goldstone_modes;
      continue;
    }
    const double im = dec.omegas[k].imag();
    rep.max_growth = std::max(rep.max_growth, im);
    if (std::abs(im) <= tol_zero) ++rep.undamped_modes;
    const double weight = dec.noise_weight(k);
    if (weight > tol_noise && im > -tol_zero * weight) marginal = true;
  }
  if (rep.max_growth > tol_zero) rep.kind = Stability::unstable;
  else if (marginal) rep.kind = Stability::marginal;
  return rep;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_SPECTRAL_HPP
