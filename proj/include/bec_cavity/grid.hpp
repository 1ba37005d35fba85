#ifndef BEC_CAVITY_GRID_HPP
#define BEC_CAVITY_GRID_HPP

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "bec_cavity/errors.hpp"

namespace bec_cavity {

/// Uniform periodic grid on one lattice cell [0, pi), endpoint excluded.
///
/// Plane waves exp(i q x) with q = 2n are periodic on the cell; the index set
/// n = -N/2 .. N/2-1 is stored in FFT order (0, 1, .., N/2-1, -N/2, .., -1).
class Grid {
public:
  explicit Grid(int points) : n_(points) {
    if (points < 8 || points % 2 != 0) throw ValidationError("grid_points must be even >= 8");
    dx_ = std::numbers::pi / n_;
    x_.resize(n_);
    q_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      x_[j] = j * dx_;
      const int n = j < n_ / 2 ? j : j - n_;
      q_[j] = 2.0 * n;
    }
  }

  int size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  const Eigen::VectorXd& points() const noexcept { return x_; }
  const Eigen::VectorXd& wavenumbers() const noexcept { return q_; }

private:
  int n_;
  double dx_;
  Eigen::VectorXd x_;
  Eigen::VectorXd q_;
};

/// U(x_j) = u0 cos^2(x_j).
inline Eigen::VectorXd potential_profile(const Grid& grid, double u0) {
  return grid.points().unaryExpr([u0](double x) {
    const double c = std::cos(x);
    return u0 * c * c;
  });
}

/// Quadrature sum_j f_j dx (trapezoid and midpoint rules coincide on a periodic grid).
inline std::complex<double> integrate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXcd>& f) {
  if (f.size() != grid.size()) throw ValidationError("integrate: length mismatch");
  return f.sum() * grid.dx();
}

inline double integrate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != grid.size()) throw ValidationError("integrate: length mismatch");
  return f.sum() * grid.dx();
}

/// Dense matrix of -d^2/dx^2 in the point basis: F^-1 diag(q^2) F, symmetrized.
///
/// The matrix is circulant, so one column of the inverse transform of q^2 fixes
/// every entry.
inline Eigen::MatrixXd kinetic_matrix(const Grid& grid) {
  const int n = grid.size();
  const Eigen::VectorXd& q = grid.wavenumbers();
  Eigen::VectorXd column(n);
  for (int d = 0; d < n; ++d) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) s += q[m] * q[m] * std::cos(q[m] * d * grid.dx());
    column[d] = s / n;
  }
  Eigen::MatrixXd k(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) k(j, l) = column[(j - l + n) % n];
  return 0.5 * (k + k.transpose());
}

/// FFT-backed kinetic operator for vectors on the grid. Holds FFT plans, so
/// one instance per thread.
class SpectralKinetic {
public:
  explicit SpectralKinetic(const Grid& grid) : q2_(grid.wavenumbers().array().square()) {}

  /// Returns -f''.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& f) {
    Eigen::VectorXcd coef;
    fft_.fwd(coef, f);
    coef.array() *= q2_.array();
    Eigen::VectorXcd out;
    fft_.inv(out, coef);
    return out;
  }

  /// Returns exp(-tau K) f, exact in the plane-wave basis.
  Eigen::VectorXcd propagate(const Eigen::VectorXcd& f, double tau) {
    Eigen::VectorXcd coef;
    fft_.fwd(coef, f);
    coef.array() *= (-tau * q2_.array()).exp();
    Eigen::VectorXcd out;
    fft_.inv(out, coef);
    return out;
  }

  /// Returns (K + shift)^-1 f.
  Eigen::VectorXcd solve_shifted(const Eigen::VectorXcd& f, double shift) {
    Eigen::VectorXcd coef;
    fft_.fwd(coef, f);
    coef.array() /= (q2_.array() + shift);
    Eigen::VectorXcd out;
    fft_.inv(out, coef);
    return out;
  }

private:
  Eigen::VectorXd q2_;
  Eigen::FFT<double> fft_;
};

} // namespace bec_cavity

#endif // BEC_CAVITY_GRID_HPP
