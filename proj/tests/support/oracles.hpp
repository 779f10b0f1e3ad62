#pragma once

// Independent reference computations. Nothing here calls into the library's
// solvers; they exist to check them.

#include "ncelm/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace ncelm::testing {

/// Ridge solution from the augmented least-squares problem
/// [H; I/sqrt(C)] b = [y; 0], solved by column-pivoting QR.
inline Matrix ridge_by_qr(const Matrix& h, const Matrix& y, double C) {
  const Index n = h.rows();
  const Index d = h.cols();
  Matrix a(n + d, d);
  a << h, Matrix::Identity(d, d) / std::sqrt(C);
  Matrix rhs = Matrix::Zero(n + d, y.cols());
  rhs.topRows(n) = y;
  return a.colPivHouseholderQr().solve(rhs);
}

/// Dense (I/C + H'H + (lambda/C) H'f f'H)^-1 H'y via LU on the explicit matrix.
inline Vector penalized_by_lu(const Matrix& h, const Vector& y, const Vector& f, double C, double lambda) {
  const Vector u = h.transpose() * f;
  Matrix a = Matrix::Identity(h.cols(), h.cols()) / C + h.transpose() * h + (lambda / C) * u * u.transpose();
  return a.fullPivLu().solve(Vector(h.transpose() * y));
}

/// ||b||^2 + C ||H b - y||^2 + lambda <H b, f>^2.
inline double penalized_objective(const Vector& b, const Matrix& h, const Vector& y, const Vector& f, double C,
                                  double lambda) {
  const Vector hb = h * b;
  const double corr = hb.dot(f);
  return b.squaredNorm() + C * (hb - y).squaredNorm() + lambda * corr * corr;
}

/// Central-difference gradient.
template <class Fn>
Vector central_gradient(Fn&& fn, const Vector& x, double step) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector plus = x;
    Vector minus = x;
    plus(i) += step;
    minus(i) -= step;
    g(i) = (fn(plus) - fn(minus)) / (2.0 * step);
  }
  return g;
}

inline double dense_spectral_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline double dense_symmetric_spectral_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// Root of det(X - g Y) for X = diag(x, y), Y = [[1,-1],[-1,1]] found by
/// bisection on the determinant evaluated entry by entry, over [0, hi].
inline double pencil_root_by_bisection(double x, double y) {
  auto det = [&](double g) { return (x - g) * (y - g) - (g) * (g); };
  double lo = 0.0;
  double hi = std::max(x, y);
  if (det(lo) == 0.0) return 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((det(mid) > 0.0) == (det(lo) > 0.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ncelm::testing
