#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dhym/common.hpp"

namespace dhym {

// Complex matrices up to 3x3, stack allocated.
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

inline CMat cidentity(int n) { return CMat::Identity(n, n); }

inline bool is_hermitian(const CMat& a, double tol = 1e-12) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline void hermitize(CMat& a) { a = 0.5 * (a + a.adjoint()).eval(); }

inline double min_eigenvalue(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_positive_definite(const CMat& a, double tol = 0.0) {
  return min_eigenvalue(a) > tol;
}

/// Eigenvalues of the pencil det(a - lambda b) = 0 for Hermitian a and
/// positive definite b, ascending. Cholesky reduction to a standard
/// Hermitian problem, via Eigen.
inline RVec pencil_eigenvalues(const CMat& a, const CMat& b) {
  Eigen::LLT<CMat> llt(b);
  if (llt.info() != Eigen::Success)
    throw ComparisonFormError("comparison form is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(a, b, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  return es.eigenvalues();
}

// Random matrix helpers for the Monte Carlo suites.

inline CMat random_hermitian(int n, Rng& rng, double scale = 1.0) {
  CMat a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = scale * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = scale * std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
      a(j, i) = std::conj(a(i, j));
    }
  }
  return a;
}

/// Random positive definite matrix with eigenvalues in roughly [lo, hi].
inline CMat random_spd(int n, Rng& rng, double lo = 0.2, double hi = 5.0) {
  CMat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(n, n);
  CMat d = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  CMat a = q * d * q.adjoint();
  hermitize(a);
  return a;
}

/// Random unitary (Haar-ish via QR of a Ginibre matrix).
inline CMat random_unitary(int n, Rng& rng) {
  CMat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMat> qr(g);
  return qr.householderQ() * CMat::Identity(n, n);
}

/// Hermitian matrix with prescribed eigenvalues in a random frame.
inline CMat hermitian_with_spectrum(const std::vector<double>& lam, Rng& rng) {
  int n = static_cast<int>(lam.size());
  CMat u = random_unitary(n, rng);
  CMat d = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = lam[i];
  CMat a = u * d * u.adjoint();
  hermitize(a);
  return a;
}

}  // namespace dhym
