#pragma once

// Exterior algebra of (k,k)-forms on C^n (n <= 3) built from (1,1)-forms
// with matrix coefficients, used to evaluate the polynomials G_theta^k,
// P_theta^k and their binomial expansion identities on non-commuting
// arguments. Coefficients are stored against the basis dz^I ^ dzbar^J with
// I, J increasing k-subsets.

#include "dhym/cone.hpp"

namespace dhym {

struct FormTensor {
  int n = 0;
  int k = 0;  // bidegree (k,k)
  std::vector<std::complex<double>> c;  // row-major over (I, J) subset pairs

  static FormTensor zero(int n, int k) {
    FormTensor f;
    f.n = n;
    f.k = k;
    std::size_t m = subsets(n, k).size();
    f.c.assign(m * m, {0.0, 0.0});
    return f;
  }
  static FormTensor constant_one(int n) {
    FormTensor f = zero(n, 0);
    f.c[0] = 1.0;
    return f;
  }
  /// The (1,1)-form i * sum M_jk dz^j ^ dzbar^k.
  static FormTensor one_one(const CMat& m) {
    int n = static_cast<int>(m.rows());
    FormTensor f = zero(n, 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) f.c[i * n + j] = std::complex<double>(0.0, 1.0) * m(i, j);
    return f;
  }

  std::complex<double>& at(std::size_t i, std::size_t j) {
    return c[i * subsets(n, k).size() + j];
  }
  std::complex<double> at(std::size_t i, std::size_t j) const {
    return c[i * subsets(n, k).size() + j];
  }

  FormTensor& operator+=(const FormTensor& o) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
    return *this;
  }
  FormTensor& operator*=(std::complex<double> s) {
    for (auto& x : c) x *= s;
    return *this;
  }

  /// Hermitian matrix view H_{IJ} = c_{IJ} / s_k with
  /// s_k = i^k (-1)^{k(k-1)/2}, so that wedge_{i in I} (i dz^i ^ dzbar^i)
  /// maps to a diagonal 1. For a real (k,k)-form the view is Hermitian and
  /// its diagonal holds the subset coefficients.
  std::vector<std::complex<double>> hermitian_view() const {
    std::complex<double> sk(1.0, 0.0);
    for (int i = 0; i < k; ++i) sk *= std::complex<double>(0.0, 1.0);
    if (((k * (k - 1) / 2) % 2) == 1) sk = -sk;
    std::vector<std::complex<double>> h(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) h[i] = c[i] / sk;
    return h;
  }
};

namespace detail {

// Sign of merging two disjoint increasing index lists into one increasing
// list: parity of the number of pairs (p in a, q in b) with q < p.
inline int merge_sign(const std::vector<int>& a, const std::vector<int>& b) {
  int inv = 0;
  for (int p : a)
    for (int q : b)
      if (q < p) ++inv;
  return (inv % 2 == 0) ? 1 : -1;
}

inline bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  for (int p : a)
    for (int q : b)
      if (p == q) return false;
  return true;
}

inline std::vector<int> merged(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> m = a;
  m.insert(m.end(), b.begin(), b.end());
  std::sort(m.begin(), m.end());
  return m;
}

inline std::size_t subset_index(int n, const std::vector<int>& s) {
  const auto& list = subsets(n, static_cast<int>(s.size()));
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == s) return i;
  throw DomainError("subset not found");
}

}  // namespace detail

inline FormTensor wedge(const FormTensor& a, const FormTensor& b) {
  if (a.n != b.n) throw DomainError("wedge on mismatched dimensions");
  const int n = a.n, ka = a.k, kb = b.k, k = ka + kb;
  if (k > n) throw DomainError("wedge degree exceeds dimension");
  FormTensor out = FormTensor::zero(n, k);
  const auto& subA = subsets(n, ka);
  const auto& subB = subsets(n, kb);
  // moving the dz block of b across the dzbar block of a
  const double block_sign = ((ka * kb) % 2 == 0) ? 1.0 : -1.0;
  for (std::size_t ia = 0; ia < subA.size(); ++ia)
    for (std::size_t ja = 0; ja < subA.size(); ++ja) {
      std::complex<double> ca = a.at(ia, ja);
      if (ca == std::complex<double>(0.0, 0.0)) continue;
      for (std::size_t ib = 0; ib < subB.size(); ++ib)
        for (std::size_t jb = 0; jb < subB.size(); ++jb) {
          std::complex<double> cb = b.at(ib, jb);
          if (cb == std::complex<double>(0.0, 0.0)) continue;
          const auto& I1 = subA[ia];
          const auto& I2 = subB[ib];
          const auto& J1 = subA[ja];
          const auto& J2 = subB[jb];
          if (!detail::disjoint(I1, I2) || !detail::disjoint(J1, J2)) continue;
          double sgn = block_sign * detail::merge_sign(I1, I2) * detail::merge_sign(J1, J2);
          std::size_t I = detail::subset_index(n, detail::merged(I1, I2));
          std::size_t J = detail::subset_index(n, detail::merged(J1, J2));
          out.at(I, J) += sgn * ca * cb;
        }
    }
  return out;
}

inline FormTensor wedge_power(const FormTensor& a, int p) {
  if (p == 0) return FormTensor::constant_one(a.n);
  FormTensor out = a;
  for (int i = 1; i < p; ++i) out = wedge(out, a);
  return out;
}

/// Real and imaginary parts of a (k,k)-form, as forms.
inline FormTensor real_part(const FormTensor& f) {
  FormTensor out = f;
  const auto& sub = subsets(f.n, f.k);
  double sk = (f.k % 2 == 0) ? 1.0 : -1.0;
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t j = 0; j < sub.size(); ++j)
      out.at(i, j) = 0.5 * (f.at(i, j) + sk * std::conj(f.at(j, i)));
  return out;
}

inline FormTensor imag_part(const FormTensor& f) {
  FormTensor out = f;
  const auto& sub = subsets(f.n, f.k);
  double sk = (f.k % 2 == 0) ? 1.0 : -1.0;
  const std::complex<double> two_i(0.0, 2.0);
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t j = 0; j < sub.size(); ++j)
      out.at(i, j) = (f.at(i, j) - sk * std::conj(f.at(j, i))) / two_i;
  return out;
}

/// G_theta^k(alpha, beta) = Re (alpha + i beta)^k - cot(theta) Im (alpha + i beta)^k
/// as a coefficient tensor. alpha, beta Hermitian in a common frame.
inline FormTensor g_form_tensor(const CMat& alpha, const CMat& beta, double theta, int k) {
  int n = static_cast<int>(alpha.rows());
  if (k == 0) return FormTensor::constant_one(n);
  CMat z = alpha + std::complex<double>(0.0, 1.0) * beta;
  FormTensor wp = wedge_power(FormTensor::one_one(z), k);
  FormTensor re = real_part(wp), im = imag_part(wp);
  im *= std::cos(theta) / std::sin(theta);
  for (std::size_t i = 0; i < re.c.size(); ++i) re.c[i] -= im.c[i];
  return re;
}

inline FormTensor p_form_tensor(const CMat& Omega, const CMat& beta, double theta, int k) {
  CMat shifted = Omega + (std::cos(theta) / std::sin(theta)) * beta;
  return g_form_tensor(shifted, beta, theta, k);
}

inline double binomial(int k, int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v = v * (k - i) / (i + 1);
  return v;
}

/// Both sides of G^k(alpha + delta, beta) = sum_r C(k,r) G^r(alpha,beta) delta^{k-r},
/// returned as flattened Hermitian-view coefficient lists for comparison.
struct BinomialExpansion {
  FormTensor lhs, rhs;
  std::vector<std::complex<double>> lhs_coefficients() const { return lhs.hermitian_view(); }
  std::vector<std::complex<double>> rhs_coefficients() const { return rhs.hermitian_view(); }
  double max_abs_difference() const {
    double m = 0.0;
    for (std::size_t i = 0; i < lhs.c.size(); ++i) m = std::max(m, std::abs(lhs.c[i] - rhs.c[i]));
    return m;
  }
  double max_abs_value() const {
    double m = 0.0;
    for (const auto& x : lhs.c) m = std::max(m, std::abs(x));
    for (const auto& x : rhs.c) m = std::max(m, std::abs(x));
    return m;
  }
};

inline BinomialExpansion expand_binomial(const CMat& alpha, const CMat& delta, const CMat& beta,
                                         double theta, int k) {
  BinomialExpansion out;
  out.lhs = g_form_tensor(alpha + delta, beta, theta, k);
  out.rhs = FormTensor::zero(static_cast<int>(alpha.rows()), k);
  FormTensor dform = FormTensor::one_one(delta);
  for (int r = 0; r <= k; ++r) {
    FormTensor term = wedge(g_form_tensor(alpha, beta, theta, r), wedge_power(dform, k - r));
    term *= binomial(k, r);
    out.rhs += term;
  }
  return out;
}

/// Same identity for P^k.
inline BinomialExpansion expand_binomial_p(const CMat& Omega, const CMat& delta, const CMat& beta,
                                           double theta, int k) {
  BinomialExpansion out;
  out.lhs = p_form_tensor(Omega + delta, beta, theta, k);
  out.rhs = FormTensor::zero(static_cast<int>(Omega.rows()), k);
  FormTensor dform = FormTensor::one_one(delta);
  for (int r = 0; r <= k; ++r) {
    FormTensor term = wedge(p_form_tensor(Omega, beta, theta, r), wedge_power(dform, k - r));
    term *= binomial(k, r);
    out.rhs += term;
  }
  return out;
}

// Closed polynomial forms of G^k and P^k for k <= 3, evaluated on the
// subset {i...} of a diagonalized pair. Cross-check oracles for the sine
// formula; sigma_j are elementary symmetric functions of the subset.

inline double g_closed_subset(const std::vector<double>& lam, double theta) {
  const double ct = std::cos(theta) / std::sin(theta);
  const int k = static_cast<int>(lam.size());
  const double kf = factorial(k);
  if (k == 1) return lam[0] - ct;
  if (k == 2) return kf * (lam[0] * lam[1] - ct * (lam[0] + lam[1]) - 1.0);
  if (k == 3) {
    double s1 = lam[0] + lam[1] + lam[2];
    double s2 = lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2];
    double s3 = lam[0] * lam[1] * lam[2];
    return kf * (s3 - ct * s2 - s1 + ct);
  }
  throw DomainError("closed form only for k <= 3");
}

inline double p_closed_subset(const std::vector<double>& mu, double theta) {
  const double cs2 = 1.0 / (std::sin(theta) * std::sin(theta));
  const double ct = std::cos(theta) / std::sin(theta);
  const int k = static_cast<int>(mu.size());
  const double kf = factorial(k);
  if (k == 1) return mu[0];
  if (k == 2) return kf * (mu[0] * mu[1] - cs2);
  if (k == 3) {
    double s1 = mu[0] + mu[1] + mu[2];
    double s3 = mu[0] * mu[1] * mu[2];
    return kf * (s3 - cs2 * s1 - 2.0 * cs2 * ct);
  }
  throw DomainError("closed form only for k <= 3");
}

}  // namespace dhym
