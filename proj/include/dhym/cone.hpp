#pragma once

// Pointwise cone-condition algebra for Hermitian pairs: Lagrangian angles,
// the degree-k positivity polynomials G_theta^k / P_theta^k evaluated through
// their subset coefficients, and membership tests for the cones
// Gamma^m_{chi,theta}, Gamma_{chi,theta,Theta} and C^m_{chi,theta}.

#include <map>
#include <optional>
#include <vector>

#include "dhym/linalg.hpp"

namespace dhym {

/// Supercritical phase data: 0 < theta < pi, optionally theta < Theta < pi.
struct PhaseSpec {
  double theta;
  std::optional<double> Theta;

  explicit PhaseSpec(double theta_, std::optional<double> Theta_ = std::nullopt)
      : theta(theta_), Theta(Theta_) {
    if (!(theta > 0.0 && theta < pi)) throw DomainError("phase angle outside (0, pi)");
    if (Theta && !(*Theta > theta && *Theta < pi))
      throw DomainError("upper phase outside (theta, pi)");
  }
  double cot() const { return std::cos(theta) / std::sin(theta); }
  double csc() const { return 1.0 / std::sin(theta); }
};

/// A Hermitian matrix omega measured against a positive definite chi.
struct HermitianPair {
  CMat omega;
  CMat chi;
  int n;

  HermitianPair(CMat omega_, CMat chi_) : omega(std::move(omega_)), chi(std::move(chi_)) {
    n = static_cast<int>(omega.rows());
    if (n < 1 || n > 3 || omega.cols() != n || chi.rows() != n || chi.cols() != n)
      throw DomainError("pair dimension must be 1, 2 or 3");
    if (!is_hermitian(omega) || !is_hermitian(chi))
      throw DomainError("pair entries must be Hermitian");
    if (!is_positive_definite(chi))
      throw ComparisonFormError("comparison form is not positive definite");
  }
};

/// Eigenvalues of omega against chi (descending) with the matching
/// Lagrangian angles arccot(lambda_i) (ascending).
struct EigenSpectrum {
  RVec lambdas;  // descending
  RVec angles;   // ascending, angles[i] = arccot(lambdas[i])

  int n() const { return static_cast<int>(lambdas.size()); }
  double angle_sum() const { return angles.sum(); }
};

inline EigenSpectrum spectrum_from_lambdas_desc(RVec lam) {
  EigenSpectrum s;
  std::sort(lam.data(), lam.data() + lam.size(), std::greater<double>());
  s.lambdas = lam;
  s.angles.resize(lam.size());
  for (int i = 0; i < lam.size(); ++i) s.angles[i] = arccot(lam[i]);
  return s;
}

inline EigenSpectrum generalized_spectrum(const HermitianPair& pair) {
  RVec asc = pencil_eigenvalues(pair.omega, pair.chi);
  RVec desc(asc.size());
  for (int i = 0; i < asc.size(); ++i) desc[i] = asc[asc.size() - 1 - i];
  return spectrum_from_lambdas_desc(desc);
}

/// Largest sum of m Lagrangian angles, i.e. the angles of the m smallest
/// eigenvalues.
inline double angle_sum_top_m(const EigenSpectrum& spec, int m) {
  if (m < 1 || m > spec.n()) throw DomainError("subset size out of range");
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += spec.angles[spec.n() - 1 - i];
  return s;
}

// Subsets of {0..n-1} of size k, lexicographic. The full table for n <= 3
// is built once (thread-safe magic static).
inline const std::vector<std::vector<int>>& subsets(int n, int k) {
  static const auto table = [] {
    std::map<std::pair<int, int>, std::vector<std::vector<int>>> t;
    for (int nn = 0; nn <= 3; ++nn)
      for (int kk = 0; kk <= nn; ++kk) {
        std::vector<std::vector<int>> out;
        std::vector<int> cur;
        std::function<void(int)> rec = [&](int start) {
          if (static_cast<int>(cur.size()) == kk) {
            out.push_back(cur);
            return;
          }
          for (int i = start; i < nn; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
          }
        };
        rec(0);
        t[{nn, kk}] = std::move(out);
      }
    return t;
  }();
  auto it = table.find({n, k});
  if (it == table.end()) throw DomainError("subsets: bad (n, k)");
  return it->second;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Subset coefficients of G_theta^k in the eigenbasis of the pair:
/// for each K with |K| = k,
///   k! * prod_{i in K} sqrt(1+lambda_i^2) * sin(theta - sum_K theta_i) / sin(theta).
/// All coefficients positive <=> G_theta^k(omega, chi) > 0 as a (k,k)-form.
inline std::vector<double> g_subset_coefficients(const EigenSpectrum& spec, double theta, int k) {
  const int n = spec.n();
  if (k < 1 || k > n) throw DomainError("form degree out of range");
  const double kfact = factorial(k);
  const double inv_sin = 1.0 / std::sin(theta);
  std::vector<double> out;
  for (const auto& K : subsets(n, k)) {
    double prod = kfact, asum = 0.0;
    for (int i : K) {
      prod *= std::sqrt(1.0 + spec.lambdas[i] * spec.lambdas[i]);
      asum += spec.angles[i];
    }
    out.push_back(prod * std::sin(theta - asum) * inv_sin);
  }
  return out;
}

inline std::vector<double> g_form_coefficients(const HermitianPair& pair, const PhaseSpec& spec,
                                               int k) {
  return g_subset_coefficients(generalized_spectrum(pair), spec.theta, k);
}

/// P_theta^k(Omega, chi) = G_theta^k(Omega + cot(theta) chi, chi); the pair
/// argument carries Omega in place of omega.
inline std::vector<double> p_form_coefficients(const HermitianPair& Omega_pair,
                                               const PhaseSpec& spec, int k) {
  CMat shifted = Omega_pair.omega + spec.cot() * Omega_pair.chi;
  hermitize(shifted);
  return g_form_coefficients(HermitianPair(shifted, Omega_pair.chi), spec, k);
}

/// P^k subset coefficients from the eigenvalues mu of Omega against chi.
inline std::vector<double> p_subset_coefficients_from_mu(const RVec& mu_desc, double theta,
                                                         int k) {
  RVec lam = mu_desc;
  const double ct = std::cos(theta) / std::sin(theta);
  for (int i = 0; i < lam.size(); ++i) lam[i] += ct;
  return g_subset_coefficients(spectrum_from_lambdas_desc(lam), theta, k);
}

/// Pointwise scalar G_theta^n(omega,chi) / chi^n:
///   prod_i sqrt(1+lambda_i^2) * sin(theta - sum_i theta_i) / sin(theta).
inline double dhym_scalar_residual(const EigenSpectrum& spec, double theta) {
  double prod = 1.0;
  for (int i = 0; i < spec.n(); ++i)
    prod *= std::sqrt(1.0 + spec.lambdas[i] * spec.lambdas[i]);
  return prod * std::sin(theta - spec.angle_sum()) / std::sin(theta);
}

inline double dhym_scalar_residual(const HermitianPair& pair, const PhaseSpec& spec) {
  return dhym_scalar_residual(generalized_spectrum(pair), spec.theta);
}

/// Membership report for the angle cones. Booleans are tri-state: any
/// predicate within borderline_tol of zero is indeterminate.
struct ConeReport {
  int n = 0;
  std::vector<Tristate> member_gamma;         // index m-1 for m = 1..n
  Tristate member_gamma_theta_Theta = Tristate::indeterminate;
  std::map<int, std::vector<double>> subset_coefficients;  // k -> coefficients
  std::vector<double> angle_margin;   // theta - angle_sum_top_m(m)
  std::vector<double> coeff_margin;   // min coefficient over degrees <= m
  double theta_Theta_margin = 0.0;    // min(Theta - full sum, theta - top (n-1) sum)

  bool decided_member(int m) const { return member_gamma.at(m - 1) == Tristate::yes; }
};

inline ConeReport cone_membership(const EigenSpectrum& spec, const PhaseSpec& phase, int m) {
  const int n = spec.n();
  if (m < 1 || m > n) throw DomainError("cone level out of range");
  ConeReport rep;
  rep.n = n;
  for (int k = 1; k <= n; ++k)
    rep.subset_coefficients[k] = g_subset_coefficients(spec, phase.theta, k);
  double worst_coeff = std::numeric_limits<double>::infinity();
  for (int mm = 1; mm <= n; ++mm) {
    rep.angle_margin.push_back(phase.theta - angle_sum_top_m(spec, mm));
    for (double c : rep.subset_coefficients[mm]) worst_coeff = std::min(worst_coeff, c);
    rep.coeff_margin.push_back(worst_coeff);
    rep.member_gamma.push_back(classify(rep.angle_margin.back()));
  }
  if (phase.Theta) {
    double full = spec.angle_sum();
    double top = (n > 1) ? angle_sum_top_m(spec, n - 1) : 0.0;
    double margin = *phase.Theta - full;
    if (n > 1) margin = std::min(margin, phase.theta - top);
    rep.theta_Theta_margin = margin;
    rep.member_gamma_theta_Theta = classify(margin);
  }
  return rep;
}

inline ConeReport cone_membership(const HermitianPair& pair, const PhaseSpec& phase, int m) {
  return cone_membership(generalized_spectrum(pair), phase, m);
}

/// True when the angle predicate puts the spectrum in Gamma^m strictly
/// (no borderline guard; used by samplers).
inline bool in_gamma_m(const EigenSpectrum& spec, double theta, int m) {
  return angle_sum_top_m(spec, m) < theta;
}

}  // namespace dhym
