#include <catch2/catch_amalgamated.hpp>

#include "dhym/forms.hpp"
#include "oracles.hpp"

using namespace dhym;
using Catch::Approx;

namespace {

HermitianPair random_pair(int n, Rng& rng) {
  return HermitianPair(random_hermitian(n, rng, 2.0), random_spd(n, rng));
}

}  // namespace

TEST_CASE("generalized spectrum, identity case") {
  for (int n = 1; n <= 3; ++n) {
    CMat id = cidentity(n);
    auto spec = generalized_spectrum(HermitianPair(id, id));
    for (int i = 0; i < n; ++i) {
      CHECK(spec.lambdas[i] == Approx(1.0).margin(1e-14));
      CHECK(spec.angles[i] == Approx(pi / 4).margin(1e-14));
    }
  }
}

TEST_CASE("generalized spectrum, diagonal case") {
  CMat omega = CMat::Zero(2, 2);
  omega(0, 0) = 2.0;
  omega(1, 1) = 3.0;
  auto spec = generalized_spectrum(HermitianPair(omega, cidentity(2)));
  CHECK(spec.lambdas[0] == Approx(3.0));
  CHECK(spec.lambdas[1] == Approx(2.0));
}

TEST_CASE("generalized spectrum matches characteristic-polynomial roots") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto pair = random_pair(3, rng);
    auto spec = generalized_spectrum(pair);
    auto roots = oracle::pencil_roots(pair.omega, pair.chi);
    double scale = std::abs(spec.lambdas[0]) + 1.0;
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(spec.lambdas[i] - roots[i]) <= 1e-10 * scale);
  }
}

TEST_CASE("non positive definite comparison form is rejected") {
  CMat chi = cidentity(2);
  chi(1, 1) = -1.0;
  CHECK_THROWS_AS(HermitianPair(cidentity(2), chi), ComparisonFormError);
}

TEST_CASE("angle sum over top subsets") {
  auto spec = spectrum_from_lambdas_desc((RVec(3) << 1, 1, 1).finished());
  CHECK(angle_sum_top_m(spec, 3) == Approx(3 * pi / 4));

  auto spec2 = spectrum_from_lambdas_desc((RVec(3) << 0, 1, 1).finished());
  CHECK(angle_sum_top_m(spec2, 2) == Approx(pi / 2 + pi / 4));

  CHECK_THROWS_AS(angle_sum_top_m(spec, 4), DomainError);
  CHECK_THROWS_AS(angle_sum_top_m(spec, 0), DomainError);

  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> lam;
    RVec v(3);
    for (int i = 0; i < 3; ++i) {
      v[i] = std::tan(rng.uniform(-1.4, 1.4));
      lam.push_back(v[i]);
    }
    auto s = spectrum_from_lambdas_desc(v);
    for (int m = 1; m <= 3; ++m)
      CHECK(angle_sum_top_m(s, m) == Approx(oracle::max_angle_sum_subsets(lam, m)).margin(1e-12));
  }
}

TEST_CASE("G^1 coefficients reduce to eigenvalues at theta = pi/2") {
  Rng rng(11);
  auto pair = random_pair(3, rng);
  auto spec = generalized_spectrum(pair);
  auto coeffs = g_form_coefficients(pair, PhaseSpec(pi / 2), 1);
  for (int i = 0; i < 3; ++i) CHECK(coeffs[i] == Approx(spec.lambdas[i]).margin(1e-12));
}

TEST_CASE("top G^3 coefficient flags non-membership for the unit spectrum") {
  auto spec = spectrum_from_lambdas_desc((RVec(3) << 1, 1, 1).finished());
  auto coeffs = g_subset_coefficients(spec, pi / 2, 3);
  REQUIRE(coeffs.size() == 1);
  double expected = 6.0 * std::pow(std::sqrt(2.0), 3) * std::sin(pi / 2 - 3 * pi / 4);
  CHECK(coeffs[0] == Approx(expected));
  CHECK(coeffs[0] < 0.0);
}

TEST_CASE("sine-formula coefficients agree with the closed polynomial forms") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.bits() % 3);
    auto pair = random_pair(n, rng);
    double theta = rng.uniform(0.1, pi - 0.1);
    auto spec = generalized_spectrum(pair);
    for (int k = 1; k <= n; ++k) {
      auto coeffs = g_subset_coefficients(spec, theta, k);
      const auto& subs = subsets(n, k);
      for (std::size_t s = 0; s < subs.size(); ++s) {
        std::vector<double> lam;
        for (int i : subs[s]) lam.push_back(spec.lambdas[i]);
        double closed = g_closed_subset(lam, theta);
        CHECK(std::abs(coeffs[s] - closed) <= 1e-10 * (1.0 + std::abs(closed)));
      }
    }
  }
}

TEST_CASE("P^2 coefficients at theta = pi/2") {
  Rng rng(31);
  CMat Omega = random_spd(3, rng, 0.5, 4.0);
  HermitianPair pair(Omega, cidentity(3));
  auto spec = generalized_spectrum(pair);
  auto coeffs = p_form_coefficients(pair, PhaseSpec(pi / 2), 2);
  const auto& subs = subsets(3, 2);
  for (std::size_t s = 0; s < subs.size(); ++s) {
    double expect = 2.0 * (spec.lambdas[subs[s][0]] * spec.lambdas[subs[s][1]] - 1.0);
    CHECK(coeffs[s] == Approx(expect).margin(1e-10));
  }
}

TEST_CASE("P^2 positive for scaled comparison form") {
  // Omega = c csc(theta) chi with c > 1
  double theta = 0.7, c = 1.7;
  double cs = 1.0 / std::sin(theta);
  CMat chi = cidentity(2);
  HermitianPair pair(CMat(c * cs * chi), chi);
  auto coeffs = p_form_coefficients(pair, PhaseSpec(theta), 2);
  for (double v : coeffs) CHECK(v == Approx(2.0 * (c * c * cs * cs - cs * cs)).margin(1e-10));
}

TEST_CASE("P^k equals G^k of the shifted pair") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng.bits() % 2);
    double theta = rng.uniform(0.15, pi - 0.15);
    CMat Omega = random_hermitian(n, rng);
    CMat chi = random_spd(n, rng);
    HermitianPair pOmega(Omega, chi);
    CMat shifted = Omega + (std::cos(theta) / std::sin(theta)) * chi;
    hermitize(shifted);
    HermitianPair pShift(shifted, chi);
    for (int k = 1; k <= n; ++k) {
      auto lhs = p_form_coefficients(pOmega, PhaseSpec(theta), k);
      auto rhs = g_form_coefficients(pShift, PhaseSpec(theta), k);
      for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-10 * (1.0 + std::abs(rhs[i])));
    }
  }
}

TEST_CASE("scalar residual special values") {
  auto spec = spectrum_from_lambdas_desc(
      (RVec(3) << std::sqrt(3.0), std::sqrt(3.0), std::sqrt(3.0)).finished());
  CHECK(dhym_scalar_residual(spec, pi / 2) == Approx(0.0).margin(1e-12));

  HermitianPair one(cidentity(1), cidentity(1));
  CHECK(dhym_scalar_residual(one, PhaseSpec(pi / 2)) == Approx(1.0));
}

TEST_CASE("scalar residual matches the complex determinant route") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng.bits() % 3);
    auto pair = random_pair(n, rng);
    double theta = rng.uniform(0.1, pi - 0.1);
    // (omega + i chi)^n / chi^n = det(chi^{-1} omega + i I)
    Eigen::MatrixXcd chi_inv = Eigen::MatrixXcd(pair.chi).inverse();
    std::complex<double> det =
        (chi_inv * Eigen::MatrixXcd(pair.omega) +
         std::complex<double>(0, 1) * Eigen::MatrixXcd::Identity(n, n))
            .determinant();
    double expect = det.real() - (std::cos(theta) / std::sin(theta)) * det.imag();
    double got = dhym_scalar_residual(pair, PhaseSpec(theta));
    CHECK(std::abs(got - expect) <= 1e-10 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("residual sign matches sin(theta - angle sum)") {
  Rng rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + static_cast<int>(rng.bits() % 3);
    auto pair = random_pair(n, rng);
    double theta = rng.uniform(0.1, pi - 0.1);
    auto spec = generalized_spectrum(pair);
    double r = dhym_scalar_residual(spec, theta);
    double s = std::sin(theta - spec.angle_sum());
    if (std::abs(s) > 1e-12) CHECK(r * s > 0.0);
  }
}

TEST_CASE("cone membership examples") {
  auto ones = spectrum_from_lambdas_desc((RVec(3) << 1, 1, 1).finished());
  auto rep = cone_membership(ones, PhaseSpec(2.5), 3);
  CHECK(rep.member_gamma[2] == Tristate::yes);

  auto mixed = spectrum_from_lambdas_desc((RVec(3) << 0, 1, 1).finished());
  auto rep2 = cone_membership(mixed, PhaseSpec(pi / 2), 2);
  CHECK(rep2.member_gamma[1] == Tristate::no);
}

TEST_CASE("borderline inputs are reported indeterminate") {
  // angle sum exactly theta
  auto spec = spectrum_from_lambdas_desc((RVec(2) << 1, 1).finished());
  auto rep = cone_membership(spec, PhaseSpec(pi / 2), 2);
  CHECK(rep.member_gamma[1] == Tristate::indeterminate);
}

TEST_CASE("angle-sum and coefficient-positivity predicates agree") {
  Rng rng(47);
  int checked = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    int n = 2 + static_cast<int>(rng.bits() % 2);
    auto pair = random_pair(n, rng);
    double theta = rng.uniform(0.1, pi - 0.1);
    auto rep = cone_membership(pair, PhaseSpec(theta), n);
    for (int m = 1; m <= n; ++m) {
      if (std::abs(rep.angle_margin[m - 1]) < borderline_tol ||
          std::abs(rep.coeff_margin[m - 1]) < borderline_tol)
        continue;
      ++checked;
      CHECK((rep.angle_margin[m - 1] > 0) == (rep.coeff_margin[m - 1] > 0));
    }
  }
  CHECK(checked > 5000);
}

TEST_CASE("matrix-level sine lemma inside the cone") {
  Rng rng(53);
  int found = 0;
  for (int trial = 0; trial < 40000 && found < 300; ++trial) {
    int n = 2 + static_cast<int>(rng.bits() % 2);
    auto pair = random_pair(n, rng);
    double theta = rng.uniform(0.5, pi - 0.1);
    auto spec = generalized_spectrum(pair);
    if (!in_gamma_m(spec, theta, n)) continue;
    ++found;
    for (int k = 1; k <= n; ++k)
      for (const auto& K : subsets(n, k)) {
        double asum = 0.0;
        for (int i : K) asum += spec.angles[i];
        CHECK(std::sin(theta - asum) > 0.0);
      }
  }
  CHECK(found >= 300);
}

TEST_CASE("cone is convex along sampled segments") {
  Rng rng(59);
  int found = 0;
  for (int trial = 0; trial < 20000 && found < 100; ++trial) {
    int n = 3;
    double theta = rng.uniform(1.0, pi - 0.2);
    CMat chi = random_spd(n, rng);
    CMat a = random_hermitian(n, rng, 1.5), b = random_hermitian(n, rng, 1.5);
    int m = 1 + static_cast<int>(rng.bits() % n);
    auto sa = generalized_spectrum(HermitianPair(a, chi));
    auto sb = generalized_spectrum(HermitianPair(b, chi));
    if (!in_gamma_m(sa, theta, m) || !in_gamma_m(sb, theta, m)) continue;
    ++found;
    for (double t : {0.25, 0.5, 0.75}) {
      CMat mid = t * a + (1 - t) * b;
      hermitize(mid);
      auto sm = generalized_spectrum(HermitianPair(mid, chi));
      CHECK(in_gamma_m(sm, theta, m));
    }
  }
  CHECK(found >= 100);
}

TEST_CASE("shrinking the comparison form preserves the C^m cone") {
  Rng rng(61);
  int found = 0;
  for (int trial = 0; trial < 20000 && found < 100; ++trial) {
    int n = 3;
    double theta = rng.uniform(0.6, pi - 0.2);
    CMat chi = random_spd(n, rng, 0.5, 2.0);
    CMat Omega = random_spd(n, rng, 0.1, 6.0);
    int m = 1 + static_cast<int>(rng.bits() % n);
    PhaseSpec phase(theta);
    bool in_cone = true;
    HermitianPair pair(Omega, chi);
    for (int k = 1; k <= m && in_cone; ++k)
      for (double c : p_form_coefficients(pair, phase, k))
        if (c <= 1e-9) in_cone = false;
    if (!in_cone) continue;
    ++found;
    // chi0 = chi scaled down plus a PSD reduction stays below chi
    CMat w = random_hermitian(n, rng, 0.3);
    CMat chi0 = 0.8 * chi - 0.1 * (w * w.adjoint());
    hermitize(chi0);
    if (!is_positive_definite(chi0)) continue;
    HermitianPair pair0(Omega, chi0);
    for (int k = 1; k <= m; ++k)
      for (double c : p_form_coefficients(pair0, phase, k)) CHECK(c > -1e-9);
  }
  CHECK(found >= 100);
}
