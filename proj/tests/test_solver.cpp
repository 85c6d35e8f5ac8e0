#include <catch2/catch_amalgamated.hpp>

#include "dhym/solver.hpp"

using namespace dhym;
using namespace dhym::torus;
using Catch::Approx;

namespace {

ActiveCoords ac(std::initializer_list<const char*> names) {
  ActiveCoords a;
  for (const char* n : names) a.coords.push_back(parse_real_coord(n));
  return a;
}

FlatBackground bg_n3_sym(double theta = pi / 2, std::initializer_list<const char*> act = {"x1",
                                                                                          "y1"}) {
  // symmetric interior point of the degree-3 cone: for theta = pi/2 the
  // class-compatible constant is sqrt(3) I
  double c = std::sqrt(3.0);
  if (theta != pi / 2) {
    // solve sin^2 c^3 = 3c + 2cot numerically (monotone for c > csc)
    double s2 = std::sin(theta) * std::sin(theta), cot = std::cos(theta) / std::sin(theta);
    double lo = 1.0 / std::sin(theta), hi = 10 / std::sin(theta);
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (s2 * mid * mid * mid - 3 * mid - 2 * cot > 0 ? hi : lo) = mid;
    }
    c = 0.5 * (lo + hi);
  }
  CMat chi0 = cidentity(3);
  CMat H0 = (c + std::cos(theta) / std::sin(theta)) * cidentity(3);
  return FlatBackground(3, chi0, H0, PhaseSpec(theta), ac(act));
}

}  // namespace

TEST_CASE("background validation rejects out-of-cone data") {
  CMat chi0 = cidentity(2);
  CMat H0 = CMat::Zero(2, 2);
  H0(0, 0) = -0.2;  // arccot(-0.2) > pi/2 already violates Gamma^1
  H0(1, 1) = 3.0;
  CHECK_THROWS_AS(FlatBackground(2, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"})),
                  DomainError);
}

TEST_CASE("constant symmetric state solves the degree-3 equation") {
  auto bg = bg_n3_sym();
  auto phi = PeriodicField::zeros({16, 16});
  auto f = PeriodicField::zeros({16, 16});
  auto res = residual_field(phi, 0.7, f, bg);
  CHECK(res.d_t == 0.0);
  CHECK(res.r.sup_norm() < 1e-14);
}

TEST_CASE("degree-1 residual is linear and exact") {
  CMat chi0 = cidentity(1);
  CMat H0 = cidentity(1);  // Omega-hat = 1 at theta = pi/2
  FlatBackground bg(1, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"}));
  auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
    return 0.4 * std::cos(x[0]) + 0.3 * std::sin(x[1]) + 0.2 * std::cos(x[0] + x[1]);
  });
  auto f = manufactured_twist(phi_star, bg);
  auto res = residual_field(phi_star, 1.0, f, bg);
  CHECK(res.r.sup_norm() < 1e-13);
}

TEST_CASE("manufactured states zero the residual in every dimension") {
  // n = 2
  {
    CMat chi0 = cidentity(2);
    CMat H0 = 1.8 * cidentity(2);
    FlatBackground bg(2, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"}));
    auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
      return 0.25 * std::cos(x[0]) + 0.2 * std::sin(x[1]);
    });
    auto f = manufactured_twist(phi_star, bg);
    auto res = residual_field(phi_star, 1.0, f, bg);
    CHECK(res.r.sup_norm() < 1e-12);
  }
  // n = 3
  {
    auto bg = bg_n3_sym(1.9, {"x1", "x2"});
    auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
      return 0.15 * std::cos(x[0]) + 0.1 * std::sin(x[1]) + 0.05 * std::cos(x[0] - x[1]);
    });
    auto f = manufactured_twist(phi_star, bg);
    auto res = residual_field(phi_star, 1.0, f, bg);
    CHECK(res.r.sup_norm() < 1e-12);
  }
}

TEST_CASE("residual guards the cone") {
  auto bg = bg_n3_sym();
  auto phi = field_from({16, 16}, [](const std::vector<double>& x) {
    return 12.0 * std::cos(x[0]);  // destroys positivity
  });
  auto f = PeriodicField::zeros({16, 16});
  CHECK_THROWS_AS(residual_field(phi, 0.5, f, bg), ConeViolation);
}

TEST_CASE("linearization vanishes on the zero direction") {
  auto bg = bg_n3_sym();
  auto phi = PeriodicField::zeros({16, 16});
  auto f = PeriodicField::zeros({16, 16});
  auto lu = linearized_apply(phi, PeriodicField::zeros({16, 16}), 0.3, f, bg);
  CHECK(lu.sup_norm() == 0.0);
}

TEST_CASE("linearization matches directional finite differences") {
  Rng rng(11);
  for (int n : {1, 2, 3}) {
    FlatBackground bg = [&]() -> FlatBackground {
      if (n == 1)
        return FlatBackground(1, cidentity(1), cidentity(1), PhaseSpec(pi / 2),
                              ac({"x1", "y1"}));
      if (n == 2)
        return FlatBackground(2, cidentity(2), 1.8 * cidentity(2), PhaseSpec(1.3),
                              ac({"x1", "y1"}));
      return bg_n3_sym(1.7);
    }();
    auto phi = field_from({16, 16}, [&](const std::vector<double>& x) {
      return 0.1 * std::cos(x[0]) + 0.07 * std::sin(x[1] + 0.3);
    });
    auto f = manufactured_twist(phi, bg);  // compatible twist, any valid state works
    double t = 0.6;
    auto base = residual_field(phi, t, f, bg);
    for (int dir = 0; dir < 5; ++dir) {
      double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), ph1 = rng.uniform(0, 2 * pi);
      auto u = field_from({16, 16}, [&](const std::vector<double>& x) {
        return a1 * std::cos(x[0] + ph1) + a2 * std::sin(2 * x[1]) +
               0.3 * a1 * std::cos(x[0] + 2 * x[1]);
      });
      u.subtract_mean();
      double eps = 1e-6;
      PeriodicField bumped = phi;
      bumped.axpy(eps, u);
      auto pert = residual_field(bumped, t, f, bg);
      auto lu = linearized_apply(phi, u, t, f, bg);
      double worst = 0.0, scale = lu.sup_norm();
      for (std::size_t p = 0; p < lu.size(); ++p)
        worst = std::max(worst, std::abs((pert.r.v[p] - base.r.v[p]) / eps - lu.v[p]));
      CHECK(worst <= 1e-5 * (scale + 1.0));
    }
  }
}

TEST_CASE("linearization of a cosine mode at a constant state is a pure cosine") {
  auto bg = bg_n3_sym();
  const int N = 32;
  auto phi = PeriodicField::zeros({N, N});
  auto f = PeriodicField::zeros({N, N});
  auto u = field_from({N, N}, [](const std::vector<double>& x) { return std::cos(x[0]); });
  auto lu = linearized_apply(phi, u, 0.0, f, bg);
  // constant coefficients: W11 * (-cos(x)/4) with W = (I - (tr+2z) B^{-1})/det
  double c = std::sqrt(3.0);
  double w11 = (1.0 - (3.0 * c) / c) / (c * c * c);
  for (std::size_t p = 0; p < lu.size(); ++p) {
    int i0 = static_cast<int>(p) / N;
    double expect = w11 * (-std::cos(2 * pi * i0 / N) / 4.0);
    CHECK(lu.v[p] == Approx(expect).margin(1e-13));
  }
}

TEST_CASE("newton leaves an exact solution untouched") {
  auto bg = bg_n3_sym();
  auto phi_star = field_from({16, 16}, [](const std::vector<double>& x) {
    return 0.1 * std::cos(x[0]) + 0.08 * std::sin(x[1]);
  });
  phi_star.subtract_mean();
  auto f = manufactured_twist(phi_star, bg);
  SolverConfig cfg;
  PeriodicField phi = phi_star;
  auto rep = newton_at_t(phi, 1.0, internal_twist(f, bg), bg, cfg);
  CHECK(rep.converged);
  CHECK(rep.iters == 0);
  CHECK(rep.residual_norm < 1e-12);
  CHECK(std::abs(rep.b_slack) < 1e-12);
  double diff = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p)
    diff = std::max(diff, std::abs(phi.v[p] - phi_star.v[p]));
  CHECK(diff == 0.0);
}

TEST_CASE("newton converges quadratically near the solution") {
  auto bg = bg_n3_sym(1.8);
  auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
    return 0.12 * std::cos(x[0]) + 0.1 * std::sin(x[1]);
  });
  phi_star.subtract_mean();
  auto f = internal_twist(manufactured_twist(phi_star, bg), bg);
  SolverConfig cfg;
  cfg.gmres_tol_loose = 1e-12;  // expose the pure Newton rate
  cfg.gmres_tol_tight = 1e-12;
  PeriodicField phi = PeriodicField::zeros({32, 32});
  auto rep = newton_at_t(phi, 1.0, f, bg, cfg);
  REQUIRE(rep.converged);
  const auto& h = rep.residual_history;
  REQUIRE(h.size() >= 4);
  // fit the convergence order on consecutive triples above the floor
  int quadratic_pairs = 0;
  for (std::size_t i = 0; i + 2 < h.size(); ++i) {
    if (h[i + 2] < 1e-14 || h[i] > 0.5) continue;
    double p = std::log(h[i + 2] / h[i + 1]) / std::log(h[i + 1] / h[i]);
    if (p > 1.6) ++quadratic_pairs;
  }
  CHECK(quadratic_pairs >= 1);
  // and the tail drops dramatically
  CHECK(h.back() < 1e-11);
}

TEST_CASE("newton damps steps that would leave the cone") {
  // marginal background: the full first step from zero overshoots
  CMat chi0 = cidentity(2);
  CMat H0 = 1.12 * cidentity(2);
  FlatBackground bg(2, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "x2"}));
  // the target sits 0.04 inside the cone; the full first step from zero
  // crosses the boundary and must be halved
  auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
    return 3.19 * std::cos(x[0]) + 2.882 * std::sin(x[1]) + 0.88 * std::cos(x[0] + x[1]);
  });
  phi_star.subtract_mean();
  auto f = internal_twist(manufactured_twist(phi_star, bg), bg);
  SolverConfig cfg;
  cfg.max_newton = 80;
  PeriodicField phi = PeriodicField::zeros({32, 32});
  auto rep = newton_at_t(phi, 1.0, f, bg, cfg);
  INFO(rep.reason);
  CHECK(rep.converged);
  CHECK(rep.any_damped);
  CHECK(rep.cone_margin > 0.0);
}

TEST_CASE("trivial continuity run stays at zero") {
  auto bg = bg_n3_sym();
  auto f = PeriodicField::zeros({16, 16});
  SolverConfig cfg;
  auto rep = continuity_run(f, bg, cfg);
  REQUIRE(rep.converged);
  CHECK(rep.phi.sup_norm() < 1e-12);
  CHECK(rep.final_residual < cfg.newton_tol);
  CHECK(rep.path.front().t == 0.0);
  CHECK(rep.path.back().t == 1.0);
}

TEST_CASE("twist preconditions are rejected before solving") {
  auto bg = bg_n3_sym();
  auto f = field_from({16, 16}, [](const std::vector<double>&) { return -80.0; });
  SolverConfig cfg;
  CHECK_THROWS_AS(continuity_run(f, bg, cfg), DomainError);

  // incompatible mean
  auto f2 = field_from({16, 16}, [](const std::vector<double>&) { return 0.3; });
  CHECK_THROWS_AS(continuity_run(f2, bg, cfg), DomainError);
}

TEST_CASE("manufactured continuity run recovers the state, degree 2") {
  CMat chi0 = cidentity(2);
  CMat H0 = 1.8 * cidentity(2);
  FlatBackground bg(2, chi0, H0, PhaseSpec(1.9), ac({"x1", "y1"}));
  auto phi_star = field_from({64, 64}, [](const std::vector<double>& x) {
    return 0.3 * std::cos(x[0]) + 0.22 * std::sin(x[1]) + 0.1 * std::cos(x[0] + 2 * x[1]);
  });
  phi_star.subtract_mean();
  auto f = manufactured_twist(phi_star, bg);
  SolverConfig cfg;
  auto rep = continuity_run(f, bg, cfg);
  REQUIRE(rep.converged);
  double err = 0.0;
  for (std::size_t p = 0; p < rep.phi.size(); ++p)
    err = std::max(err, std::abs(rep.phi.v[p] - phi_star.v[p]));
  CHECK(err < 1e-8);
  for (const auto& e : rep.path) CHECK(e.cone_margin > 0.0);
}

TEST_CASE("manufactured continuity run recovers the state, degree 3") {
  auto bg = bg_n3_sym(1.7, {"x1", "x2"});
  auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
    return 0.2 * std::cos(x[0]) + 0.16 * std::sin(x[1]) + 0.07 * std::cos(x[0] - x[1]);
  });
  phi_star.subtract_mean();
  auto f = manufactured_twist(phi_star, bg);
  SolverConfig cfg;
  auto rep = continuity_run(f, bg, cfg);
  REQUIRE(rep.converged);
  double err = 0.0;
  for (std::size_t p = 0; p < rep.phi.size(); ++p)
    err = std::max(err, std::abs(rep.phi.v[p] - phi_star.v[p]));
  CHECK(err < 1e-8);
  // path invariants: d_t identity and positive margins
  auto f_int = internal_twist(f, bg);
  double fm = f_int.mean();
  for (const auto& e : rep.path) {
    CHECK(std::abs(e.d_t - (1.0 - e.t) * fm) <= 1e-12 * (1.0 + std::abs(e.d_t)));
    CHECK(e.cone_margin > 0.0);
  }
  // mean residual at the accepted final state
  auto res = residual_field(rep.phi, 1.0, f, bg);
  CHECK(std::abs(res.r.mean()) < 1e-10);
}

TEST_CASE("degree-2 Monge-Ampere instance with a negative twist region") {
  CMat chi0 = cidentity(2);
  CMat H0 = 1.1 * cidentity(2);
  FlatBackground bg(2, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"}));
  auto phi_star = field_from({64, 64}, [](const std::vector<double>& x) {
    return 0.8 * std::cos(x[0]) + 0.5 * std::sin(x[1]);
  });
  phi_star.subtract_mean();
  auto f = manufactured_twist(phi_star, bg);
  double fmin = 1e300;
  for (double v : f.v) fmin = std::min(fmin, v);
  REQUIRE(fmin < 0.0);                 // genuinely negative somewhere
  REQUIRE(fmin > -1.0);                // above -csc^2(pi/2)
  SolverConfig cfg;
  auto rep = continuity_run(f, bg, cfg);
  REQUIRE(rep.converged);
  double err = 0.0;
  for (std::size_t p = 0; p < rep.phi.size(); ++p)
    err = std::max(err, std::abs(rep.phi.v[p] - phi_star.v[p]));
  CHECK(err < 1e-7);
}

TEST_CASE("degree-1 run reproduces the exact Fourier solution") {
  CMat chi0 = cidentity(1);
  CMat H0 = 0.7 * cidentity(1);
  FlatBackground bg(1, chi0, H0, PhaseSpec(1.1), ac({"x1", "y1"}));
  const int N = 64;
  auto f = field_from({N, N}, [&](const std::vector<double>& x) {
    return (0.7 - std::cos(1.1) / std::sin(1.1)) + 0.4 * std::cos(x[0]) +
           0.25 * std::sin(x[1]) + 0.1 * std::cos(2 * x[0] + x[1]);
  });
  SolverConfig cfg;
  auto rep = continuity_run(f, bg, cfg);
  REQUIRE(rep.converged);
  // exact solution: Hess(phi)_11 = f - mean(f); invert the quarter Laplacian
  auto rhs = f;
  rhs.subtract_mean();
  auto spec = fft_of_real(rhs.v, rhs.dims);
  for (std::size_t lin = 0; lin < spec.size(); ++lin) {
    int k0 = signed_freq(static_cast<int>(lin) / N, N);
    int k1 = signed_freq(static_cast<int>(lin) % N, N);
    double sym = -0.25 * (k0 * k0 + k1 * k1);
    spec[lin] = (k0 == 0 && k1 == 0) ? 0.0 : spec[lin] / sym;
  }
  auto exact = ifft_to_real(std::move(spec), rhs.dims);
  double mean_exact = 0.0;
  for (double v : exact) mean_exact += v;
  mean_exact /= exact.size();
  double err = 0.0;
  for (std::size_t p = 0; p < exact.size(); ++p)
    err = std::max(err, std::abs(rep.phi.v[p] - (exact[p] - mean_exact)));
  CHECK(err < 1e-12);
}

TEST_CASE("cone guard margins on the symmetric state and along a path") {
  auto bg = bg_n3_sym();
  auto phi = PeriodicField::zeros({16, 16});
  auto f = PeriodicField::zeros({16, 16});
  auto rep = cone_guard(phi, 0.0, f, bg);
  CHECK(rep.min_pair_product == Approx(2.0).margin(1e-12));  // 3 - csc^2(pi/2)
  CHECK(rep.min_lambda == Approx(std::sqrt(3.0)).margin(1e-12));
  CHECK(rep.sumbound_ok);
  CHECK(rep.sum_margin == Approx(std::sqrt(3.0)).margin(1e-12));
  CHECK(rep.delta_prime == Approx(1.0).margin(1e-12));
}

TEST_CASE("phase interval certificate on solved instances") {
  // nonnegative twist: the strong bound sum theta_i <= theta holds
  auto bg = bg_n3_sym(Catch::Approx(pi / 2).margin(0) == 0 ? pi / 2 : pi / 2, {"x1", "y1"});
  (void)bg;
  CMat chi0 = cidentity(2);
  CMat H0 = 2.2 * cidentity(2);
  FlatBackground bg2(2, chi0, H0, PhaseSpec(pi / 2, 3 * pi / 4), ac({"x1", "y1"}));
  auto phi_star = field_from({32, 32}, [](const std::vector<double>& x) {
    return 0.12 * std::cos(x[0]) + 0.1 * std::sin(x[1]);
  });
  phi_star.subtract_mean();
  auto f = manufactured_twist(phi_star, bg2);
  double fmin = 1e300;
  for (double v : f.v) fmin = std::min(fmin, v);
  REQUIRE(fmin > 0.0);
  SolverConfig cfg;
  auto rep = continuity_run(f, bg2, cfg);
  REQUIRE(rep.converged);
  CHECK(rep.in_theta_Theta);
  auto pc = phase_interval_check(rep.phi, f, bg2, 3 * pi / 4);
  CHECK(pc.below_Theta);
  CHECK(pc.nonneg_strong_ok);

  // slightly negative twist within the lifting window
  CMat H0b = cidentity(2);
  FlatBackground bg3(2, chi0, H0b, PhaseSpec(pi / 2, 3 * pi / 4), ac({"x1", "y1"}));
  auto phi2 = field_from({32, 32}, [](const std::vector<double>& x) {
    return 0.55 * std::cos(x[0]) + 0.4 * std::sin(x[1]);
  });
  phi2.subtract_mean();
  auto f2 = manufactured_twist(phi2, bg3);
  double f2min = 1e300;
  for (double v : f2.v) f2min = std::min(f2min, v);
  REQUIRE(f2min < 0.0);
  REQUIRE(f2min > -std::sin(pi / 8));  // inside the lifting window
  auto rep2 = continuity_run(f2, bg3, cfg);
  REQUIRE(rep2.converged);
  auto pc2 = phase_interval_check(rep2.phi, f2, bg3, 3 * pi / 4);
  CHECK(pc2.window_hypothesis);
  CHECK(pc2.below_Theta);
}

TEST_CASE("concentration twist mode solves the mass family") {
  CMat chi0 = cidentity(2);
  CMat H0 = 1.9 * cidentity(2);
  FlatBackground bg(2, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"}));
  auto psi = field_from({64, 64}, [](const std::vector<double>& x) {
    double s = std::sin(0.5 * x[0]);
    return std::log(s * s + 0.04);
  });
  auto ct = concentration_twist(psi, 0.02, bg);
  CHECK(ct.A_t >= 0.0);
  SolverConfig cfg;
  auto rep = continuity_run(ct.f, bg, cfg);
  REQUIRE(rep.converged);
  CHECK(rep.final_residual < cfg.newton_tol);
}

TEST_CASE("spectral accuracy beats any fixed order on an analytic instance") {
  // degree-1 problem with an analytic, non-band-limited solution
  CMat chi0 = cidentity(1);
  CMat H0 = 0.9 * cidentity(1);
  FlatBackground bg(1, chi0, H0, PhaseSpec(pi / 2), ac({"x1", "y1"}));
  auto star = [](double x) { return std::exp(std::sin(x)); };
  auto star_dd = [](double x) {
    return std::exp(std::sin(x)) * (std::cos(x) * std::cos(x) - std::sin(x));
  };
  std::vector<double> errs;
  for (int N : {8, 16, 32}) {
    // center the forcing on the grid so its discrete mean matches the class
    double m = 0.0;
    for (int i = 0; i < N; ++i) m += star_dd(2 * pi * i / N);
    m /= N;
    auto f = field_from({N, N}, [&](const std::vector<double>& x) {
      return 0.9 + 0.25 * (star_dd(x[0]) - m);
    });
    SolverConfig cfg;
    auto rep = continuity_run(f, bg, cfg);
    REQUIRE(rep.converged);
    double mean_star = 0.0;
    for (int i = 0; i < N; ++i) mean_star += star(2 * pi * i / N);
    mean_star /= N;
    double err = 0.0;
    for (std::size_t p = 0; p < rep.phi.size(); ++p) {
      int i0 = static_cast<int>(p) / N;
      err = std::max(err, std::abs(rep.phi.v[p] - (star(2 * pi * i0 / N) - mean_star)));
    }
    errs.push_back(err);
  }
  double p1 = std::log2(errs[0] / errs[1]);
  double p2 = std::log2(errs[1] / errs[2]);
  CHECK(p2 > p1);   // order keeps increasing
  CHECK(p2 > 6.0);  // beyond any modest fixed order already
}
