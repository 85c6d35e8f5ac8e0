#pragma once

// Continuity-method solver for the twisted dHYM equation on flat complex
// tori of dimension 1..3. The path parameter interpolates the twist, the
// linearized steps are solved by preconditioned GMRES on the mean-zero
// subspace with a scalar border absorbing quadrature drift, and every
// accepted state keeps the pointwise cone conditions strictly positive.

#include <numeric>
#include <sstream>

#include "dhym/cone.hpp"
#include "dhym/field.hpp"

namespace dhym::torus {

struct ConeViolation : DomainError {
  double worst_margin;
  explicit ConeViolation(double m)
      : DomainError("cone condition violated, worst margin " + std::to_string(m)),
        worst_margin(m) {}
};

struct FlatBackground {
  int n = 0;
  CMat chi0, H0;
  PhaseSpec phase;
  ActiveCoords active;
  // cached transforms: chi0 = L L^*, Omega0t = L^{-1} (H0 - cot chi0) L^{-*}
  CMat Linv, Omega0t, H0t;

  FlatBackground(int n_, CMat chi0_, CMat H0_, PhaseSpec phase_, ActiveCoords active_)
      : n(n_), chi0(std::move(chi0_)), H0(std::move(H0_)), phase(phase_),
        active(std::move(active_)) {
    if (n < 1 || n > 3) throw DomainError("complex dimension must be 1..3");
    active.validate(n);
    if (!is_hermitian(H0) || !is_hermitian(chi0))
      throw DomainError("background matrices must be Hermitian");
    Eigen::LLT<CMat> llt(chi0);
    if (llt.info() != Eigen::Success)
      throw ComparisonFormError("comparison form is not positive definite");
    CMat L = llt.matrixL();
    Linv = L.inverse();
    CMat om = H0 - phase.cot() * chi0;
    Omega0t = Linv * om * Linv.adjoint();
    hermitize(Omega0t);
    H0t = Linv * H0 * Linv.adjoint();
    hermitize(H0t);
    if (n > 1) {
      auto rep = cone_membership(HermitianPair(H0, chi0), phase, n - 1);
      if (rep.angle_margin[n - 2] <= 0.0)
        throw DomainError("background does not satisfy the cone condition");
    }
  }
};

struct SolverConfig {
  double newton_tol = 1e-11;
  int max_newton = 40;
  double gmres_tol_loose = 1e-3;
  double gmres_tol_tight = 1e-10;
  double gmres_switch = 1e-6;  // residual below which the tight tolerance kicks in
  int gmres_restart = 60;
  int gmres_maxit = 800;
  double t_step_init = 0.25;
  double t_step_min = 1e-6;
  double t_step_max = 0.5;
  double line_search_min = 1e-6;
  int t0_ramp_steps = 0;
  double compat_tol = 1e-7;
};

// ---------------------------------------------------------------------------
// Pointwise state.

struct StateEval {
  std::vector<CMat> B;     // transformed Omega_phi per grid point
  std::vector<RVec> eig;   // ascending eigenvalues of B per point
  double alias_fraction = 0.0;
  double min_eig = 0.0;
  double min_pair = 0.0;       // n = 3: min lambda_i lambda_j - csc^2
  double subsol_margin = 0.0;  // positive iff the path conditions hold
  std::size_t worst_point = 0;
};

inline double det_of(const CMat& b) {
  int n = static_cast<int>(b.rows());
  if (n == 1) return b(0, 0).real();
  if (n == 2) return (b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0)).real();
  return std::real(b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                   b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                   b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0)));
}

inline StateEval eval_state(const PeriodicField& phi, const FlatBackground& bg) {
  HessianField hess = complex_hessian(phi, bg.n, bg.active);
  StateEval ev;
  ev.alias_fraction = hess.top_energy_fraction;
  const std::size_t np = hess.H.size();
  ev.B.resize(np);
  ev.eig.resize(np);
  const double csc2 = bg.phase.csc() * bg.phase.csc();
  double min_eig = std::numeric_limits<double>::infinity();
  double min_pair = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t p = 0; p < np; ++p) {
    CMat b = bg.Omega0t + bg.Linv * hess.H[p] * bg.Linv.adjoint();
    hermitize(b);
    Eigen::SelfAdjointEigenSolver<CMat> es(b, Eigen::EigenvaluesOnly);
    ev.B[p] = std::move(b);
    ev.eig[p] = es.eigenvalues();
    double me = ev.eig[p].minCoeff();
    if (me < min_eig) {
      min_eig = me;
      worst = p;
    }
    if (bg.n == 3) {
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
          min_pair = std::min(min_pair, ev.eig[p][i] * ev.eig[p][j] - csc2);
    }
  }
  ev.min_eig = min_eig;
  ev.min_pair = min_pair;
  ev.worst_point = worst;
  if (bg.n == 1)
    ev.subsol_margin = std::numeric_limits<double>::infinity();
  else if (bg.n == 2)
    ev.subsol_margin = min_eig;
  else
    ev.subsol_margin = std::min(min_eig, min_pair);
  return ev;
}

/// Twist in the internal normalization of the residual: the degree-3 branch
/// absorbs the 2 csc^2(theta) rescaling, lower degrees use the twist as-is.
inline PeriodicField internal_twist(const PeriodicField& f_user, const FlatBackground& bg) {
  PeriodicField f = f_user;
  if (bg.n == 3) {
    double s = std::sin(bg.phase.theta);
    for (double& x : f.v) x *= 0.5 * s * s;
  }
  return f;
}

/// Mean the internal twist must have for the background class (discrete
/// integral compatibility).
inline double expected_internal_mean(const FlatBackground& bg) {
  Eigen::SelfAdjointEigenSolver<CMat> es(bg.Omega0t, Eigen::EigenvaluesOnly);
  RVec mu = es.eigenvalues();
  const double theta = bg.phase.theta;
  const double csc2 = bg.phase.csc() * bg.phase.csc();
  if (bg.n == 1) return mu[0];
  if (bg.n == 2) return mu[0] * mu[1] - csc2;
  double s2 = std::sin(theta) * std::sin(theta);
  double det = mu[0] * mu[1] * mu[2], tr = mu[0] + mu[1] + mu[2];
  return 0.5 * (s2 * det - tr) - bg.phase.cot();
}

struct ResidualInfo {
  PeriodicField r;
  double d_t = 0.0;
};

inline ResidualInfo residual_from(const StateEval& ev, double t, const PeriodicField& f_int,
                                  const FlatBackground& bg, double d_override,
                                  bool has_override) {
  ResidualInfo out;
  out.d_t = has_override ? d_override : (1.0 - t) * f_int.mean();
  out.r.dims = f_int.dims;
  out.r.v.resize(f_int.size());
  const double cot = bg.phase.cot();
  const double csc2 = bg.phase.csc() * bg.phase.csc();
  const double s2 = 1.0 / csc2;
  for (std::size_t p = 0; p < ev.B.size(); ++p) {
    if (bg.n == 1) {
      out.r.v[p] = ev.B[p](0, 0).real() - (t * f_int.v[p] + out.d_t);
    } else if (bg.n == 2) {
      out.r.v[p] = det_of(ev.B[p]) - (csc2 + t * f_int.v[p] + out.d_t);
    } else {
      double z = t * f_int.v[p] + out.d_t + cot;
      double tr = std::real(ev.B[p](0, 0) + ev.B[p](1, 1) + ev.B[p](2, 2));
      out.r.v[p] = (tr + 2.0 * z) / det_of(ev.B[p]) - s2;
    }
  }
  return out;
}

/// Residual of the continuity family at (phi, t); throws when the path
/// cone conditions fail anywhere on the grid. The twist is user-normalized.
inline ResidualInfo residual_field(const PeriodicField& phi, double t,
                                   const PeriodicField& f_user, const FlatBackground& bg) {
  PeriodicField f_int = internal_twist(f_user, bg);
  StateEval ev = eval_state(phi, bg);
  if (ev.subsol_margin <= 0.0 && bg.n > 1) throw ConeViolation(ev.subsol_margin);
  return residual_from(ev, t, f_int, bg, 0.0, false);
}

// ---------------------------------------------------------------------------
// Linearization: coefficient matrices W with L u = sum_jk W_jk (Hess u)_kj.

inline std::vector<CMat> linearized_coefficients(const StateEval& ev, double t,
                                                 const PeriodicField& f_int,
                                                 const FlatBackground& bg, double d_t) {
  const std::size_t np = ev.B.size();
  std::vector<CMat> W(np);
  const double cot = bg.phase.cot();
  const CMat LA = bg.Linv.adjoint();
  for (std::size_t p = 0; p < np; ++p) {
    CMat G;
    if (bg.n == 1) {
      G = cidentity(1);
    } else if (bg.n == 2) {
      const CMat& b = ev.B[p];
      G = CMat(2, 2);
      G(0, 0) = b(1, 1);
      G(1, 1) = b(0, 0);
      G(0, 1) = -b(0, 1);
      G(1, 0) = -b(1, 0);
    } else {
      double z = t * f_int.v[p] + d_t + cot;
      const CMat& b = ev.B[p];
      double tr = std::real(b(0, 0) + b(1, 1) + b(2, 2));
      double det = det_of(b);
      G = (cidentity(3) - (tr + 2.0 * z) * b.inverse()) / det;
    }
    W[p] = LA * G * bg.Linv;
    hermitize(W[p]);
  }
  return W;
}

inline PeriodicField apply_linearized(const std::vector<CMat>& W, const PeriodicField& u,
                                      const FlatBackground& bg) {
  HessianField hu = complex_hessian(u, bg.n, bg.active);
  PeriodicField out = PeriodicField::zeros(u.dims);
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < bg.n; ++j)
      for (int k = 0; k < bg.n; ++k) acc += W[p](j, k) * hu.H[p](k, j);
    out.v[p] = acc.real();
  }
  return out;
}

/// Directional derivative of the residual at phi in direction u,
/// normalized against chi^n (public linearization surface).
inline PeriodicField linearized_apply(const PeriodicField& phi, const PeriodicField& u,
                                      double t, const PeriodicField& f_user,
                                      const FlatBackground& bg) {
  PeriodicField f_int = internal_twist(f_user, bg);
  StateEval ev = eval_state(phi, bg);
  if (ev.subsol_margin <= 0.0 && bg.n > 1) throw ConeViolation(ev.subsol_margin);
  double d_t = (1.0 - t) * f_int.mean();
  auto W = linearized_coefficients(ev, t, f_int, bg, d_t);
  return apply_linearized(W, u, bg);
}

// ---------------------------------------------------------------------------
// Constant-coefficient spectral preconditioner built from the grid-mean
// coefficient matrix.

struct SpectralPreconditioner {
  std::vector<int> dims;
  std::vector<double> symbol;  // per mode; 0 at the mean mode

  SpectralPreconditioner(const std::vector<CMat>& W, const FlatBackground& bg,
                         const std::vector<int>& dims_)
      : dims(dims_) {
    CMat wbar = CMat::Zero(bg.n, bg.n);
    for (const auto& w : W) wbar += w;
    wbar /= static_cast<double>(W.size());
    std::size_t total = 1;
    for (int d : dims) total *= d;
    symbol.assign(total, 0.0);
    const int d = static_cast<int>(dims.size());
    for (std::size_t lin = 0; lin < total; ++lin) {
      std::size_t rem = lin;
      int k[2] = {0, 0};
      for (int a = d - 1; a >= 0; --a) {
        k[a] = signed_freq(static_cast<int>(rem % dims[a]), dims[a]);
        rem /= dims[a];
      }
      bool zero = true;
      Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, 0, 3, 1> c =
          Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, 0, 3, 1>::Zero(bg.n);
      for (int a = 0; a < d; ++a) {
        if (k[a] != 0) zero = false;
        const RealCoord& rc = bg.active.coords[a];
        c[rc.z_index] += rc.imag ? std::complex<double>(0.0, k[a])
                                 : std::complex<double>(k[a], 0.0);
      }
      if (zero) continue;
      std::complex<double> s = 0.0;
      for (int j = 0; j < bg.n; ++j)
        for (int kk = 0; kk < bg.n; ++kk) s += wbar(j, kk) * c[j] * std::conj(c[kk]);
      symbol[lin] = -0.25 * s.real();
    }
  }

  std::vector<double> apply(const std::vector<double>& r) const {
    std::vector<std::complex<double>> spec(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) spec[i] = r[i];
    fft_inplace(spec, dims, FFTW_FORWARD);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (std::abs(symbol[i]) > 1e-300)
        spec[i] /= symbol[i];
      else
        spec[i] = 0.0;
    }
    fft_inplace(spec, dims, FFTW_BACKWARD);
    std::vector<double> out(r.size());
    double norm = 1.0;
    for (int d : dims) norm *= d;
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = spec[i].real() / norm;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Restarted GMRES, left preconditioned, on the mean-zero subspace.

namespace detail {

inline double vdot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double vnorm(const std::vector<double>& a) { return std::sqrt(vdot(a, a)); }

}  // namespace detail

inline bool gmres(const std::function<std::vector<double>(const std::vector<double>&)>& op,
                  const std::vector<double>& rhs, std::vector<double>& x, double rtol,
                  int restart, int maxit) {
  using detail::vdot;
  using detail::vnorm;
  const std::size_t n = rhs.size();
  x.assign(n, 0.0);
  double bnorm = vnorm(rhs);
  if (bnorm == 0.0) return true;
  int iters = 0;
  std::vector<double> r = rhs;  // x = 0
  while (iters < maxit) {
    double beta = vnorm(r);
    if (beta <= rtol * bnorm) return true;
    int m = restart;
    std::vector<std::vector<double>> V;
    V.push_back(r);
    for (double& v : V[0]) v /= beta;
    std::vector<std::vector<double>> H(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m && iters < maxit; ++j, ++iters) {
      std::vector<double> w = op(V[j]);
      for (int i = 0; i <= j; ++i) {
        H[i][j] = vdot(w, V[i]);
        for (std::size_t q = 0; q < n; ++q) w[q] -= H[i][j] * V[i][q];
      }
      H[j + 1][j] = vnorm(w);
      if (H[j + 1][j] > 1e-300)
        for (double& v : w) v /= H[j + 1][j];
      V.push_back(std::move(w));
      // apply stored rotations, then a new one
      for (int i = 0; i < j; ++i) {
        double t1 = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
        double t2 = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t1;
        H[i + 1][j] = t2;
      }
      double denom = std::hypot(H[j][j], H[j + 1][j]);
      if (denom < 1e-300) break;
      cs[j] = H[j][j] / denom;
      sn[j] = H[j + 1][j] / denom;
      H[j][j] = denom;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      if (std::abs(g[j + 1]) <= rtol * bnorm) {
        ++j;
        break;
      }
    }
    // back substitution
    std::vector<double> y(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H[i][k] * y[k];
      y[i] = s / H[i][i];
    }
    for (int k = 0; k < j; ++k)
      for (std::size_t q = 0; q < n; ++q) x[q] += y[k] * V[k][q];
    // true residual for the restart
    std::vector<double> ax = op(x);
    r.resize(n);
    for (std::size_t q = 0; q < n; ++q) r[q] = rhs[q] - ax[q];
    if (vnorm(r) <= rtol * bnorm) return true;
    if (j == 0) return false;
  }
  return detail::vnorm(r) <= rtol * bnorm * 10.0;
}

// ---------------------------------------------------------------------------
// Newton iteration at a fixed path parameter.

struct NewtonReport {
  bool converged = false;
  int iters = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
  double cone_margin = 0.0;
  double d_t = 0.0;
  double b_slack = 0.0;  // mean-mode border; vanishes at a compatible solution
  bool any_damped = false;
  std::string reason;
  std::vector<double> residual_history;
  double alias_fraction = 0.0;
};

inline NewtonReport newton_at_t(PeriodicField& phi, double t, const PeriodicField& f_int,
                                const FlatBackground& bg, const SolverConfig& cfg,
                                double d_override = 0.0, bool has_override = false) {
  NewtonReport rep;
  StateEval ev = eval_state(phi, bg);
  rep.alias_fraction = ev.alias_fraction;
  if (ev.subsol_margin <= 0.0) {
    rep.reason = "cone condition violated at the starting state";
    return rep;
  }
  for (int it = 0; it <= cfg.max_newton; ++it) {
    ResidualInfo res = residual_from(ev, t, f_int, bg, d_override, has_override);
    rep.d_t = res.d_t;
    rep.residual_norm = res.r.sup_norm();
    rep.residual_history.push_back(rep.residual_norm);
    rep.cone_margin = ev.subsol_margin;
    rep.iters = it;
    if (rep.residual_norm <= cfg.newton_tol) {
      rep.converged = true;
      rep.b_slack = -res.r.mean();
      return rep;
    }
    if (it == cfg.max_newton) {
      rep.reason = "newton iteration limit reached";
      return rep;
    }
    double mean_r = res.r.mean();
    if (std::abs(rep.residual_norm - std::abs(mean_r)) <= 0.05 * cfg.newton_tol &&
        std::abs(mean_r) > cfg.newton_tol) {
      rep.reason = "integral incompatibility: border stuck at " + std::to_string(mean_r);
      return rep;
    }

    auto W = linearized_coefficients(ev, t, f_int, bg, res.d_t);
    SpectralPreconditioner pre(W, bg, phi.dims);
    auto project = [](std::vector<double>& v) {
      double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      for (double& x : v) x -= m;
    };
    auto op = [&](const std::vector<double>& uv) {
      PeriodicField u;
      u.dims = phi.dims;
      u.v = uv;
      PeriodicField lu = apply_linearized(W, u, bg);
      auto out = pre.apply(lu.v);
      project(out);
      return out;
    };
    std::vector<double> rhs = res.r.v;
    for (double& x : rhs) x = -x;
    project(rhs);
    rhs = pre.apply(rhs);
    project(rhs);
    double rtol = rep.residual_norm < cfg.gmres_switch ? cfg.gmres_tol_tight
                                                       : cfg.gmres_tol_loose;
    std::vector<double> uv;
    if (!gmres(op, rhs, uv, rtol, cfg.gmres_restart, cfg.gmres_maxit)) {
      rep.reason = "linear solve stagnation";
      return rep;
    }
    PeriodicField u;
    u.dims = phi.dims;
    u.v = std::move(uv);

    // backtracking: the largest dyadic s keeping the cone conditions strict
    double s = 1.0;
    StateEval trial_ev;
    PeriodicField trial;
    for (;;) {
      trial = phi;
      trial.axpy(s, u);
      trial.subtract_mean();
      trial_ev = eval_state(trial, bg);
      if (trial_ev.subsol_margin > 0.0) break;
      s *= 0.5;
      if (s < cfg.line_search_min) {
        rep.reason = "line search exhausted";
        return rep;
      }
    }
    if (s < 1.0) rep.any_damped = true;
    phi = std::move(trial);
    ev = std::move(trial_ev);
    rep.alias_fraction = std::max(rep.alias_fraction, ev.alias_fraction);
  }
  return rep;  // unreachable
}

// ---------------------------------------------------------------------------
// Guards and the phase-interval certificate.

struct GuardReport {
  double min_lambda = 0.0;
  double min_pair_product = 0.0;  // lambda_i lambda_j - csc^2, degree-3 branch
  double subsol_margin = 0.0;
  double sum_margin = 0.0;    // min over pairs of (l_i + l_j + 2 z_t)/2
  double delta_prime = 0.0;   // csc(theta) + min z_t
  bool sumbound_ok = true;
};

inline GuardReport cone_guard(const PeriodicField& phi, double t, const PeriodicField& f_user,
                              const FlatBackground& bg) {
  PeriodicField f_int = internal_twist(f_user, bg);
  StateEval ev = eval_state(phi, bg);
  GuardReport rep;
  rep.min_lambda = ev.min_eig;
  rep.min_pair_product = ev.min_pair;
  rep.subsol_margin = ev.subsol_margin;
  if (bg.n == 3) {
    double d_t = (1.0 - t) * f_int.mean();
    double cot = bg.phase.cot();
    double min_z = std::numeric_limits<double>::infinity();
    double sum_margin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < ev.eig.size(); ++p) {
      double z = t * f_int.v[p] + d_t + cot;
      min_z = std::min(min_z, z);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
          sum_margin = std::min(sum_margin, 0.5 * (ev.eig[p][i] + ev.eig[p][j]) + z);
    }
    rep.sum_margin = sum_margin;
    rep.delta_prime = bg.phase.csc() + min_z;
    rep.sumbound_ok = sum_margin > rep.delta_prime && rep.delta_prime > 0.0;
  }
  return rep;
}

/// Pointwise sum of Lagrangian angles of omega_phi against chi0.
inline PeriodicField phase_sum_field(const PeriodicField& phi, const FlatBackground& bg) {
  HessianField hess = complex_hessian(phi, bg.n, bg.active);
  PeriodicField out = PeriodicField::zeros(phi.dims);
  for (std::size_t p = 0; p < out.size(); ++p) {
    CMat w = bg.H0t + bg.Linv * hess.H[p] * bg.Linv.adjoint();
    hermitize(w);
    Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < bg.n; ++i) s += arccot(es.eigenvalues()[i]);
    out.v[p] = s;
  }
  return out;
}

struct PhaseIntervalReport {
  bool below_Theta = false;        // sum theta_i < Theta everywhere
  double worst_Theta_margin = 0.0;
  bool window_hypothesis = false;  // f > -sin((Theta-theta)/2)/sin(theta) pointwise
  bool nonneg_strong_ok = true;    // where f >= 0: sum theta_i <= theta + 1e-9
  double worst_theta_margin_nonneg = std::numeric_limits<double>::infinity();
};

inline PhaseIntervalReport phase_interval_check(const PeriodicField& phi,
                                                const PeriodicField& f_user,
                                                const FlatBackground& bg, double Theta) {
  if (!(Theta > bg.phase.theta && Theta < pi))
    throw DomainError("upper phase must sit in (theta, pi)");
  PhaseIntervalReport rep;
  PeriodicField sums = phase_sum_field(phi, bg);
  double worst = std::numeric_limits<double>::infinity();
  for (double s : sums.v) worst = std::min(worst, Theta - s);
  rep.worst_Theta_margin = worst;
  rep.below_Theta = worst > 0.0;
  double eps = std::sin(0.5 * (Theta - bg.phase.theta)) / std::sin(bg.phase.theta);
  double fmin = std::numeric_limits<double>::infinity();
  for (double x : f_user.v) fmin = std::min(fmin, x);
  rep.window_hypothesis = fmin > -eps;
  for (std::size_t p = 0; p < sums.v.size(); ++p) {
    if (f_user.v[p] >= 0.0) {
      double margin = bg.phase.theta + 1e-9 - sums.v[p];
      rep.worst_theta_margin_nonneg = std::min(rep.worst_theta_margin_nonneg, margin);
      if (margin < 0.0) rep.nonneg_strong_ok = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuity driver.

struct PathEntry {
  double t = 0.0;
  double d_t = 0.0;
  double residual = 0.0;
  double cone_margin = 0.0;
  int newton_iters = 0;
};

struct SolveReport {
  std::vector<PathEntry> path;
  PeriodicField phi;
  PeriodicField phase_sum;
  double final_residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool in_theta_Theta = false;
  double alias_fraction = 0.0;
  std::string diagnostics;
};

/// Twist manufactured from a chosen solution: f = P^n(Omega_{phi*}, chi)/chi^n,
/// in the user normalization; the pair (f, phi*) then solves the t = 1
/// equation exactly on this grid.
inline PeriodicField manufactured_twist(const PeriodicField& phi_star,
                                        const FlatBackground& bg) {
  StateEval ev = eval_state(phi_star, bg);
  if (ev.subsol_margin <= 0.0) throw ConeViolation(ev.subsol_margin);
  PeriodicField f = PeriodicField::zeros(phi_star.dims);
  const double csc2 = bg.phase.csc() * bg.phase.csc();
  for (std::size_t p = 0; p < f.size(); ++p) {
    if (bg.n == 1) {
      f.v[p] = ev.B[p](0, 0).real();
    } else if (bg.n == 2) {
      f.v[p] = det_of(ev.B[p]) - csc2;
    } else {
      double tr = std::real(ev.B[p](0, 0) + ev.B[p](1, 1) + ev.B[p](2, 2));
      f.v[p] = det_of(ev.B[p]) - csc2 * tr - 2.0 * csc2 * bg.phase.cot();
    }
  }
  return f;
}

/// Concentration-family twist f = chi_t^n / chi^n - 1 + A_t built from a
/// potential psi with chi_t = chi0 + delta_c i ddbar psi; A_t restores the
/// discrete integral compatibility of the background class.
struct ConcentrationTwist {
  PeriodicField f;
  double A_t = 0.0;
};

inline ConcentrationTwist concentration_twist(const PeriodicField& psi, double delta_c,
                                              const FlatBackground& bg) {
  HessianField hess = complex_hessian(psi, bg.n, bg.active);
  ConcentrationTwist out;
  out.f = PeriodicField::zeros(psi.dims);
  double det0 = det_of(bg.chi0);
  for (std::size_t p = 0; p < out.f.size(); ++p) {
    CMat chit = bg.chi0 + delta_c * hess.H[p];
    hermitize(chit);
    Eigen::LLT<CMat> llt(chit);
    if (llt.info() != Eigen::Success)
      throw DomainError("concentration form lost positivity; reduce its delta");
    out.f.v[p] = det_of(chit) / det0 - 1.0;
  }
  // user-normalized class mean of the background
  double m = expected_internal_mean(bg);
  if (bg.n == 3) m *= 2.0 * bg.phase.csc() * bg.phase.csc();
  out.A_t = m - out.f.mean();
  for (double& x : out.f.v) x += out.A_t;
  return out;
}

inline SolveReport continuity_run(const PeriodicField& f_user, const FlatBackground& bg,
                                  const SolverConfig& cfg) {
  SolveReport rep;
  PeriodicField f_int = internal_twist(f_user, bg);
  std::ostringstream diag;

  // solvable-twist guard (degree dependent) and integral compatibility
  double fmin = std::numeric_limits<double>::infinity();
  for (double x : f_int.v) fmin = std::min(fmin, x);
  if (bg.n == 3) {
    double eps = bg.phase.csc() - std::abs(bg.phase.cot());
    if (!(fmin > -eps))
      throw DomainError("twist reaches below csc(theta) - |cot(theta)| after rescaling");
  } else if (bg.n == 2) {
    double csc2 = bg.phase.csc() * bg.phase.csc();
    if (!(fmin > -csc2)) throw DomainError("twist reaches below -csc^2(theta)");
  }
  double gap = f_int.mean() - expected_internal_mean(bg);
  if (std::abs(gap) > cfg.compat_tol)
    throw DomainError("twist mean is incompatible with the background class (gap " +
                      std::to_string(gap) + ")");

  rep.phi = PeriodicField::zeros(f_user.dims);

  // path start: solve at t = 0 from zero, optionally ramping the constant
  NewtonReport nr = newton_at_t(rep.phi, 0.0, f_int, bg, cfg);
  if (!nr.converged && cfg.t0_ramp_steps > 0) {
    diag << "t=0 direct solve failed (" << nr.reason << "), ramping the constant\n";
    rep.phi = PeriodicField::zeros(f_user.dims);
    double d_exact = expected_internal_mean(bg);
    double d_target = f_int.mean();
    for (int j = 1; j <= cfg.t0_ramp_steps; ++j) {
      double w = static_cast<double>(j) / cfg.t0_ramp_steps;
      double d = (1.0 - w) * d_exact + w * d_target;
      nr = newton_at_t(rep.phi, 0.0, f_int, bg, cfg, d, true);
      if (!nr.converged) break;
    }
  }
  rep.alias_fraction = std::max(rep.alias_fraction, nr.alias_fraction);
  if (!nr.converged) {
    rep.diagnostics = diag.str() + "t=0 solve failed: " + nr.reason;
    return rep;
  }
  rep.path.push_back({0.0, nr.d_t, nr.residual_norm, nr.cone_margin, nr.iters});

  double t = 0.0;
  double step = cfg.t_step_init;
  while (t < 1.0) {
    double t_next = std::min(1.0, t + step);
    PeriodicField trial = rep.phi;
    NewtonReport r = newton_at_t(trial, t_next, f_int, bg, cfg);
    if (r.converged) {
      rep.phi = std::move(trial);
      t = t_next;
      rep.path.push_back({t, r.d_t, r.residual_norm, r.cone_margin, r.iters});
      rep.alias_fraction = std::max(rep.alias_fraction, r.alias_fraction);
      if (r.iters <= 4) step = std::min(step * 2.0, cfg.t_step_max);
    } else {
      step *= 0.5;
      diag << "t=" << t_next << " rejected (" << r.reason << "), step now " << step << "\n";
      if (step < cfg.t_step_min) {
        rep.diagnostics = diag.str() + "path step underflow before t=1";
        return rep;
      }
    }
  }
  rep.final_residual = rep.path.back().residual;
  rep.converged = true;
  rep.phase_sum = phase_sum_field(rep.phi, bg);
  if (bg.phase.Theta) {
    auto pc = phase_interval_check(rep.phi, f_user, bg, *bg.phase.Theta);
    rep.in_theta_Theta = pc.below_Theta;
    if (bg.n > 1) {
      // top-(n-1) part of the interval membership
      StateEval ev = eval_state(rep.phi, bg);
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& eg : ev.eig) {
        double s = 0.0;
        for (int i = 0; i < bg.n - 1; ++i) s += arccot(eg[i] + bg.phase.cot());
        worst = std::min(worst, bg.phase.theta - s);
      }
      rep.in_theta_Theta = rep.in_theta_Theta && worst > 0.0;
    }
  }
  if (rep.alias_fraction > 1e-8)
    diag << "aliasing warning: top-frequency energy fraction " << rep.alias_fraction << "\n";
  rep.diagnostics = diag.str();
  return rep;
}

}  // namespace dhym::torus
