#pragma once

// Delta-mollification of potentials on polydisc grids, spherical means and
// Lelong numbers at level delta, the cone condition for currents, and the
// regularized maximum used for gluing potentials.

#include "dhym/cone.hpp"
#include "dhym/grid.hpp"
#include "dhym/spectral.hpp"

namespace dhym::mollify {

// ---------------------------------------------------------------------------
// Radial kernel rho(t) = c_n (1 - t^2)^3 on [0, 1], normalized so that
// int rho(t) t^{2n-1} |S^{2n-1}| dt = 1.

struct MollifierKernel {
  int n = 1;
  double c_n = 0.0;
  double a_n = 0.0;  // constant of the mollification-mean inequality

  double rho(double t) const {
    if (t < 0.0 || t >= 1.0) return 0.0;
    double u = 1.0 - t * t;
    return c_n * u * u * u;
  }
};

inline double sphere_area(int n) {  // |S^{2n-1}| = 2 pi^n / (n-1)!
  double f = 1.0;
  for (int i = 2; i < n; ++i) f *= i;
  return 2.0 * std::pow(pi, n) / f;
}

/// int_0^1 f(t) dt for integrands supported in [0,1] that may have a
/// logarithmic endpoint at 0: substitute t = exp(-u) and Simpson on [0, U].
inline double radial_quadrature(const std::function<double(double)>& f, int panels = 2048,
                                double U = 40.0) {
  auto g = [&](double u) {
    double t = std::exp(-u);
    return f(t) * t;
  };
  double h = U / panels;
  double acc = g(0.0) + g(U);
  for (int i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
  return acc * h / 3.0;
}

inline double kernel_normalization(const MollifierKernel& k) {
  return sphere_area(k.n) *
         radial_quadrature([&](double t) { return k.rho(t) * std::pow(t, 2 * k.n - 1); },
                           262144, 50.0);
}

/// a_n as the largest value of (hat phi_delta - phi_{,delta}) / nu over the
/// log-pole models c log|z|; for these models the spherical mean at radius r
/// is c log r and nu = c, so the ratio is the weighted -log t moment.
inline double estimate_a_n(const MollifierKernel& k) {
  double best = 0.0;
  for (double c : {0.5, 1.0, 2.0, 7.0}) {
    for (double delta : {0.3, 0.05}) {
      double moll = sphere_area(k.n) * radial_quadrature(
                                           [&](double t) {
                                             return k.rho(t) * std::pow(t, 2 * k.n - 1) * c *
                                                    std::log(t * delta);
                                           },
                                           262144, 50.0);
      double ratio = (c * std::log(delta) - moll) / c;
      best = std::max(best, ratio);
    }
  }
  return best;
}

inline MollifierKernel build_kernel(int n) {
  if (n < 1 || n > 3) throw DomainError("kernel dimension must be 1..3");
  MollifierKernel k;
  k.n = n;
  // c_n = (n+3)! / (3 (n-1)! |S^{2n-1}|) makes the normalization exact
  double num = 1.0;
  for (int i = 2; i <= n + 3; ++i) num *= i;
  double den = 3.0;
  for (int i = 2; i <= n - 1; ++i) den *= i;
  k.c_n = num / (den * sphere_area(n));
  k.a_n = estimate_a_n(k);
  return k;
}

// ---------------------------------------------------------------------------
// Discrete mollification: convolution against the kernel sampled on the
// grid, valid on the shrunken domain where the delta-ball fits.

struct MollifyResult {
  PotentialSample sample;       // on the shrunken domain
  std::vector<int> offset;      // index shift into the source grid
  long long masked_outputs = 0; // outputs contaminated by the singular set
};

inline MollifyResult mollify_potential(const PotentialSample& p, const MollifierKernel& k,
                                       double delta) {
  p.validate();
  if (p.n != k.n) throw DomainError("kernel and potential dimension differ");
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  const double h = p.spacing;
  if (h > delta / 8.0 * (1.0 + 1e-12))
    throw DomainError("grid spacing must be at most delta/8 to resolve the kernel");
  const int A = p.axes();
  const int R = static_cast<int>(std::floor(delta / h));
  for (int a = 0; a < A; ++a)
    if (p.dims[a] - 2 * R <= 0) throw DomainError("delta exceeds the domain");

  // kernel taps and weights, renormalized so constants are preserved
  std::vector<long long> tap_off;  // linearized offsets in the source grid
  std::vector<double> tap_w;
  {
    std::vector<int> o(A, -R);
    std::vector<long long> stride(A, 1);
    for (int a = A - 2; a >= 0; --a) stride[a] = stride[a + 1] * p.dims[a + 1];
    for (;;) {
      double r2 = 0.0;
      for (int a = 0; a < A; ++a) r2 += static_cast<double>(o[a]) * o[a];
      double t = std::sqrt(r2) * h / delta;
      double w = k.rho(t);
      if (w > 0.0) {
        long long lin = 0;
        for (int a = 0; a < A; ++a) lin += o[a] * stride[a];
        tap_off.push_back(lin);
        tap_w.push_back(w);
      }
      int a = A - 1;
      for (; a >= 0; --a) {
        if (++o[a] <= R) break;
        o[a] = -R;
      }
      if (a < 0) break;
    }
    double total = 0.0;
    for (double w : tap_w) total += w;
    for (double& w : tap_w) w /= total;
  }

  MollifyResult out;
  out.offset.assign(A, R);
  PotentialSample& q = out.sample;
  q.n = p.n;
  q.spacing = h;
  q.center = p.center;
  q.dims.resize(A);
  for (int a = 0; a < A; ++a) q.dims[a] = p.dims[a] - 2 * R;
  q.values.assign(q.size(), 0.0);

  std::vector<long long> stride_p(A, 1), stride_q(A, 1);
  for (int a = A - 2; a >= 0; --a) {
    stride_p[a] = stride_p[a + 1] * p.dims[a + 1];
    stride_q[a] = stride_q[a + 1] * q.dims[a + 1];
  }

  const double direct_cost = static_cast<double>(q.size()) * tap_w.size();
  const bool has_mask = !p.mask.empty();
  if (direct_cost <= 2e8) {
    parallel_for(q.size(), [&](std::size_t lin_q) {
      std::size_t rem = lin_q;
      long long lin_p = 0;
      for (int a = 0; a < A; ++a) {
        long long ia = static_cast<long long>(rem / stride_q[a]) + R;
        rem %= stride_q[a];
        lin_p += ia * stride_p[a];
      }
      double acc = 0.0;
      bool bad = false;
      for (std::size_t t = 0; t < tap_off.size(); ++t) {
        std::size_t src = static_cast<std::size_t>(lin_p + tap_off[t]);
        if (has_mask && p.mask[src]) {
          bad = true;
          break;
        }
        acc += tap_w[t] * p.values[src];
      }
      if (bad) {
        q.values[lin_q] = std::numeric_limits<double>::quiet_NaN();
      } else {
        q.values[lin_q] = acc;
      }
    });
  } else {
    // circular FFT convolution; wrap-around only touches points outside the
    // shrunken domain
    std::vector<double> field = p.values;
    if (has_mask)
      for (std::size_t i = 0; i < field.size(); ++i)
        if (p.mask[i]) field[i] = 0.0;
    auto fhat = fft_of_real(field, p.dims);
    std::vector<double> kern(p.values.size(), 0.0);
    {
      std::vector<int> oo(A, -R);
      std::size_t ti = 0;
      for (;;) {
        double r2 = 0.0;
        for (int a = 0; a < A; ++a) r2 += static_cast<double>(oo[a]) * oo[a];
        double tt = std::sqrt(r2) * h / delta;
        if (k.rho(tt) > 0.0) {
          std::size_t lin = 0;
          for (int a = 0; a < A; ++a) {
            int wrapped = (-oo[a] % p.dims[a] + p.dims[a]) % p.dims[a];
            lin = lin * p.dims[a] + wrapped;
          }
          kern[lin] = tap_w[ti++];
        }
        int a = A - 1;
        for (; a >= 0; --a) {
          if (++oo[a] <= R) break;
          oo[a] = -R;
        }
        if (a < 0) break;
      }
    }
    auto khat = fft_of_real(kern, p.dims);
    for (std::size_t i = 0; i < fhat.size(); ++i) fhat[i] *= khat[i];
    auto conv = ifft_to_real(std::move(fhat), p.dims);
    std::vector<int> idx(A, 0);
    for (std::size_t lin_q = 0; lin_q < q.size(); ++lin_q) {
      long long lin_p = 0;
      for (int a = 0; a < A; ++a) lin_p += (idx[a] + R) * stride_p[a];
      q.values[lin_q] = conv[lin_p];
      for (int a = A - 1; a >= 0; --a) {
        if (++idx[a] < q.dims[a]) break;
        idx[a] = 0;
      }
    }
    if (has_mask) {
      // mark outputs whose tap ball touches the (sparse) singular set:
      // output iq reads source iq + R + o, so iq in [idx_p - 2R, idx_p]
      std::vector<int> idx_p(A, 0);
      for (std::size_t lin = 0; lin < p.values.size(); ++lin) {
        if (p.mask[lin]) {
          std::vector<int> lo(A), hi(A);
          for (int a = 0; a < A; ++a) {
            lo[a] = std::max(idx_p[a] - 2 * R, 0);
            hi[a] = std::min(idx_p[a], q.dims[a] - 1);
          }
          bool any = true;
          for (int a = 0; a < A; ++a)
            if (lo[a] > hi[a]) any = false;
          std::vector<int> it = lo;
          while (any) {
            double r2 = 0.0;
            for (int a = 0; a < A; ++a) {
              double o = static_cast<double>(idx_p[a] - R - it[a]);
              r2 += o * o;
            }
            if (k.rho(std::sqrt(r2) * h / delta) > 0.0) {
              std::size_t lq = 0;
              for (int a = 0; a < A; ++a) lq = lq * q.dims[a] + it[a];
              q.values[lq] = std::numeric_limits<double>::quiet_NaN();
            }
            int a = A - 1;
            for (; a >= 0; --a) {
              if (++it[a] <= hi[a]) break;
              it[a] = lo[a];
            }
            if (a < 0) break;
          }
        }
        for (int a = A - 1; a >= 0; --a) {
          if (++idx_p[a] < p.dims[a]) break;
          idx_p[a] = 0;
        }
      }
    }
  }
  q.mask_nonfinite();
  q.validate();
  for (std::size_t i = 0; i < q.values.size(); ++i)
    if (q.masked(i)) ++out.masked_outputs;
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation and circle means (complex dimension 1 grids).

namespace detail {

inline double catmull_rom(double pm1, double p0, double p1, double p2, double t) {
  return 0.5 * ((2.0 * p0) + (-pm1 + p1) * t + (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2) * t * t +
                (-pm1 + 3.0 * p0 - 3.0 * p1 + p2) * t * t * t);
}

}  // namespace detail

/// Bicubic (Catmull-Rom) interpolation on an n = 1 sample.
inline double interpolate2(const PotentialSample& p, double x, double y) {
  if (p.n != 1) throw DomainError("interpolation wants a C^1 grid");
  double gx = (x - p.coord(0, 0)) / p.spacing;
  double gy = (y - p.coord(1, 0)) / p.spacing;
  int ix = static_cast<int>(std::floor(gx)), iy = static_cast<int>(std::floor(gy));
  double tx = gx - ix, ty = gy - iy;
  if (ix < 1 || iy < 1 || ix + 2 >= p.dims[0] || iy + 2 >= p.dims[1])
    throw DomainError("interpolation stencil leaves the grid");
  double col[4];
  for (int a = -1; a <= 2; ++a) {
    std::size_t base = static_cast<std::size_t>(ix + a) * p.dims[1] + (iy - 1);
    for (int b = 0; b < 4; ++b)
      if (p.masked(base + b)) throw DomainError("interpolation stencil hits the singular set");
    col[a + 1] = detail::catmull_rom(p.values[base], p.values[base + 1], p.values[base + 2],
                                     p.values[base + 3], ty);
  }
  return detail::catmull_rom(col[0], col[1], col[2], col[3], tx);
}

/// Spherical (circle) mean of an n = 1 potential at radius r around x.
inline double circle_mean(const PotentialSample& p, const std::array<double, 2>& x, double r) {
  int m = std::clamp(static_cast<int>(std::ceil(2.0 * pi * r / p.spacing)) * 4, 64, 4096);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double a = 2.0 * pi * i / m;
    acc += interpolate2(p, x[0] + r * std::cos(a), x[1] + r * std::sin(a));
  }
  return acc / m;
}

/// Pointwise mollified value through the radial formula
/// phi_{,delta}(x) = |S^{2n-1}| int rho(t) t^{2n-1} hat phi_x(t delta) dt.
inline double mollified_at(const PotentialSample& p, const MollifierKernel& k,
                           const std::array<double, 2>& x, double delta) {
  return sphere_area(1) * radial_quadrature([&](double t) {
    return k.rho(t) * t * circle_mean(p, x, std::max(t, 1e-14) * delta);
  });
}

// ---------------------------------------------------------------------------
// Lelong numbers at level delta.

struct LelongEstimate {
  std::array<double, 2> x{};
  double delta = 0.0;
  double r = 0.0;
  double nu_level = 0.0;
  double hat_quarter = 0.0;  // spherical mean at r/4
  double hat_delta = 0.0;    // spherical mean at delta
};

inline LelongEstimate lelong_level(const PotentialSample& p, const std::array<double, 2>& x,
                                   double delta, double r) {
  if (!(delta > 0.0 && delta < r / 4.0)) throw DomainError("need 0 < delta < r/4");
  LelongEstimate e;
  e.x = x;
  e.delta = delta;
  e.r = r;
  e.hat_quarter = circle_mean(p, x, r / 4.0);
  e.hat_delta = circle_mean(p, x, delta);
  e.nu_level = (e.hat_quarter - e.hat_delta) / (std::log(r / 4.0) - std::log(delta));
  return e;
}

struct LelongInequalities {
  // 0 <= hat_delta - hat_{delta/a} <= nu log a, per tested a
  std::vector<double> lower_margin_scale;
  std::vector<double> upper_margin_scale;
  // 0 <= hat_delta - phi_{,delta} <= nu a_n
  double lower_margin_mollify = 0.0;
  double upper_margin_mollify = 0.0;
  bool all_hold(double tol) const {
    for (double v : lower_margin_scale)
      if (v < -tol) return false;
    for (double v : upper_margin_scale)
      if (v < -tol) return false;
    return lower_margin_mollify >= -tol && upper_margin_mollify >= -tol;
  }
};

inline LelongInequalities lelong_inequalities(const PotentialSample& p, const MollifierKernel& k,
                                              const std::array<double, 2>& x, double delta,
                                              double r, const std::vector<double>& a_values) {
  LelongEstimate e = lelong_level(p, x, delta, r);
  LelongInequalities out;
  for (double a : a_values) {
    if (a < 1.0) throw DomainError("scale factors must be >= 1");
    double hat_small = circle_mean(p, x, delta / a);
    double diff = e.hat_delta - hat_small;
    out.lower_margin_scale.push_back(diff);
    out.upper_margin_scale.push_back(e.nu_level * std::log(a) - diff);
  }
  double moll = mollified_at(p, k, x, delta);
  double diff = e.hat_delta - moll;
  out.lower_margin_mollify = diff;
  out.upper_margin_mollify = e.nu_level * k.a_n - diff;
  return out;
}

// ---------------------------------------------------------------------------
// Regularized maximum: M_eta(a, b) = (a+b)/2 + S((a-b)/w) w/2 with w = 2 eta
// and S the bump-smoothed absolute value. Smooth, symmetric, convex,
// nondecreasing, max <= M_eta <= max + eta, equal to max when |a-b| >= 2 eta.

namespace detail {

inline double smoothed_abs_unit(double t) {  // kernel (35/32)(1-v^2)^3 on [-1,1]
  if (std::abs(t) >= 1.0) return std::abs(t);
  double P = t - t * t * t + 0.6 * std::pow(t, 5) - std::pow(t, 7) / 7.0;
  double u = 1.0 - t * t;
  return t * (35.0 / 16.0) * P + (35.0 / 128.0) * u * u * u * u;
}

}  // namespace detail

inline double regularized_max_scalar(double a, double b, double eta) {
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  double w = 2.0 * eta;
  return 0.5 * (a + b) + 0.5 * w * detail::smoothed_abs_unit((a - b) / w);
}

inline PotentialSample regularized_max(const PotentialSample& f, const PotentialSample& g,
                                       double eta) {
  f.validate();
  g.validate();
  if (f.dims != g.dims || f.n != g.n || f.spacing != g.spacing)
    throw DomainError("regularized maximum wants a common grid");
  PotentialSample out = f;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = regularized_max_scalar(f.values[i], g.values[i], eta);
  out.mask_nonfinite();
  return out;
}

// ---------------------------------------------------------------------------
// Cone condition for currents, sampled: mollify, take finite-difference
// complex Hessians, and test P^k(i ddbar phi_delta, chi0) >= 0 for k <= m
// against the frozen comparison form chi0 <= chi on each delta-ball.

struct CurrentConeReport {
  bool pass = false;
  double worst_margin = 0.0;
  long long points_checked = 0;
  long long points_masked = 0;
};

inline CurrentConeReport current_cone_check(
    const PotentialSample& phi, const std::function<CMat(const std::vector<double>&)>& chi,
    const PhaseSpec& phase, double delta, int m, const MollifierKernel& k) {
  auto mr = mollify_potential(phi, k, delta);
  const PotentialSample& q = mr.sample;
  const int n = q.n, A = q.axes();
  if (m < 1 || m > n) throw DomainError("cone level out of range");
  const double h = q.spacing, h2 = h * h;
  std::vector<long long> stride(A, 1);
  for (int a = A - 2; a >= 0; --a) stride[a] = stride[a + 1] * q.dims[a + 1];

  CurrentConeReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  std::vector<int> idx(A, 0);
  std::vector<double> x(A);
  for (std::size_t lin = 0; lin < q.values.size(); ++lin) {
    bool interior = true;
    for (int a = 0; a < A; ++a)
      if (idx[a] < 1 || idx[a] + 1 >= q.dims[a]) interior = false;
    if (interior) {
      bool bad = q.masked(lin);
      for (int a = 0; a < A && !bad; ++a)
        if (q.masked(lin + stride[a]) || q.masked(lin - stride[a])) bad = true;
      for (int a = 0; a < A && !bad; ++a)
        for (int b = a + 1; b < A && !bad; ++b)
          if (q.masked(lin + stride[a] + stride[b]) || q.masked(lin - stride[a] - stride[b]) ||
              q.masked(lin + stride[a] - stride[b]) || q.masked(lin - stride[a] + stride[b]))
            bad = true;
      if (bad) {
        ++rep.points_masked;
      } else {
        auto d2 = [&](int a, int b) {
          if (a == b)
            return (q.values[lin + stride[a]] - 2.0 * q.values[lin] + q.values[lin - stride[a]]) /
                   h2;
          return (q.values[lin + stride[a] + stride[b]] - q.values[lin + stride[a] - stride[b]] -
                  q.values[lin - stride[a] + stride[b]] + q.values[lin - stride[a] - stride[b]]) /
                 (4.0 * h2);
        };
        CMat hess(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double re = 0.25 * (d2(2 * i, 2 * j) + d2(2 * i + 1, 2 * j + 1));
            double im = 0.25 * (d2(2 * i, 2 * j + 1) - d2(2 * i + 1, 2 * j));
            hess(i, j) = std::complex<double>(re, i == j ? 0.0 : im);
          }
        hermitize(hess);
        for (int a = 0; a < A; ++a) x[a] = q.coord(a, idx[a]);
        CMat chix = chi(x);
        // frozen comparison form scaled under the ball infimum
        double scale = 1.0;
        for (int a = 0; a < A; ++a) {
          for (double sgn : {-1.0, 1.0}) {
            std::vector<double> y = x;
            y[a] += sgn * delta;
            RVec ev = pencil_eigenvalues(chi(y), chix);
            scale = std::min(scale, ev.minCoeff());
          }
        }
        CMat chi0 = (1.0 - 1e-6) * scale * chix;
        hermitize(chi0);
        RVec mu = pencil_eigenvalues(hess, chi0);
        RVec desc(mu.size());
        for (int i = 0; i < mu.size(); ++i) desc[i] = mu[mu.size() - 1 - i];
        for (int kk = 1; kk <= m; ++kk)
          for (double c : p_subset_coefficients_from_mu(desc, phase.theta, kk))
            rep.worst_margin = std::min(rep.worst_margin, c);
        ++rep.points_checked;
      }
    }
    for (int a = A - 1; a >= 0; --a) {
      if (++idx[a] < q.dims[a]) break;
      idx[a] = 0;
    }
  }
  rep.pass = rep.points_checked > 0 && rep.worst_margin >= 0.0;
  return rep;
}

}  // namespace dhym::mollify
