#pragma once

// Real scalar fields on uniform grids over the flat torus (R/2piZ)^d for
// d <= 2 active real coordinates, with spectral second derivatives and the
// complex-Hessian assembly against the active-coordinate layout.

#include <fstream>
#include <iomanip>

#include "dhym/linalg.hpp"
#include "dhym/spectral.hpp"

namespace dhym::torus {

/// One real coordinate of the torus: x_j or y_j of z^j = x_j + i y_j.
struct RealCoord {
  int z_index = 0;  // 0-based complex index
  bool imag = false;

  bool operator==(const RealCoord&) const = default;
};

inline RealCoord parse_real_coord(const std::string& name) {
  if (name.size() < 2 || (name[0] != 'x' && name[0] != 'y'))
    throw ConfigError("coordinate must look like x1 or y2: " + name);
  int idx = std::stoi(name.substr(1));
  if (idx < 1 || idx > 3) throw ConfigError("coordinate index out of range: " + name);
  return RealCoord{idx - 1, name[0] == 'y'};
}

struct ActiveCoords {
  std::vector<RealCoord> coords;  // one per grid axis, size d in {1, 2}

  int count() const { return static_cast<int>(coords.size()); }
  void validate(int n) const {
    if (coords.empty() || coords.size() > 2)
      throw ConfigError("need 1 or 2 active coordinates");
    for (const auto& c : coords)
      if (c.z_index >= n) throw ConfigError("active coordinate beyond the complex dimension");
    if (coords.size() == 2 && coords[0] == coords[1])
      throw ConfigError("active coordinates must differ");
  }
};

struct PeriodicField {
  std::vector<int> dims;  // per axis, d = 1 or 2
  std::vector<double> v;

  static PeriodicField zeros(std::vector<int> dims_) {
    PeriodicField f;
    f.dims = std::move(dims_);
    std::size_t t = 1;
    for (int d : f.dims) t *= d;
    f.v.assign(t, 0.0);
    return f;
  }
  std::size_t size() const { return v.size(); }
  int d() const { return static_cast<int>(dims.size()); }

  double mean() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  }
  double sup_norm() const {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  }
  void subtract_mean() {
    double m = mean();
    for (double& x : v) x -= m;
  }
  PeriodicField& axpy(double a, const PeriodicField& o) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * o.v[i];
    return *this;
  }
  /// Coordinate of grid node i along axis a, on [0, 2pi).
  double coord(int a, int i) const { return 2.0 * pi * i / dims[a]; }
};

/// Fill a field from a function of the active coordinates.
inline PeriodicField field_from(const std::vector<int>& dims,
                                const std::function<double(const std::vector<double>&)>& f) {
  PeriodicField out = PeriodicField::zeros(dims);
  const int d = out.d();
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    for (int a = 0; a < d; ++a) x[a] = out.coord(a, idx[a]);
    out.v[lin] = f(x);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

/// Distinct second partials d_a d_b for axes a <= b, computed spectrally.
struct SecondPartials {
  std::vector<int> dims;
  // order for d = 2: (0,0), (0,1), (1,1); for d = 1: (0,0)
  std::vector<PeriodicField> part;
  double top_energy_fraction = 0.0;

  const PeriodicField& at(int a, int b) const {
    if (dims.size() == 1) return part[0];
    int i = (a == 0 && b == 0) ? 0 : (a == 1 && b == 1 ? 2 : 1);
    return part[i];
  }
};

inline SecondPartials spectral_second_partials(const PeriodicField& f) {
  SecondPartials out;
  out.dims = f.dims;
  const int d = f.d();
  auto spec = fft_of_real(f.v, f.dims);

  // top-frequency (Nyquist ring) energy fraction, excluding the mean
  double total = 0.0, top = 0.0;
  for (std::size_t lin = 0; lin < spec.size(); ++lin) {
    std::size_t rem = lin;
    bool is_top = false, is_zero = true;
    for (int a = d - 1; a >= 0; --a) {
      int ia = static_cast<int>(rem % f.dims[a]);
      rem /= f.dims[a];
      int k = signed_freq(ia, f.dims[a]);
      if (k != 0) is_zero = false;
      if (std::abs(k) >= f.dims[a] / 2) is_top = true;
    }
    double e = std::norm(spec[lin]);
    if (!is_zero) total += e;
    if (is_top) top += e;
  }
  out.top_energy_fraction = total > 0 ? top / total : 0.0;

  auto deriv = [&](int a, int b) {
    std::vector<std::complex<double>> s = spec;
    for (std::size_t lin = 0; lin < s.size(); ++lin) {
      std::size_t rem = lin;
      int k[2] = {0, 0};
      for (int ax = d - 1; ax >= 0; --ax) {
        k[ax] = signed_freq(static_cast<int>(rem % f.dims[ax]), f.dims[ax]);
        rem /= f.dims[ax];
      }
      double mult = -static_cast<double>(k[a]) * k[b];
      if (a != b) {
        // drop unpaired Nyquist modes in mixed derivatives
        if (std::abs(k[a]) * 2 == f.dims[a] || std::abs(k[b]) * 2 == f.dims[b]) mult = 0.0;
      }
      s[lin] *= mult;
    }
    PeriodicField g;
    g.dims = f.dims;
    g.v = ifft_to_real(std::move(s), f.dims);
    return g;
  };

  out.part.push_back(deriv(0, 0));
  if (d == 2) {
    out.part.push_back(deriv(0, 1));
    out.part.push_back(deriv(1, 1));
  }
  return out;
}

/// Complex Hessian d^2 phi / dz^i dzbar^j as a pointwise n x n matrix field;
/// entries touching inactive coordinates vanish.
struct HessianField {
  int n = 0;
  std::vector<int> dims;
  std::vector<CMat> H;  // one per grid point
  double top_energy_fraction = 0.0;
};

inline HessianField complex_hessian(const PeriodicField& phi, int n,
                                    const ActiveCoords& active) {
  active.validate(n);
  if (static_cast<int>(phi.dims.size()) != active.count())
    throw DomainError("field axes and active coordinates disagree");
  SecondPartials sp = spectral_second_partials(phi);
  HessianField out;
  out.n = n;
  out.dims = phi.dims;
  out.top_energy_fraction = sp.top_energy_fraction;
  out.H.assign(phi.size(), CMat::Zero(n, n));
  const int d = active.count();
  // H_jk = (phi_{x_j x_k} + phi_{y_j y_k} + i (phi_{x_j y_k} - phi_{y_j x_k})) / 4
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const RealCoord ca = active.coords[a], cb = active.coords[b];
      const PeriodicField& dd = sp.at(std::min(a, b), std::max(a, b));
      int j = ca.z_index, k = cb.z_index;
      std::complex<double> w;
      if (!ca.imag && !cb.imag) w = {0.25, 0.0};        // x_j x_k
      else if (ca.imag && cb.imag) w = {0.25, 0.0};     // y_j y_k
      else if (!ca.imag && cb.imag) w = {0.0, 0.25};    // x_j y_k
      else w = {0.0, -0.25};                            // y_j x_k
      for (std::size_t p = 0; p < out.H.size(); ++p) out.H[p](j, k) += w * dd.v[p];
    }
  for (auto& h : out.H) hermitize(h);
  return out;
}

// CSV: header "# dims=<d1[,d2]> active=<names>" then one value per line.

inline std::string coord_name(const RealCoord& c) {
  return std::string(c.imag ? "y" : "x") + std::to_string(c.z_index + 1);
}

inline void write_field_csv(const PeriodicField& f, const ActiveCoords& active,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  out << "# dims=";
  for (std::size_t a = 0; a < f.dims.size(); ++a) out << (a ? "," : "") << f.dims[a];
  out << " active=";
  for (int a = 0; a < active.count(); ++a)
    out << (a ? "," : "") << coord_name(active.coords[a]);
  out << "\n";
  for (double x : f.v) out << x << "\n";
}

inline PeriodicField read_field_csv(const std::string& path, ActiveCoords* active = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string header;
  std::getline(in, header);
  auto dpos = header.find("dims=");
  if (dpos == std::string::npos) throw ConfigError("field csv: missing dims");
  PeriodicField f;
  {
    std::size_t i = dpos + 5;
    while (i < header.size() && (std::isdigit(header[i]) || header[i] == ',')) {
      std::size_t j = header.find_first_not_of("0123456789", i);
      f.dims.push_back(std::stoi(header.substr(i, j - i)));
      i = (j != std::string::npos && header[j] == ',') ? j + 1 : (j == std::string::npos ? header.size() : j);
      if (j == std::string::npos || header[j] != ',') break;
    }
  }
  if (active) {
    auto apos = header.find("active=");
    if (apos != std::string::npos) {
      active->coords.clear();
      std::size_t i = apos + 7;
      while (i < header.size() && header[i] != ' ') {
        std::size_t j = header.find_first_of(", ", i);
        if (j == std::string::npos) j = header.size();
        active->coords.push_back(parse_real_coord(header.substr(i, j - i)));
        i = (j < header.size() && header[j] == ',') ? j + 1 : j;
      }
    }
  }
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') f.v.push_back(std::strtod(line.c_str(), nullptr));
  std::size_t want = 1;
  for (int d : f.dims) want *= d;
  if (f.v.size() != want) throw ConfigError("field csv: value count mismatch");
  return f;
}

}  // namespace dhym::torus
