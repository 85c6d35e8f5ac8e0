#pragma once

// Scalar potential samples on uniform grids over a polydisc in C^n
// (2n real axes), with a singular-set mask and CSV import/export.

#include <fstream>
#include <iomanip>

#include "dhym/common.hpp"

namespace dhym {

struct PotentialSample {
  int n = 1;                   // complex dimension; the grid covers R^{2n}
  double spacing = 0.0;
  std::vector<double> center;  // size 2n
  std::vector<int> dims;       // size 2n, points per axis
  std::vector<double> values;  // row-major, dims[0] slowest
  std::vector<uint8_t> mask;   // 1 = singular/unusable; empty means none

  std::size_t size() const {
    std::size_t t = 1;
    for (int d : dims) t *= d;
    return t;
  }
  int axes() const { return 2 * n; }
  std::size_t index(const std::vector<int>& idx) const {
    std::size_t lin = 0;
    for (int a = 0; a < axes(); ++a) lin = lin * dims[a] + idx[a];
    return lin;
  }
  double coord(int axis, int i) const {
    return center[axis] + (i - 0.5 * (dims[axis] - 1)) * spacing;
  }
  bool masked(std::size_t lin) const { return !mask.empty() && mask[lin] != 0; }

  void validate() const {
    if (n < 1 || n > 3) throw DomainError("potential dimension must be 1..3");
    if (static_cast<int>(dims.size()) != axes() || static_cast<int>(center.size()) != axes())
      throw DomainError("potential grid metadata mismatch");
    if (!(spacing > 0)) throw DomainError("grid spacing must be positive");
    if (values.size() != size()) throw DomainError("potential value count mismatch");
    if (!mask.empty() && mask.size() != size()) throw DomainError("mask size mismatch");
  }

  /// Mark non-finite entries as the singular set.
  void mask_nonfinite() {
    bool any = false;
    for (double v : values)
      if (!std::isfinite(v)) any = true;
    if (!any) return;
    if (mask.empty()) mask.assign(size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i])) mask[i] = 1;
  }
};

/// Build a sample of f over a centered grid; f takes 2n coordinates.
inline PotentialSample sample_potential(int n, double halfwidth, double spacing,
                                        const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> center = {}) {
  PotentialSample p;
  p.n = n;
  p.spacing = spacing;
  int per_axis = 2 * static_cast<int>(std::floor(halfwidth / spacing)) + 1;
  p.dims.assign(2 * n, per_axis);
  p.center = center.empty() ? std::vector<double>(2 * n, 0.0) : std::move(center);
  p.values.resize(p.size());
  std::vector<int> idx(2 * n, 0);
  std::vector<double> x(2 * n);
  for (std::size_t lin = 0; lin < p.size(); ++lin) {
    for (int a = 0; a < 2 * n; ++a) x[a] = p.coord(a, idx[a]);
    p.values[lin] = f(x);
    for (int a = 2 * n - 1; a >= 0; --a) {
      if (++idx[a] < p.dims[a]) break;
      idx[a] = 0;
    }
  }
  p.mask_nonfinite();
  p.validate();
  return p;
}

// CSV layout: "n,<n>,spacing,<h>,center,<c...>,dims,<d...>" then one value
// per line (nan for masked points).

inline void write_potential_csv(const PotentialSample& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  out << "n," << p.n << ",spacing," << p.spacing << ",center";
  for (double c : p.center) out << "," << c;
  out << ",dims";
  for (int d : p.dims) out << "," << d;
  out << "\n";
  for (std::size_t i = 0; i < p.values.size(); ++i)
    out << (p.masked(i) ? std::numeric_limits<double>::quiet_NaN() : p.values[i]) << "\n";
}

inline PotentialSample read_potential_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string header;
  std::getline(in, header);
  PotentialSample p;
  std::vector<std::string> tok;
  std::size_t pos = 0;
  while (pos <= header.size()) {
    std::size_t c = header.find(',', pos);
    if (c == std::string::npos) c = header.size();
    tok.push_back(header.substr(pos, c - pos));
    pos = c + 1;
  }
  std::size_t i = 0;
  auto expect = [&](const std::string& k) {
    if (i >= tok.size() || tok[i] != k) throw ConfigError("potential csv: expected " + k);
    ++i;
  };
  expect("n");
  p.n = std::stoi(tok[i++]);
  expect("spacing");
  p.spacing = std::stod(tok[i++]);
  expect("center");
  for (int a = 0; a < 2 * p.n; ++a) p.center.push_back(std::stod(tok[i++]));
  expect("dims");
  for (int a = 0; a < 2 * p.n; ++a) p.dims.push_back(std::stoi(tok[i++]));
  p.values.reserve(p.size());
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) p.values.push_back(std::strtod(line.c_str(), nullptr));
  p.mask_nonfinite();
  p.validate();
  return p;
}

}  // namespace dhym
