#pragma once

// Flat key = value configuration files: '#' comments, whitespace-separated
// token values, complex entries as "a", "a+bi" or "a-bi".

#include <fstream>
#include <map>
#include <sstream>

#include "dhym/linalg.hpp"

namespace dhym {

struct Config {
  std::map<std::string, std::string> kv;

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config c;
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        auto a = s.find_first_not_of(" \t\r");
        auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (!key.empty()) c.kv[key] = val;
    }
    return c;
  }

  bool has(const std::string& k) const { return kv.count(k) > 0; }

  std::string str(const std::string& k, const std::string& dflt = "") const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  std::string require(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("missing config key: " + k);
    return it->second;
  }
  double num(const std::string& k) const {
    try {
      return std::stod(require(k));
    } catch (const std::invalid_argument&) {
      throw ConfigError("config key is not a number: " + k);
    }
  }
  double num(const std::string& k, double dflt) const { return has(k) ? num(k) : dflt; }
  long long integer(const std::string& k, long long dflt) const {
    return has(k) ? static_cast<long long>(std::llround(num(k))) : dflt;
  }

  std::vector<std::string> tokens(const std::string& k) const {
    std::istringstream is(require(k));
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
  }
  std::vector<double> numbers(const std::string& k) const {
    std::vector<double> out;
    for (const auto& t : tokens(k)) out.push_back(std::stod(t));
    return out;
  }

  /// Row-major Hermitian matrix from n*n complex tokens.
  CMat matrix(const std::string& k, int n) const {
    auto toks = tokens(k);
    if (static_cast<int>(toks.size()) != n * n)
      throw ConfigError("config key " + k + " needs " + std::to_string(n * n) + " entries");
    CMat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = parse_complex(toks[i * n + j]);
    if (!is_hermitian(m, 1e-12)) throw ConfigError("config key " + k + " is not Hermitian");
    return m;
  }

  static std::complex<double> parse_complex(const std::string& t) {
    if (!t.empty() && t.back() == 'i') {
      // a+bi / a-bi / bi
      std::string body = t.substr(0, t.size() - 1);
      std::size_t split = body.find_last_of("+-");
      if (split == std::string::npos || split == 0)
        return {0.0, std::stod(body.empty() || body == "+" || body == "-" ? body + "1" : body)};
      double re = std::stod(body.substr(0, split));
      std::string ims = body.substr(split);
      if (ims == "+") ims = "+1";
      if (ims == "-") ims = "-1";
      return {re, std::stod(ims)};
    }
    return {std::stod(t), 0.0};
  }
};

}  // namespace dhym
