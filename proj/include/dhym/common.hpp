#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dhym {

inline constexpr double pi = 3.14159265358979323846;

/// arccot with range (0, pi), monotone decreasing.
inline double arccot(double x) { return 0.5 * pi - std::atan(x); }

/// Predicates closer to zero than this are reported as indeterminate
/// instead of being forced to a boolean.
inline constexpr double borderline_tol = 1e-9;

enum class Tristate { no = 0, yes = 1, indeterminate = 2 };

inline Tristate classify(double margin, double tol = borderline_tol) {
  if (std::abs(margin) < tol) return Tristate::indeterminate;
  return margin > 0.0 ? Tristate::yes : Tristate::no;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Raised when a comparison form fails to be positive definite.
struct ComparisonFormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 both as a stream generator and as the
// per-trial seed derivation, so Monte Carlo suites are reproducible
// independent of thread count.

struct SplitMix64 {
  uint64_t s;
  explicit SplitMix64(uint64_t seed) : s(seed) {}
  uint64_t next() {
    uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

struct Rng {
  SplitMix64 g;
  explicit Rng(uint64_t seed) : g(seed) {}

  /// Uniform in [0, 1).
  double u01() { return static_cast<double>(g.next() >> 11) * 0x1.0p-53; }
  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * u01(); }
  uint64_t bits() { return g.next(); }
  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = u01(), u2 = u01();
    while (u1 <= 1e-300) u1 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }
};

/// Derive an independent seed for trial i of a suite.
inline uint64_t trial_seed(uint64_t base, uint64_t i) {
  SplitMix64 g(base ^ (0x632be59bd9b4e019ull * (i + 1)));
  return g.next();
}

// ---------------------------------------------------------------------------
// Parallel loop over [0, count). Thread count comes from DHYM_THREADS
// (default 1). Work must be independent per index.

inline int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("DHYM_THREADS")) {
      int v = std::atoi(env);
      if (v > 0) return v;
    }
    return 1;
  }();
  return n;
}

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const int nt = thread_count();
  if (nt <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (count + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace dhym
