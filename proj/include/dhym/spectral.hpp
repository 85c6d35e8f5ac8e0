#pragma once

// Thin RAII wrapper over FFTW for small multi-dimensional complex
// transforms. Plan creation is serialized (FFTW plan building is not
// thread-safe); execution of distinct transforms is.

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "dhym/common.hpp"

namespace dhym {

inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

/// In-place complex DFT over a row-major array with the given dims.
/// sign = FFTW_FORWARD or FFTW_BACKWARD; backward is unnormalized.
inline void fft_inplace(std::vector<std::complex<double>>& data, const std::vector<int>& dims,
                        int sign) {
  std::size_t total = 1;
  for (int d : dims) total *= d;
  if (data.size() != total) throw DomainError("fft: size mismatch");
  fftw_complex* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), p, p, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
}

inline std::vector<std::complex<double>> fft_of_real(const std::vector<double>& v,
                                                     const std::vector<int>& dims) {
  std::vector<std::complex<double>> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  fft_inplace(out, dims, FFTW_FORWARD);
  return out;
}

/// Inverse transform of a spectrum, returning the real part, normalized.
inline std::vector<double> ifft_to_real(std::vector<std::complex<double>> spec,
                                        const std::vector<int>& dims) {
  fft_inplace(spec, dims, FFTW_BACKWARD);
  double norm = 1.0;
  for (int d : dims) norm *= d;
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real() / norm;
  return out;
}

/// Signed frequency for index i on an axis of length n (grid period 2*pi).
inline int signed_freq(int i, int n) { return (i <= n / 2) ? i : i - n; }

}  // namespace dhym
