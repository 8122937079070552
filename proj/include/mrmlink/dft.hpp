#pragma once

// Direct DFT with an exact twiddle table. Records are short (hundreds to a
// few thousand samples), and a fixed summation order keeps every bin
// bit-reproducible regardless of build or thread count.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace mrm {

namespace detail {

inline std::vector<std::complex<double>> twiddles(std::size_t n) {
  std::vector<std::complex<double>> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(n);
    w[k] = {std::cos(ang), std::sin(ang)};
  }
  return w;
}

inline std::complex<double> bin_with(std::span<const double> x, std::size_t k,
                                     const std::vector<std::complex<double>>& w) {
  const std::size_t n = x.size();
  std::complex<double> acc{0.0, 0.0};
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += x[i] * w[idx];
    idx += k;
    if (idx >= n) idx -= n;
  }
  return acc;
}

}  // namespace detail

/// X[k] = sum_n x[n] exp(-2 pi i k n / N) for a single bin.
inline std::complex<double> dft_bin(std::span<const double> x, std::size_t k) {
  detail::require(!x.empty(), "dft: empty record");
  const auto w = detail::twiddles(x.size());
  return detail::bin_with(x, k % x.size(), w);
}

/// One-sided power spectrum normalized so that the bins sum to the mean
/// square of the record (Parseval). Returns N/2 + 1 bins.
inline std::vector<double> one_sided_power(std::span<const double> x) {
  detail::require(!x.empty(), "dft: empty record");
  const std::size_t n = x.size();
  const auto w = detail::twiddles(n);
  const std::size_t half = n / 2;
  std::vector<double> p(half + 1);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 0; k <= half; ++k) {
    const double mag2 = std::norm(detail::bin_with(x, k, w)) * norm;
    const bool unpaired = (k == 0) || (n % 2 == 0 && k == half);
    p[k] = unpaired ? mag2 : 2.0 * mag2;
  }
  return p;
}

/// Phase of bin k in cycles, in (-0.5, 0.5].
inline double bin_phase_cycles(std::span<const double> x, std::size_t k) {
  const auto c = dft_bin(x, k);
  return std::atan2(c.imag(), c.real()) / (2.0 * std::numbers::pi);
}

}  // namespace mrm
