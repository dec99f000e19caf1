#pragma once

// Independent oracles for the test suites. These deliberately avoid the
// library's own DSP routines: convolutions are raw loops and the spectral
// tools are a self-contained recursive FFT, so a bug in the production path
// cannot hide itself.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sfanc/anc.hpp"
#include "sfanc/filter_bank.hpp"

namespace oracles {

// |sum_n x[n] e^{-i 2 pi f n / fs}|
inline double dft_magnitude(const std::vector<double>& x, double f_hz, double fs) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double a = 2.0 * std::numbers::pi * f_hz * static_cast<double>(n) / fs;
    re += x[n] * std::cos(a);
    im -= x[n] * std::sin(a);
  }
  return std::hypot(re, im);
}

inline double db(double amplitude) { return 20.0 * std::log10(std::max(amplitude, 1e-300)); }

// Recursive radix-2 FFT (power-of-two size), independent of the library's
// iterative implementation.
inline void fft_recursive(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  std::vector<std::complex<double>> even(n / 2), odd(n / 2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    even[i] = a[2 * i];
    odd[i] = a[2 * i + 1];
  }
  fft_recursive(even);
  fft_recursive(odd);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto t = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)) * odd[k];
    a[k] = even[k] + t;
    a[k + n / 2] = even[k] - t;
  }
}

// Power spectrum bins 0..n/2 of a zero-padded signal; bin width fs/n.
inline std::vector<double> power_spectrum(const std::vector<double>& x, std::size_t fft_len) {
  std::vector<std::complex<double>> a(fft_len);
  for (std::size_t i = 0; i < x.size() && i < fft_len; ++i) a[i] = x[i];
  fft_recursive(a);
  std::vector<double> p(fft_len / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(a[k]);
  return p;
}

// Fraction of spectral energy inside [lo_hz, hi_hz].
inline double band_energy_fraction(const std::vector<double>& x, double lo_hz, double hi_hz,
                                   double fs) {
  std::size_t n = 1;
  while (n < x.size()) n <<= 1;
  const std::vector<double> p = power_spectrum(x, n);
  const double bin = fs / static_cast<double>(n);
  double inside = 0.0, total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double f = bin * static_cast<double>(k);
    total += p[k];
    if (f >= lo_hz && f <= hi_hz) inside += p[k];
  }
  return total > 0.0 ? inside / total : 0.0;
}

inline double spectral_centroid(const std::vector<double>& x, double fs) {
  std::size_t n = 1;
  while (n < x.size()) n <<= 1;
  const std::vector<double> p = power_spectrum(x, n);
  const double bin = fs / static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    num += bin * static_cast<double>(k) * p[k];
    den += p[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

// Brute-force best-filter search: raw convolution chains, lowest index wins.
struct BruteForceReport {
  int label = 0;
  std::vector<double> residual_powers;
};

inline BruteForceReport brute_force_label(const std::vector<double>& x,
                                          const sfanc::FilterBank& bank,
                                          const sfanc::AncScenario& scenario) {
  auto conv_trunc = [](const std::vector<double>& a, const std::vector<double>& h) {
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t n = 0; n < a.size(); ++n) {
      double acc = 0.0;
      const std::size_t kmax = std::min(n + 1, h.size());
      for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * a[n - k];
      y[n] = acc;
    }
    return y;
  };

  const std::vector<double> d = conv_trunc(x, scenario.primary_path.coefficients);
  BruteForceReport rep;
  rep.residual_powers.resize(bank.filters.size());
  for (std::size_t i = 0; i < bank.filters.size(); ++i) {
    const std::vector<double> y = conv_trunc(x, bank.filters[i].coefficients);
    const std::vector<double> a = conv_trunc(y, scenario.secondary_path.coefficients);
    double p = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double e = d[n] - a[n];
      p += e * e;
    }
    rep.residual_powers[i] = p / static_cast<double>(x.size());
  }
  rep.label = 0;
  for (std::size_t i = 1; i < rep.residual_powers.size(); ++i)
    if (rep.residual_powers[i] < rep.residual_powers[static_cast<std::size_t>(rep.label)])
      rep.label = static_cast<int>(i);
  return rep;
}

}  // namespace oracles
