#include "sfanc/fft.hpp"

#include <numbers>

#include "sfanc/errors.hpp"

namespace sfanc {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ParamError("fft size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& c : a) c *= inv;
  }
}

std::vector<double> fft_convolve_full(const std::vector<double>& x,
                                      const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t n = next_pow2(out_len);
  std::vector<std::complex<double>> fx(n), fh(n);
  for (std::size_t i = 0; i < x.size(); ++i) fx[i] = x[i];
  for (std::size_t i = 0; i < h.size(); ++i) fh[i] = h[i];
  fft_inplace(fx, false);
  fft_inplace(fh, false);
  for (std::size_t i = 0; i < n; ++i) fx[i] *= fh[i];
  fft_inplace(fx, true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fx[i].real();
  return out;
}

}  // namespace sfanc
