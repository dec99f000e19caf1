#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sfanc {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

// Full linear convolution via FFT, length x.size() + h.size() - 1.
std::vector<double> fft_convolve_full(const std::vector<double>& x,
                                      const std::vector<double>& h);

}  // namespace sfanc
