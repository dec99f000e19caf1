#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sfanc {

inline constexpr int kPipelineRate = 16000;

// Sampled waveform. The whole pipeline runs at 16 kHz; nothing resamples.
struct Signal {
  std::vector<double> samples;
  int sample_rate = kPipelineRate;

  std::size_t size() const { return samples.size(); }
};

struct FirFilter {
  std::vector<double> coefficients;

  int taps() const { return static_cast<int>(coefficients.size()); }
};

/// Linear-phase Hamming windowed-sinc band-pass.
///
/// The low edge is a unit-DC-gain low-pass sinc; the high edge is realized by
/// spectral reversal of a complement low-pass so attenuation at Nyquist is as
/// deep as at DC even when high_hz sits close to sample_rate/2. Design
/// transition width is 4*sample_rate/taps Hz. Coefficients are built as
/// mirrored halves, so even symmetry about the center tap is exact.
///
/// Requires 0 < low_hz < high_hz < sample_rate/2 and odd taps >= 31.
FirFilter design_bandpass(double low_hz, double high_hz, int taps, int sample_rate);

/// Causal convolution with zero initial state, truncated to the input length:
/// y[n] = sum_k h[k] * x[n-k], x[m] = 0 for m < 0.
Signal convolve(const Signal& x, const FirFilter& h);

/// Mean of squared samples.
double power(const Signal& x);

/// 10*log10(power(d)/power(e)). Returns +120 dB when power(e) == 0.
/// power(d) must be > 0.
double noise_reduction_db(const Signal& d, const Signal& e);

/// Divides every sample by (max - min). A constant input maps to all zeros.
Signal min_max_normalize(const Signal& x);

// Shared inner kernel: sum_{k=0..taps-1, k<=n} h[k] * x[n-k], ascending k.
// convolve() and the adaptive-filter loops both use this, which is what makes
// a zero-step adaptive run reproduce a fixed run bit-for-bit.
double causal_dot(const double* x, std::int64_t n, const double* h, int taps);

}  // namespace sfanc
