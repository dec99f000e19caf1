#include "sfanc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sfanc/errors.hpp"

namespace sfanc {

namespace {

// Unit-DC-gain Hamming windowed sinc low-pass, built from the centered index
// so the result is exactly symmetric.
std::vector<double> lowpass_unit_dc(double fc, int taps, int sample_rate) {
  const int half = (taps - 1) / 2;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int k = 0; k <= half; ++k) {
    const double t = 2.0 * fc / sample_rate * k;
    const double sinc = (k == 0) ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    const double win = 0.54 + 0.46 * std::cos(std::numbers::pi * k / half);
    const double v = 2.0 * fc / sample_rate * sinc * win;
    h[half + k] = v;
    h[half - k] = v;
    sum += (k == 0) ? v : 2.0 * v;
  }
  for (auto& v : h) v /= sum;
  return h;
}

}  // namespace

FirFilter design_bandpass(double low_hz, double high_hz, int taps, int sample_rate) {
  if (sample_rate <= 0) throw ParamError("design_bandpass: sample_rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0))
    throw ParamError("design_bandpass: need 0 < low_hz < high_hz < sample_rate/2");
  if (taps < 31 || taps % 2 == 0)
    throw ParamError("design_bandpass: taps must be odd and >= 31");

  const int half = (taps - 1) / 2;
  const std::vector<double> lp_low = lowpass_unit_dc(low_hz, taps, sample_rate);
  // High-edge low-pass as delta - reversed complement low-pass: its gain is
  // exactly 0 at Nyquist and ~1 at DC, instead of the other way around.
  const std::vector<double> comp = lowpass_unit_dc(sample_rate / 2.0 - high_hz, taps, sample_rate);

  FirFilter out;
  out.coefficients.resize(taps);
  for (int n = 0; n < taps; ++n) {
    const int k = n - half;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    double v = -sign * comp[n] - lp_low[n];
    if (n == half) v += 1.0;
    out.coefficients[n] = v;
  }
  return out;
}

double causal_dot(const double* x, std::int64_t n, const double* h, int taps) {
  const int kmax = static_cast<int>(std::min<std::int64_t>(n, taps - 1));
  double acc = 0.0;
  for (int k = 0; k <= kmax; ++k) acc += h[k] * x[n - k];
  return acc;
}

Signal convolve(const Signal& x, const FirFilter& h) {
  if (x.samples.empty()) throw ParamError("convolve: empty signal");
  if (h.taps() < 1) throw ParamError("convolve: empty filter");
  Signal y;
  y.sample_rate = x.sample_rate;
  y.samples.resize(x.size());
  const double* xs = x.samples.data();
  const double* hs = h.coefficients.data();
  const int taps = h.taps();
  for (std::size_t n = 0; n < x.size(); ++n)
    y.samples[n] = causal_dot(xs, static_cast<std::int64_t>(n), hs, taps);
  return y;
}

double power(const Signal& x) {
  if (x.samples.empty()) throw ParamError("power: empty signal");
  double acc = 0.0;
  for (double v : x.samples) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double noise_reduction_db(const Signal& d, const Signal& e) {
  if (d.size() != e.size()) throw ParamError("noise_reduction_db: length mismatch");
  const double pd = power(d);
  if (pd <= 0.0) throw ParamError("noise_reduction_db: undefined metric, disturbance power is zero");
  const double pe = power(e);
  if (pe == 0.0) return 120.0;  // cap instead of +inf so CSV stays finite
  return 10.0 * std::log10(pd / pe);
}

Signal min_max_normalize(const Signal& x) {
  if (x.size() < 2) throw ParamError("min_max_normalize: need at least 2 samples");
  const auto [mn, mx] = std::minmax_element(x.samples.begin(), x.samples.end());
  const double range = *mx - *mn;
  Signal out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(x.size());
  if (range == 0.0) return out;  // constant frame carries nothing selectable
  for (std::size_t i = 0; i < x.size(); ++i) out.samples[i] = x.samples[i] / range;
  return out;
}

}  // namespace sfanc
