#include <doctest.h>

#include <cmath>

#include "sfanc/errors.hpp"
#include "sfanc/rng.hpp"
#include "sfanc/signal.hpp"
#include "support/oracles.hpp"

using namespace sfanc;

namespace {

Signal sig(std::initializer_list<double> v) {
  Signal s;
  s.samples = v;
  return s;
}

Signal random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Signal s;
  s.samples.resize(n);
  for (auto& v : s.samples) v = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("design_bandpass: full-range response hits the spec points") {
  const FirFilter h = design_bandpass(20.0, 7980.0, 1025, 16000);

  CHECK(oracles::db(oracles::dft_magnitude(h.coefficients, 0.0, 16000)) <= -40.0);
  CHECK(oracles::db(oracles::dft_magnitude(h.coefficients, 8000.0, 16000)) <= -40.0);
  const double mid_db = oracles::db(oracles::dft_magnitude(h.coefficients, 4000.0, 16000));
  CHECK(mid_db > -1.0);
  CHECK(mid_db < 1.0);
}

TEST_CASE("design_bandpass: DC gain equals the coefficient sum and is tiny") {
  struct Band {
    double lo, hi;
    int taps;
  };
  for (const Band& b : {Band{20.0, 7980.0, 1025}, Band{100.0, 400.0, 511},
                        Band{500.0, 2000.0, 255}, Band{3000.0, 7000.0, 129}}) {
    const FirFilter h = design_bandpass(b.lo, b.hi, b.taps, 16000);
    double sum = 0.0;
    for (double c : h.coefficients) sum += c;
    CHECK(std::abs(sum) < 1e-3);
  }
}

TEST_CASE("design_bandpass: in-band flatness within the transition margins") {
  const int taps = 511;
  const double delta = 4.0 * 16000.0 / taps;
  const FirFilter h = design_bandpass(500.0, 2000.0, taps, 16000);
  for (double f = 500.0 + delta; f <= 2000.0 - delta; f += 50.0) {
    const double g = oracles::db(oracles::dft_magnitude(h.coefficients, f, 16000));
    CHECK(g >= -3.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("design_bandpass: coefficients are exactly symmetric") {
  const FirFilter h = design_bandpass(123.0, 4567.0, 255, 16000);
  for (int i = 0; i < h.taps() / 2; ++i)
    CHECK(h.coefficients[static_cast<std::size_t>(i)] ==
          h.coefficients[static_cast<std::size_t>(h.taps() - 1 - i)]);
}

TEST_CASE("design_bandpass: parameter validation") {
  CHECK_THROWS_AS(design_bandpass(1000.0, 1000.0, 1025, 16000), ParamError);  // empty band
  CHECK_THROWS_AS(design_bandpass(200.0, 100.0, 1025, 16000), ParamError);
  CHECK_THROWS_AS(design_bandpass(20.0, 8000.0, 1025, 16000), ParamError);  // at Nyquist
  CHECK_THROWS_AS(design_bandpass(0.0, 4000.0, 1025, 16000), ParamError);
  CHECK_THROWS_AS(design_bandpass(20.0, 7980.0, 1024, 16000), ParamError);  // even taps
  CHECK_THROWS_AS(design_bandpass(20.0, 7980.0, 29, 16000), ParamError);    // too short
}

TEST_CASE("convolve: impulse reproduces the coefficients") {
  const FirFilter h = design_bandpass(500.0, 2000.0, 63, 16000);
  Signal x;
  x.samples.assign(100, 0.0);
  x.samples[0] = 1.0;
  const Signal y = convolve(x, h);
  REQUIRE(y.size() == 100);
  for (int k = 0; k < h.taps(); ++k)
    CHECK(y.samples[static_cast<std::size_t>(k)] ==
          doctest::Approx(h.coefficients[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("convolve: zeros map to zeros, short example by hand") {
  FirFilter h;
  h.coefficients = {1.0, 1.0};
  Signal x = sig({0, 0, 0, 0});
  const Signal y = convolve(x, h);
  for (double v : y.samples) CHECK(v == 0.0);

  const Signal z = convolve(sig({1, 1}), h);
  REQUIRE(z.size() == 2);
  CHECK(z.samples[0] == 1.0);
  CHECK(z.samples[1] == 2.0);
}

TEST_CASE("convolve: linearity") {
  const FirFilter h = design_bandpass(100.0, 3000.0, 91, 16000);
  const Signal x1 = random_signal(400, 1);
  const Signal x2 = random_signal(400, 2);
  const double a = 1.7, b = -0.3;
  Signal mix;
  mix.samples.resize(400);
  for (std::size_t i = 0; i < 400; ++i) mix.samples[i] = a * x1.samples[i] + b * x2.samples[i];
  const Signal lhs = convolve(mix, h);
  const Signal y1 = convolve(x1, h);
  const Signal y2 = convolve(x2, h);
  for (std::size_t i = 0; i < 400; ++i)
    CHECK(std::abs(lhs.samples[i] - (a * y1.samples[i] + b * y2.samples[i])) <= 1e-9);
}

TEST_CASE("power: hand values and sine") {
  CHECK(power(sig({0, 0, 0})) == 0.0);
  CHECK(power(sig({1, -1, 1, -1})) == 1.0);
  Signal s;
  s.samples.resize(1600);  // 10 whole cycles of 100 Hz at 16 kHz
  for (std::size_t n = 0; n < s.samples.size(); ++n)
    s.samples[n] = std::sin(2.0 * std::numbers::pi * 100.0 * static_cast<double>(n) / 16000.0);
  CHECK(power(s) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("noise_reduction_db: ratios, cap, and errors") {
  const Signal d = sig({1, 1, 1, 1});
  CHECK(noise_reduction_db(d, d) == doctest::Approx(0.0));
  Signal e = d;
  for (auto& v : e.samples) v /= std::sqrt(10.0);
  CHECK(noise_reduction_db(d, e) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(noise_reduction_db(d, sig({0, 0, 0, 0})) == 120.0);
  CHECK_THROWS_AS(noise_reduction_db(sig({0, 0}), sig({1, 1})), ParamError);
  CHECK_THROWS_AS(noise_reduction_db(sig({1, 1}), sig({1})), ParamError);

  const Signal r = random_signal(256, 3);
  CHECK(noise_reduction_db(r, r) == doctest::Approx(0.0));
}

TEST_CASE("min_max_normalize: spec examples") {
  const Signal a = min_max_normalize(sig({-2, 0, 2}));
  CHECK(a.samples[0] == doctest::Approx(-0.5));
  CHECK(a.samples[1] == doctest::Approx(0.0));
  CHECK(a.samples[2] == doctest::Approx(0.5));

  const Signal b = min_max_normalize(sig({3, 3, 3}));
  for (double v : b.samples) CHECK(v == 0.0);

  CHECK_THROWS_AS(min_max_normalize(sig({1})), ParamError);
}

TEST_CASE("min_max_normalize: range-straddling inputs land in [-1, 1]") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Signal x = random_signal(300, seed + 10);
    x.samples[0] = 0.0;  // force the range to straddle zero
    const Signal y = min_max_normalize(x);
    for (double v : y.samples) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("min_max_normalize: scale invariance") {
  const Signal x = random_signal(300, 77);
  const Signal y1 = min_max_normalize(x);
  for (double c : {0.001, 3.0, 1e6}) {
    Signal xs = x;
    for (auto& v : xs.samples) v *= c;
    const Signal y2 = min_max_normalize(xs);
    for (std::size_t i = 0; i < y1.size(); ++i)
      CHECK(y2.samples[i] == doctest::Approx(y1.samples[i]).epsilon(1e-9));
  }
}
