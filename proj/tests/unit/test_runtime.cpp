#include <doctest.h>

#include <cmath>

#include "sfanc/errors.hpp"
#include "sfanc/runtime.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sfanc;

namespace {

Signal concat_band_noise(std::initializer_list<std::pair<double, double>> bands,
                         int samples_each, std::uint64_t seed) {
  Signal out;
  int k = 0;
  for (auto [lo, hi] : bands) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k++)));
    Signal seg = band_limited_noise(lo, hi, samples_each, rng);
    for (double v : seg.samples) out.samples.push_back(0.2 * v);
  }
  return out;
}

}  // namespace

TEST_CASE("run_sfanc: a constant selector reduces to run_fixed bit-for-bit") {
  const FilterBank& bank = fixtures::cheap_bank();
  const AncScenario& sc = fixtures::cheap_scenario();
  const Signal noise = concat_band_noise({{600.0, 900.0}, {1500.0, 2300.0}}, kTrackLen, 3);

  ConstantSelector sel(9);
  SfancConfig cfg;
  const SfancRunResult sf = run_sfanc(noise, bank, sel, sc, cfg);
  const AncRunResult fixed = run_fixed(noise, bank.filters[9], sc);
  CHECK(sf.run.error_signal.samples == fixed.error_signal.samples);
  CHECK(sf.selected == std::vector<int>{9, 9});
}

TEST_CASE("run_sfanc: input and config validation") {
  const FilterBank& bank = fixtures::cheap_bank();
  const AncScenario& sc = fixtures::cheap_scenario();
  ConstantSelector sel(0);
  Signal tiny;
  tiny.samples.assign(100, 0.0);
  SfancConfig cfg;
  CHECK_THROWS_AS(run_sfanc(tiny, bank, sel, sc, cfg), ParamError);
  cfg.frame_len = 0;
  CHECK_THROWS_AS(run_sfanc(tiny, bank, sel, sc, cfg), ParamError);
  cfg = {};
  cfg.initial_filter_index = 40;
  CHECK_THROWS_AS(run_sfanc(tiny, bank, sel, sc, cfg), ParamError);
}

TEST_CASE("run_sfanc: latency-1 uses the previous frame's decision") {
  const FilterBank& bank = fixtures::full_bank();
  const AncScenario sc = default_scenario();
  // frame 0 in band 8, frame 1 in band 11
  const auto& b8 = bank.partition.bands[8];
  const auto& b11 = bank.partition.bands[11];
  const Signal noise = concat_band_noise({{static_cast<double>(b8.first), static_cast<double>(b8.second)},
                                          {static_cast<double>(b11.first), static_cast<double>(b11.second)}},
                                         kTrackLen, 5);
  OracleSelector oracle(bank, sc);

  SfancConfig lat0;
  const SfancRunResult r0 = run_sfanc(noise, bank, oracle, sc, lat0);
  CHECK(r0.selected == std::vector<int>{8, 11});

  SfancConfig lat1;
  lat1.selection_latency_frames = 1;
  lat1.initial_filter_index = 2;
  const SfancRunResult r1 = run_sfanc(noise, bank, oracle, sc, lat1);
  CHECK(r1.selected == std::vector<int>{2, 8});
}

TEST_CASE("run_sfanc: stationary in-band noise keeps one selection throughout") {
  const FilterBank& bank = fixtures::full_bank();
  const AncScenario sc = default_scenario();
  OracleSelector oracle(bank, sc);
  SfancConfig cfg;
  const auto [lo, hi] = bank.partition.bands[10];
  Rng rng(71);
  Signal noise = band_limited_noise(lo, hi, 3 * kTrackLen, rng);
  for (auto& v : noise.samples) v *= 0.2;
  const SfancRunResult r = run_sfanc(noise, bank, oracle, sc, cfg);
  CHECK(r.selected == std::vector<int>{10, 10, 10});
}

TEST_CASE("run_sfanc: oracle selection dominates every fixed filter per track") {
  const FilterBank& bank = fixtures::full_bank();
  const AncScenario sc = default_scenario();
  OracleSelector oracle(bank, sc);
  SfancConfig cfg;
  for (std::uint64_t seed : {61ULL, 62ULL}) {
    Rng rng(seed);
    const double lo = rng.log_uniform(60.0, 2500.0);
    Signal track = band_limited_noise(lo, lo * 2.5, kTrackLen, rng);
    for (auto& v : track.samples) v *= 0.2;
    const SfancRunResult sf = run_sfanc(track, bank, oracle, sc, cfg);
    const double nr_oracle = noise_reduction_db(sf.run.disturbance, sf.run.error_signal);
    for (const auto& w : bank.filters) {
      const AncRunResult fx = run_fixed(track, w, sc);
      CHECK(nr_oracle >= noise_reduction_db(fx.disturbance, fx.error_signal) - 1e-9);
    }
  }
}

TEST_CASE("run_comparison: the adaptive columns delegate exactly") {
  const FilterBank& bank = fixtures::cheap_bank();
  const AncScenario& sc = fixtures::cheap_scenario();
  const Signal noise = concat_band_noise({{700.0, 1200.0}, {2000.0, 3500.0}}, kTrackLen, 9);
  ConstantSelector sel(5);
  SfancConfig cfg;
  const BenchReport rep = run_comparison(noise, bank, sel, sc, cfg);
  CHECK(rep.e_fxlms.samples == run_fxlms(noise, sc).error_signal.samples);
  CHECK(rep.e_fxnlms.samples == run_fxnlms(noise, sc).error_signal.samples);
  CHECK(rep.nr_per_second.size() == noise.size() / 16000);
}

TEST_CASE("cnn selector disagreement rate equals one minus frame accuracy") {
  const FilterBank& bank = fixtures::cheap_bank();
  const AncScenario& sc = fixtures::cheap_scenario();
  const Signal noise =
      concat_band_noise({{300.0, 500.0}, {900.0, 1500.0}, {2500.0, 4000.0}}, kTrackLen, 15);

  const CnnModel model = build_default_model(5);
  CnnSelector cnn_sel(model);
  OracleSelector oracle(bank, sc);
  SfancConfig cfg;
  const SfancRunResult via_cnn = run_sfanc(noise, bank, cnn_sel, sc, cfg);
  const SfancRunResult via_oracle = run_sfanc(noise, bank, oracle, sc, cfg);

  REQUIRE(via_cnn.selected.size() == via_oracle.selected.size());
  int agree = 0;
  for (std::size_t k = 0; k < via_cnn.selected.size(); ++k)
    if (via_cnn.selected[k] == via_oracle.selected[k]) ++agree;
  const double accuracy = static_cast<double>(agree) / static_cast<double>(via_cnn.selected.size());
  const double disagreement = 1.0 - accuracy;
  int mismatches = 0;
  for (std::size_t k = 0; k < via_cnn.selected.size(); ++k)
    if (via_cnn.selected[k] != via_oracle.selected[k]) ++mismatches;
  CHECK(disagreement ==
        doctest::Approx(static_cast<double>(mismatches) / static_cast<double>(via_cnn.selected.size())));
}

TEST_CASE("make_aircraft_like_noise: deterministic, sized, centroid glides") {
  const Signal a = make_aircraft_like_noise(10.0, 99);
  const Signal b = make_aircraft_like_noise(10.0, 99);
  CHECK(a.samples == b.samples);
  CHECK(a.size() == 160000);
  CHECK_THROWS_AS(make_aircraft_like_noise(2.0, 1), ParamError);

  const std::vector<double> first(a.samples.begin(), a.samples.begin() + 16000);
  const std::vector<double> last(a.samples.end() - 16000, a.samples.end());
  const double c0 = oracles::spectral_centroid(first, 16000.0);
  const double c1 = oracles::spectral_centroid(last, 16000.0);
  CHECK(std::abs(c1 - c0) / c0 >= 0.2);
}

TEST_CASE("make_composite_noise: deterministic band switching") {
  const AncScenario sc = default_scenario();
  const Signal a = make_composite_noise(6.0, 2.0, 4, sc);
  const Signal b = make_composite_noise(6.0, 2.0, 4, sc);
  CHECK(a.samples == b.samples);
  CHECK(a.size() == 96000);
  CHECK_THROWS_AS(make_composite_noise(1.0, 2.0, 4, sc), ParamError);
}

TEST_CASE("nr_per_second: row count is the whole-second count") {
  Signal d, e;
  d.samples.assign(16000 * 2 + 5000, 1.0);
  e.samples.assign(16000 * 2 + 5000, 0.5);
  const auto rows = nr_per_second(d, e);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == doctest::Approx(20.0 * std::log10(2.0)));
}
