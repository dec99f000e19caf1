#include <doctest.h>

#include <cmath>

#include "sfanc/errors.hpp"
#include "sfanc/labeler.hpp"
#include "sfanc/parallel.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sfanc;

namespace {

NoiseTrack random_track(std::uint64_t seed) {
  Rng rng(seed);
  NoiseTrack t;
  const double lo = rng.log_uniform(40.0, 3000.0);
  t.signal = band_limited_noise(lo, std::min(lo * rng.uniform(1.3, 4.0), 7900.0), kTrackLen, rng);
  return t;
}

}  // namespace

TEST_CASE("label_track: all-zero track ties break to index 0") {
  NoiseTrack t;
  t.signal.samples.assign(kTrackLen, 0.0);
  const LabelReport rep = label_track(t, fixtures::cheap_bank(), fixtures::cheap_scenario());
  CHECK(rep.label == 0);
  for (double p : rep.residual_powers) CHECK(p == 0.0);
  for (double nr : rep.nr_db) CHECK(nr == 0.0);
}

TEST_CASE("label_track: fingerprint mismatch is a configuration error") {
  AncScenario other = fixtures::cheap_scenario();
  other.step_size *= 2.0;
  CHECK_THROWS_AS(label_track(random_track(1), fixtures::cheap_bank(), other), ParamError);
}

TEST_CASE("label_track: labels are scale invariant") {
  const LabelerEngine engine(fixtures::cheap_bank(), fixtures::cheap_scenario());
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL}) {
    const NoiseTrack t = random_track(seed);
    const int base = engine.label(t.signal).label;
    for (double c : {0.05, 3.0, 40.0}) {
      Signal scaled = t.signal;
      for (auto& v : scaled.samples) v *= c;
      CHECK(engine.label(scaled).label == base);
    }
  }
}

TEST_CASE("label_track: the chosen label maximizes NR") {
  const LabelerEngine engine(fixtures::cheap_bank(), fixtures::cheap_scenario());
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    const LabelReport rep = engine.label(random_track(seed).signal);
    for (double nr : rep.nr_db) CHECK(rep.nr_db[static_cast<std::size_t>(rep.label)] >= nr);
  }
}

TEST_CASE("label_track matches the raw brute-force search" * doctest::timeout(300)) {
  const LabelerEngine engine(fixtures::cheap_bank(), fixtures::cheap_scenario());
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const NoiseTrack t = random_track(seed);
    const LabelReport fast = engine.label(t.signal);
    const oracles::BruteForceReport slow =
        oracles::brute_force_label(t.signal.samples, fixtures::cheap_bank(), fixtures::cheap_scenario());
    CHECK(fast.label == slow.label);
    for (std::size_t i = 0; i < 15; ++i)
      CHECK(fast.residual_powers[i] ==
            doctest::Approx(slow.residual_powers[i]).epsilon(1e-9));
  }
}

TEST_CASE("label_dataset: histogram totals, determinism, failure isolation") {
  auto tracks = synth_dataset(30, TrackOrigin::SyntheticA, 55);
  // one broken track: wrong length
  tracks[7].signal.samples.resize(100);
  const LabelStats stats = label_dataset(tracks, fixtures::cheap_bank(), fixtures::cheap_scenario());
  REQUIRE(stats.failures.size() == 1);
  CHECK(stats.failures[0].first == tracks[7].id);
  int total = 0;
  for (int c : stats.histogram) total += c;
  CHECK(total == 29);
  CHECK_FALSE(tracks[7].label.has_value());
  CHECK(tracks[0].label.has_value());
  CHECK(tracks[0].nr_db.size() == 15);

  // relabeling yields identical labels
  auto tracks2 = synth_dataset(30, TrackOrigin::SyntheticA, 55);
  tracks2[7].signal.samples.resize(100);
  label_dataset(tracks2, fixtures::cheap_bank(), fixtures::cheap_scenario());
  for (std::size_t i = 0; i < tracks.size(); ++i) CHECK(tracks[i].label == tracks2[i].label);
}

TEST_CASE("label_dataset: empty input gives empty output") {
  std::vector<NoiseTrack> none;
  const LabelStats stats = label_dataset(none, fixtures::cheap_bank(), fixtures::cheap_scenario());
  CHECK(stats.failures.empty());
  int total = 0;
  for (int c : stats.histogram) total += c;
  CHECK(total == 0);
}

TEST_CASE("label_dataset: serial equals parallel exactly") {
  auto par = synth_dataset(24, TrackOrigin::SyntheticB, 91);
  auto ser = par;
  label_dataset(par, fixtures::cheap_bank(), fixtures::cheap_scenario());
  set_thread_count(1);
  label_dataset(ser, fixtures::cheap_bank(), fixtures::cheap_scenario());
  set_thread_count(0);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].label == ser[i].label);
    CHECK(par[i].nr_db == ser[i].nr_db);
  }
}

TEST_CASE("label_track: fresh interior-band noise labels as its band, all 15 classes" *
          doctest::timeout(300)) {
  const FilterBank& bank = fixtures::full_bank();
  const AncScenario sc = default_scenario();
  const LabelerEngine engine(bank, sc);
  for (int cls = 0; cls < 15; ++cls) {
    const auto [lo_i, hi_i] = bank.partition.bands[static_cast<std::size_t>(cls)];
    const double width = static_cast<double>(hi_i - lo_i);
    Rng rng(mix_seed(808, static_cast<std::uint64_t>(cls)));
    const Signal x =
        band_limited_noise(lo_i + 0.2 * width, hi_i - 0.2 * width, kTrackLen, rng);
    INFO("class ", cls);
    CHECK(engine.label(x).label == cls);
  }
}

TEST_CASE("synth_labeled_balanced: every bucket holds its class" * doctest::timeout(600)) {
  const auto ds =
      synth_labeled_balanced(3, TrackOrigin::SyntheticB, 777, fixtures::full_bank(), default_scenario());
  REQUIRE(ds.size() == 45);
  std::vector<int> counts(15, 0);
  for (const auto& t : ds) {
    REQUIRE(t.label.has_value());
    ++counts[static_cast<std::size_t>(*t.label)];
  }
  for (int c : counts) CHECK(c == 3);
}
