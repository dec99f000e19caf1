#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sfanc/errors.hpp"
#include "sfanc/labeler.hpp"
#include "sfanc/noise.hpp"
#include "sfanc/wav.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sfanc;
namespace fs = std::filesystem;

TEST_CASE("synth_track: length, determinism, validation") {
  SynthSpec spec{100.0, 200.0, 0.8, 30.0, 99};
  const NoiseTrack a = synth_track(spec);
  const NoiseTrack b = synth_track(spec);
  CHECK(a.signal.size() == 16000);
  CHECK(a.signal.sample_rate == 16000);
  CHECK(a.signal.samples == b.signal.samples);

  spec.seed = 100;
  const NoiseTrack c = synth_track(spec);
  CHECK(c.signal.samples != a.signal.samples);

  SynthSpec bad = spec;
  bad.band_low_hz = 300.0;
  bad.band_high_hz = 200.0;
  CHECK_THROWS_AS(synth_track(bad), ParamError);
}

TEST_CASE("synth_track: narrow band stays spectrally confined") {
  const NoiseTrack t = synth_track(SynthSpec{100.0, 200.0, 1.0, 30.0, 7});
  CHECK(oracles::band_energy_fraction(t.signal.samples, 50.0, 400.0, 16000.0) >= 0.8);
}

TEST_CASE("synth_track: peak amplitude honors the headroom bound") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(mix_seed(500, seed));
    SynthSpec spec{rng.log_uniform(20.0, 4000.0), 0.0, rng.uniform(0.1, 1.0), rng.uniform(5.0, 30.0), seed};
    spec.band_high_hz = std::min(spec.band_low_hz * 3.0, 7980.0);
    const NoiseTrack t = synth_track(spec);
    double peak = 0.0;
    for (double v : t.signal.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.5);
    CHECK(peak == doctest::Approx(spec.amplitude).epsilon(1e-9));
  }
}

TEST_CASE("synth_dataset: sizes, determinism, domain shift") {
  const auto a1 = synth_dataset(20, TrackOrigin::SyntheticA, 3);
  const auto a2 = synth_dataset(20, TrackOrigin::SyntheticA, 3);
  const auto b1 = synth_dataset(20, TrackOrigin::SyntheticB, 3);
  REQUIRE(a1.size() == 20);
  for (const auto& t : a1) CHECK(t.signal.size() == 16000);
  for (std::size_t i = 0; i < 20; ++i) CHECK(a1[i].signal.samples == a2[i].signal.samples);
  CHECK(a1[0].signal.samples != b1[0].signal.samples);
  CHECK(b1[0].origin == TrackOrigin::SyntheticB);
  CHECK_THROWS_AS(synth_dataset(0, TrackOrigin::SyntheticA, 1), ParamError);
}

TEST_CASE("frame_split: whole frames only") {
  Signal x;
  x.samples.assign(16000 * 4 + 123, 0.5);
  CHECK(frame_split(x, 16000).size() == 4);
  x.samples.assign(16000, 0.25);
  const auto one = frame_split(x, 16000);
  REQUIRE(one.size() == 1);
  CHECK(one[0].samples == x.samples);
  x.samples.assign(15999, 0.0);
  CHECK(frame_split(x, 16000).empty());
  CHECK_THROWS_AS(frame_split(x, 0), ParamError);
}

TEST_CASE("frame_split: concatenating frames reproduces the input prefix") {
  Rng rng(8);
  Signal x;
  x.samples.resize(3217);
  for (auto& v : x.samples) v = rng.uniform(-1, 1);
  const auto frames = frame_split(x, 1000);
  REQUIRE(frames.size() == 3);
  std::size_t at = 0;
  for (const auto& f : frames)
    for (double v : f.samples) CHECK(v == x.samples[at++]);
}

TEST_CASE("load_wav: framing and strict format checks") {
  const fs::path dir = fs::temp_directory_path() / "sfanc_wav_test";
  fs::create_directories(dir);

  SUBCASE("3.5 seconds gives 3 tracks") {
    Rng rng(9);
    Signal x;
    x.samples.resize(16000 * 3 + 8000);
    for (auto& v : x.samples) v = rng.uniform(-0.9, 0.9);
    const std::string p = (dir / "a.wav").string();
    write_wav_pcm16(p, x);
    const auto tracks = load_wav(p);
    REQUIRE(tracks.size() == 3);
    for (const auto& t : tracks) {
      CHECK(t.signal.size() == 16000);
      CHECK(t.origin == TrackOrigin::Recorded);
    }
    // scaling convention: int16 / 32768
    CHECK(std::abs(tracks[0].signal.samples[0] - x.samples[0]) <= 1.0 / 32768.0);
  }

  SUBCASE("all-zero 1 s file -> one track of zeros") {
    Signal x;
    x.samples.assign(16000, 0.0);
    const std::string p = (dir / "z.wav").string();
    write_wav_pcm16(p, x);
    const auto tracks = load_wav(p);
    REQUIRE(tracks.size() == 1);
    for (double v : tracks[0].signal.samples) CHECK(v == 0.0);
  }

  SUBCASE("wrong sample rate is rejected by name") {
    Signal x;
    x.sample_rate = 44100;
    x.samples.assign(1000, 0.0);
    const std::string p = (dir / "sr.wav").string();
    write_wav_pcm16(p, x);
    try {
      load_wav(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("sample rate") != std::string::npos);
      CHECK(std::string(e.what()).find("44100") != std::string::npos);
    }
  }

  SUBCASE("stereo is rejected by name") {
    // hand-build a stereo header
    Signal x;
    x.samples.assign(1000, 0.0);
    const std::string p = (dir / "st.wav").string();
    write_wav_pcm16(p, x);
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(22);
    const char two[2] = {2, 0};
    f.write(two, 2);
    f.close();
    try {
      load_wav(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("channel") != std::string::npos);
    }
  }

  SUBCASE("not a wav at all") {
    const std::string p = (dir / "junk.wav").string();
    std::ofstream f(p, std::ios::trunc);
    f << "definitely not RIFF";
    f.close();
    CHECK_THROWS_AS(load_wav(p), DataError);
  }
}

TEST_CASE("dataset save/load round-trip through manifest and WAVs") {
  const fs::path dir = fs::temp_directory_path() / "sfanc_ds_test";
  fs::remove_all(dir);
  auto tracks = synth_dataset(5, TrackOrigin::SyntheticB, 17);
  tracks[2].label = 7;
  tracks[2].nr_db.assign(15, 1.5);
  save_dataset(tracks, dir.string());
  const auto loaded = load_dataset((dir / "manifest.jsonl").string());
  REQUIRE(loaded.size() == 5);
  CHECK(loaded[2].label == 7);
  CHECK(loaded[2].nr_db.size() == 15);
  CHECK(loaded[0].origin == TrackOrigin::SyntheticB);
  CHECK(loaded[0].seed == tracks[0].seed);
  // samples survive the PCM16 quantization to within half an LSB
  for (std::size_t i = 0; i < 16000; ++i)
    CHECK(std::abs(loaded[0].signal.samples[i] - tracks[0].signal.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("synth_dataset: labeled class coverage at n=1500" * doctest::timeout(600)) {
  auto tracks = synth_dataset(1500, TrackOrigin::SyntheticA, 12345);
  const LabelStats stats = label_dataset(tracks, fixtures::full_bank(), default_scenario());
  CHECK(stats.failures.empty());
  int total = 0;
  for (int c : stats.histogram) total += c;
  CHECK(total == 1500);
  for (int cls = 0; cls < 15; ++cls) {
    INFO("class ", cls, " count ", stats.histogram[static_cast<std::size_t>(cls)]);
    CHECK(stats.histogram[static_cast<std::size_t>(cls)] >= 15);  // >= 1% of 1500
  }
}
