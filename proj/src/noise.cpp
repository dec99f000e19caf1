#include "sfanc/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sfanc/errors.hpp"
#include "sfanc/fft.hpp"
#include "sfanc/parallel.hpp"
#include "sfanc/wav.hpp"

namespace sfanc {

namespace fs = std::filesystem;
using nlohmann::json;

const char* origin_name(TrackOrigin o) {
  switch (o) {
    case TrackOrigin::SyntheticA: return "synthetic-A";
    case TrackOrigin::SyntheticB: return "synthetic-B";
    case TrackOrigin::Recorded: return "recorded";
  }
  return "?";
}

TrackOrigin origin_from_name(const std::string& name) {
  if (name == "synthetic-A") return TrackOrigin::SyntheticA;
  if (name == "synthetic-B") return TrackOrigin::SyntheticB;
  if (name == "recorded") return TrackOrigin::Recorded;
  throw DataError("manifest: unknown origin '" + name + "'");
}

Signal band_limited_noise(double low_hz, double high_hz, int n_samples, Rng& rng) {
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < kPipelineRate / 2.0))
    throw ParamError("band_limited_noise: invalid band");
  if (n_samples < 1) throw ParamError("band_limited_noise: n_samples must be >= 1");

  // Narrow bands need a narrow transition; cap keeps the design bounded.
  const double target_width = std::max(2.0, (high_hz - low_hz) / 4.0);
  int taps = static_cast<int>(std::ceil(4.0 * kPipelineRate / target_width));
  taps = std::min(taps | 1, 32767);
  taps = std::max(taps, 31);
  const FirFilter band = design_bandpass(low_hz, high_hz, taps, kPipelineRate);

  std::vector<double> white(static_cast<std::size_t>(n_samples) + taps - 1);
  for (auto& v : white) v = rng.gaussian();
  const std::vector<double> full = fft_convolve_full(white, band.coefficients);

  Signal out;
  out.samples.assign(full.begin() + (taps - 1), full.begin() + (taps - 1) + n_samples);

  double p = 0.0;
  for (double v : out.samples) p += v * v;
  p /= static_cast<double>(n_samples);
  if (p > 0.0) {
    const double s = 1.0 / std::sqrt(p);
    for (auto& v : out.samples) v *= s;
  }
  return out;
}

namespace {

void peak_normalize(std::vector<double>& x, double amplitude) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return;
  const double s = amplitude / peak;
  for (auto& v : x) v *= s;
}

// Sum of unit-power band components at the given gains, plus a white
// background at snr_db relative to the component mix, peak-normalized.
Signal compose_track(const std::vector<std::array<double, 3>>& bands,  // lo, hi, gain
                     double amplitude, double snr_db, Rng& rng) {
  std::vector<double> mix(kTrackLen, 0.0);
  for (const auto& b : bands) {
    const Signal comp = band_limited_noise(b[0], b[1], kTrackLen, rng);
    for (int i = 0; i < kTrackLen; ++i) mix[static_cast<std::size_t>(i)] += b[2] * comp.samples[static_cast<std::size_t>(i)];
  }
  double p = 0.0;
  for (double v : mix) p += v * v;
  p /= kTrackLen;
  const double sigma_bg = std::sqrt(p * std::pow(10.0, -snr_db / 10.0));
  for (auto& v : mix) v += sigma_bg * rng.gaussian();
  peak_normalize(mix, amplitude);
  Signal out;
  out.samples = std::move(mix);
  return out;
}

struct BandDraw {
  double lo, hi;
};

BandDraw draw_band(Rng& rng) {
  const double lo = rng.log_uniform(20.0, 5500.0);
  const double ratio = std::pow(10.0, rng.uniform(0.05, 0.45));
  double hi = std::min(lo * ratio, 7980.0);
  if (hi - lo < 8.0) hi = lo + 8.0;
  return {lo, hi};
}

}  // namespace

NoiseTrack synth_track(const SynthSpec& spec, TrackOrigin origin) {
  if (!(spec.band_low_hz > 0.0 && spec.band_low_hz < spec.band_high_hz &&
        spec.band_high_hz < kPipelineRate / 2.0))
    throw ParamError("synth_track: invalid band");
  if (!(spec.amplitude > 0.0)) throw ParamError("synth_track: amplitude must be > 0");

  Rng rng(spec.seed);
  NoiseTrack t;
  t.signal = compose_track({{spec.band_low_hz, spec.band_high_hz, 1.0}}, spec.amplitude,
                           spec.background_snr_db, rng);
  t.origin = origin;
  t.seed = spec.seed;
  return t;
}

std::vector<NoiseTrack> synth_dataset(int n, TrackOrigin domain, std::uint64_t seed) {
  if (n < 1) throw ParamError("synth_dataset: n must be >= 1");
  if (domain == TrackOrigin::Recorded) throw ParamError("synth_dataset: domain must be synthetic");

  // Data-parallel over track indices; per-track seeds make parallel and
  // serial generation agree.
  std::vector<NoiseTrack> out(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const std::uint64_t track_seed = mix_seed(seed, i);
      Rng rng(track_seed);
      NoiseTrack t;
      if (domain == TrackOrigin::SyntheticA) {
        const BandDraw b = draw_band(rng);
        const double amplitude = rng.uniform(0.1, 1.0);
        const double snr = rng.uniform(5.0, 30.0);
        t.signal = compose_track({{b.lo, b.hi, 1.0}}, amplitude, snr, rng);
      } else {
        const int k = rng.uniform_int(2, 3);
        std::vector<std::array<double, 3>> bands;
        bands.reserve(static_cast<std::size_t>(k));
        const BandDraw primary = draw_band(rng);
        bands.push_back({primary.lo, primary.hi, 1.0});
        for (int j = 1; j < k; ++j) {
          const BandDraw b = draw_band(rng);
          bands.push_back({b.lo, b.hi, rng.uniform(0.4, 0.9)});
        }
        const double amplitude = rng.uniform(0.1, 1.0);
        const double snr = rng.uniform(5.0, 30.0);
        t.signal = compose_track(bands, amplitude, snr, rng);
      }
      t.origin = domain;
      t.seed = track_seed;
      t.id = static_cast<int>(i);
      out[i] = std::move(t);
    }
  });
  return out;
}

std::vector<Signal> frame_split(const Signal& x, int frame_len) {
  if (frame_len < 1) throw ParamError("frame_split: frame_len must be >= 1");
  std::vector<Signal> frames;
  const std::size_t n_frames = x.size() / static_cast<std::size_t>(frame_len);
  frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    Signal f;
    f.sample_rate = x.sample_rate;
    f.samples.assign(x.samples.begin() + static_cast<std::ptrdiff_t>(i) * frame_len,
                     x.samples.begin() + static_cast<std::ptrdiff_t>(i + 1) * frame_len);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<NoiseTrack> load_wav(const std::string& path) {
  const Signal whole = read_wav_pcm16_mono_16k(path);
  std::vector<NoiseTrack> tracks;
  int idx = 0;
  for (auto& frame : frame_split(whole, kTrackLen)) {
    NoiseTrack t;
    t.signal = std::move(frame);
    t.origin = TrackOrigin::Recorded;
    t.source_file = path;
    t.source_frame = idx;
    t.id = idx;
    ++idx;
    tracks.push_back(std::move(t));
  }
  return tracks;
}

namespace {

std::string seed_hex(std::uint64_t seed) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

json track_record(const NoiseTrack& t, const std::string& file) {
  json rec;
  rec["id"] = t.id;
  rec["origin"] = origin_name(t.origin);
  rec["file"] = file;
  if (t.origin == TrackOrigin::Recorded) {
    rec["source"] = t.source_file;
    rec["frame"] = t.source_frame;
  } else {
    rec["seed"] = seed_hex(t.seed);
  }
  if (t.label) rec["label"] = *t.label;
  if (!t.nr_db.empty()) rec["nr_db"] = t.nr_db;
  return rec;
}

std::string track_file_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tracks/trk_%06d.wav", id);
  return buf;
}

}  // namespace

void save_dataset(const std::vector<NoiseTrack>& tracks, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "tracks");
  std::ofstream mf(fs::path(dir) / "manifest.jsonl", std::ios::trunc);
  if (!mf) throw DataError("save_dataset: cannot write manifest in " + dir);
  int next_id = 0;
  for (const auto& t : tracks) {
    const int id = (t.id >= 0) ? t.id : next_id;
    next_id = id + 1;
    const std::string rel = track_file_name(id);
    write_wav_pcm16((fs::path(dir) / rel).string(), t.signal);
    NoiseTrack tmp = t;
    tmp.id = id;
    mf << track_record(tmp, rel).dump() << '\n';
  }
}

void save_manifest(const std::vector<NoiseTrack>& tracks, const std::string& manifest_path) {
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw DataError("save_manifest: cannot write " + manifest_path);
  for (const auto& t : tracks) {
    mf << track_record(t, track_file_name(t.id)).dump() << '\n';
  }
}

std::vector<NoiseTrack> load_dataset(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("load_dataset: cannot open " + manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  std::vector<NoiseTrack> tracks;
  std::string line;
  int line_no = 0;
  while (std::getline(mf, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("load_dataset: bad JSON at line " + std::to_string(line_no) + ": " + e.what());
    }
    NoiseTrack t;
    t.id = rec.at("id").get<int>();
    t.origin = origin_from_name(rec.at("origin").get<std::string>());
    if (rec.contains("seed")) t.seed = std::stoull(rec["seed"].get<std::string>(), nullptr, 16);
    if (rec.contains("source")) t.source_file = rec["source"].get<std::string>();
    if (rec.contains("frame")) t.source_frame = rec["frame"].get<int>();
    if (rec.contains("label")) t.label = rec["label"].get<int>();
    if (rec.contains("nr_db")) t.nr_db = rec["nr_db"].get<std::vector<double>>();
    const std::string file = rec.at("file").get<std::string>();
    t.signal = read_wav_pcm16_mono_16k((base / file).string());
    if (t.signal.size() != kTrackLen)
      throw DataError("load_dataset: track " + std::to_string(t.id) + " is not 16000 samples");
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace sfanc
