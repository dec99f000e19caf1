#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfanc/rng.hpp"
#include "sfanc/signal.hpp"

namespace sfanc {

inline constexpr int kTrackLen = 16000;  // 1 second at the pipeline rate
inline constexpr int kNumClasses = 15;

enum class TrackOrigin { SyntheticA, SyntheticB, Recorded };

const char* origin_name(TrackOrigin o);
TrackOrigin origin_from_name(const std::string& name);

// One 1-second noise track plus bookkeeping for the dataset manifest.
struct NoiseTrack {
  Signal signal;                 // exactly 16,000 samples at 16 kHz
  std::optional<int> label;      // best-filter index, once labeled
  TrackOrigin origin = TrackOrigin::SyntheticA;
  std::uint64_t seed = 0;        // synthetic tracks
  std::string source_file;       // recorded tracks
  int source_frame = -1;
  std::vector<double> nr_db;     // per-filter NR, filled by the labeler
  int id = -1;
};

struct SynthSpec {
  double band_low_hz = 20.0;
  double band_high_hz = 7980.0;
  double amplitude = 1.0;        // peak of the finished track
  double background_snr_db = 20.0;
  std::uint64_t seed = 0;
};

/// Unit-power stationary band-limited noise, steady state (the filter's
/// warm-up transient is discarded). Tap count adapts to the band so that the
/// transition width is at most max(2 Hz, bandwidth/4).
Signal band_limited_noise(double low_hz, double high_hz, int n_samples, Rng& rng);

/// Band-passed white noise plus a white background at the requested SNR,
/// peak-normalized to spec.amplitude. Deterministic in spec.seed.
NoiseTrack synth_track(const SynthSpec& spec, TrackOrigin origin = TrackOrigin::SyntheticA);

/// n random tracks. Domain A draws a single band per track; domain B
/// superimposes 2-3 bands with random relative levels (a stand-in "real"
/// distribution). Per-track seeds are derived with mix_seed, so generation
/// order does not matter.
std::vector<NoiseTrack> synth_dataset(int n, TrackOrigin domain, std::uint64_t seed);

/// Splits a 16-bit mono 16 kHz PCM WAV file into 1-second tracks.
/// The trailing partial frame is discarded.
std::vector<NoiseTrack> load_wav(const std::string& path);

/// Consecutive non-overlapping frames; partial tail discarded.
std::vector<Signal> frame_split(const Signal& x, int frame_len);

// --- dataset manifest (JSON lines) -----------------------------------------

/// Writes tracks/<id>.wav files plus manifest.jsonl into dir.
void save_dataset(const std::vector<NoiseTrack>& tracks, const std::string& dir);

/// Writes only the manifest (records point at existing track files).
void save_manifest(const std::vector<NoiseTrack>& tracks, const std::string& manifest_path);

/// Reads a manifest and loads every referenced track file.
std::vector<NoiseTrack> load_dataset(const std::string& manifest_path);

}  // namespace sfanc
