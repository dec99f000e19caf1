#include "sfanc/labeler.hpp"

#include <cmath>

#include "sfanc/errors.hpp"
#include "sfanc/fft.hpp"
#include "sfanc/parallel.hpp"

namespace sfanc {

namespace {

std::vector<std::complex<double>> spectrum(const std::vector<double>& h, std::size_t n) {
  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i];
  fft_inplace(out, false);
  return out;
}

}  // namespace

LabelerEngine::LabelerEngine(const FilterBank& bank, const AncScenario& scenario) {
  if (bank.filters.empty()) throw ParamError("labeler: empty bank");
  if (bank.scenario_fingerprint != scenario_fingerprint(scenario))
    throw ParamError("labeler: bank fingerprint does not match the scenario (configuration error)");

  const int w_taps = bank.filters.front().taps();
  const int s_taps = scenario.secondary_path.taps();
  const int p_taps = scenario.primary_path.taps();
  const std::size_t longest = static_cast<std::size_t>(std::max(w_taps + s_taps - 1, p_taps));
  fft_len_ = next_pow2(static_cast<std::size_t>(kTrackLen) + longest - 1);

  primary_spec_ = spectrum(scenario.primary_path.coefficients, fft_len_);
  cascades_.reserve(bank.filters.size());
  for (const auto& w : bank.filters) {
    const std::vector<double> cascade = fft_convolve_full(w.coefficients, scenario.secondary_path.coefficients);
    cascades_.push_back(spectrum(cascade, fft_len_));
  }
}

LabelReport LabelerEngine::label(const Signal& track) const {
  if (track.size() != kTrackLen) throw ParamError("labeler: track must be 16000 samples");

  std::vector<std::complex<double>> x(fft_len_);
  for (std::size_t i = 0; i < track.size(); ++i) x[i] = track.samples[i];
  fft_inplace(x, false);

  // disturbance power
  std::vector<std::complex<double>> scratch(fft_len_);
  for (std::size_t i = 0; i < fft_len_; ++i) scratch[i] = x[i] * primary_spec_[i];
  fft_inplace(scratch, true);
  double pd = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(kTrackLen); ++i)
    pd += scratch[i].real() * scratch[i].real();
  pd /= kTrackLen;

  LabelReport rep;
  const auto n_filters = cascades_.size();
  rep.residual_powers.resize(n_filters);
  rep.nr_db.resize(n_filters);

  for (std::size_t fi = 0; fi < n_filters; ++fi) {
    for (std::size_t i = 0; i < fft_len_; ++i)
      scratch[i] = x[i] * (primary_spec_[i] - cascades_[fi][i]);
    fft_inplace(scratch, true);
    double pe = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(kTrackLen); ++i)
      pe += scratch[i].real() * scratch[i].real();
    rep.residual_powers[fi] = pe / kTrackLen;
  }

  rep.label = 0;
  for (std::size_t fi = 1; fi < n_filters; ++fi)
    if (rep.residual_powers[fi] < rep.residual_powers[static_cast<std::size_t>(rep.label)])
      rep.label = static_cast<int>(fi);

  for (std::size_t fi = 0; fi < n_filters; ++fi) {
    if (pd <= 0.0) {
      rep.nr_db[fi] = 0.0;  // silent track: no reduction measurable
    } else if (rep.residual_powers[fi] == 0.0) {
      rep.nr_db[fi] = 120.0;
    } else {
      rep.nr_db[fi] = 10.0 * std::log10(pd / rep.residual_powers[fi]);
    }
  }
  return rep;
}

LabelReport label_track(const NoiseTrack& track, const FilterBank& bank,
                        const AncScenario& scenario) {
  return LabelerEngine(bank, scenario).label(track.signal);
}

LabelStats label_dataset(std::vector<NoiseTrack>& tracks, const FilterBank& bank,
                         const AncScenario& scenario) {
  const LabelerEngine engine(bank, scenario);
  LabelStats stats;
  stats.histogram.assign(static_cast<std::size_t>(engine.filter_count()), 0);

  std::vector<std::string> errors(tracks.size());
  parallel_for(tracks.size(), [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      try {
        const LabelReport rep = engine.label(tracks[i].signal);
        tracks[i].label = rep.label;
        tracks[i].nr_db = rep.nr_db;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  });

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!errors[i].empty()) {
      stats.failures.emplace_back(tracks[i].id, errors[i]);
    } else if (tracks[i].label) {
      ++stats.histogram[static_cast<std::size_t>(*tracks[i].label)];
    }
  }
  return stats;
}

namespace {

// Draws a sub-band well inside partition band `cls` (10% edge margins),
// keeping generated tracks cleanly attributable to one class.
std::pair<double, double> interior_band(const BandPartition& partition, int cls, Rng& rng) {
  const auto [lo_i, hi_i] = partition.bands[static_cast<std::size_t>(cls)];
  const double lo = lo_i, hi = hi_i, width = hi - lo;
  const double a = lo + width * rng.uniform(0.10, 0.40);
  const double b = lo + width * rng.uniform(0.60, 0.90);
  return {a, std::max(b, a + std::min(4.0, width * 0.2))};
}

}  // namespace

std::vector<NoiseTrack> synth_labeled_balanced(int per_class, TrackOrigin domain,
                                               std::uint64_t seed, const FilterBank& bank,
                                               const AncScenario& scenario) {
  if (per_class < 1) throw ParamError("synth_labeled_balanced: per_class must be >= 1");
  const LabelerEngine engine(bank, scenario);
  const BandPartition& partition = bank.partition;

  std::vector<std::vector<NoiseTrack>> buckets(kNumClasses);
  const int max_attempts_per_slot = 64;

  // Candidate generation is parallel in waves; bucket assembly stays in
  // deterministic (class, slot, attempt) order.
  for (int cls = 0; cls < kNumClasses; ++cls) {
    int filled = 0;
    int attempt = 0;
    while (filled < per_class) {
      if (attempt >= max_attempts_per_slot * per_class)
        throw DataError("synth_labeled_balanced: class " + std::to_string(cls) +
                        " not reachable with this bank");
      const int wave = std::min(per_class - filled + 4, 64);
      std::vector<NoiseTrack> cand(static_cast<std::size_t>(wave));
      std::vector<int> got(static_cast<std::size_t>(wave), -1);
      const int attempt_base = attempt;
      parallel_for(static_cast<std::size_t>(wave), [&](std::size_t a0, std::size_t a1) {
        for (std::size_t a = a0; a < a1; ++a) {
          const std::uint64_t track_seed =
              mix_seed(seed, (static_cast<std::uint64_t>(cls) << 32) +
                                 static_cast<std::uint64_t>(attempt_base + static_cast<int>(a)));
          Rng rng(track_seed);
          NoiseTrack t;
          const auto [plo, phi] = interior_band(partition, cls, rng);
          if (domain == TrackOrigin::SyntheticA) {
            SynthSpec spec{plo, phi, rng.uniform(0.1, 1.0), rng.uniform(5.0, 30.0), rng.next_u64()};
            t = synth_track(spec, domain);
          } else {
            // 1-2 distractor bands in other classes, loud enough that the
            // mixture is only resolvable by ranking the bands.
            const int n_extra = rng.uniform_int(1, 2);
            std::vector<std::array<double, 3>> bands{{plo, phi, 1.0}};
            for (int j = 0; j < n_extra; ++j) {
              int other = rng.uniform_int(0, kNumClasses - 1);
              if (other == cls) other = (other + 1) % kNumClasses;
              Rng sub(rng.next_u64());
              const auto [dlo, dhi] = interior_band(partition, other, sub);
              bands.push_back({dlo, dhi, rng.uniform(0.4, 0.9)});
            }
            const double amplitude = rng.uniform(0.1, 1.0);
            const double snr = rng.uniform(5.0, 30.0);
            Rng gen(rng.next_u64());
            std::vector<double> mix(kTrackLen, 0.0);
            for (const auto& b : bands) {
              const Signal comp = band_limited_noise(b[0], b[1], kTrackLen, gen);
              for (int i = 0; i < kTrackLen; ++i) mix[static_cast<std::size_t>(i)] += b[2] * comp.samples[static_cast<std::size_t>(i)];
            }
            double p = 0.0;
            for (double v : mix) p += v * v;
            p /= kTrackLen;
            const double sigma = std::sqrt(p * std::pow(10.0, -snr / 10.0));
            for (auto& v : mix) v += sigma * gen.gaussian();
            double peak = 0.0;
            for (double v : mix) peak = std::max(peak, std::abs(v));
            if (peak > 0.0)
              for (auto& v : mix) v *= amplitude / peak;
            t.signal.samples = std::move(mix);
            t.origin = domain;
          }
          t.seed = track_seed;
          const LabelReport rep = engine.label(t.signal);
          t.label = rep.label;
          t.nr_db = rep.nr_db;
          cand[a] = std::move(t);
          got[a] = rep.label;
        }
      });
      for (int a = 0; a < wave && filled < per_class; ++a) {
        if (got[static_cast<std::size_t>(a)] == cls) {
          buckets[static_cast<std::size_t>(cls)].push_back(std::move(cand[static_cast<std::size_t>(a)]));
          ++filled;
        }
      }
      attempt += wave;
    }
  }

  std::vector<NoiseTrack> out;
  out.reserve(static_cast<std::size_t>(per_class) * kNumClasses);
  int id = 0;
  for (auto& bucket : buckets)
    for (auto& t : bucket) {
      t.id = id++;
      out.push_back(std::move(t));
    }
  return out;
}

}  // namespace sfanc
