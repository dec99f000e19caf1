#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sfanc/filter_bank.hpp"
#include "sfanc/noise.hpp"

namespace sfanc {

struct LabelReport {
  int label = 0;                       // argmin residual power, lowest index on ties
  std::vector<double> residual_powers; // mean-square error per filter
  std::vector<double> nr_db;           // NR per filter
};

// Labels tracks by running every control filter over the disturbance and
// taking the argmin of residual power. The per-filter work is done in the
// frequency domain with spectra cached per (bank, scenario): e_i = x*P - x*(w_i*S),
// which matches the fixed-filter simulation exactly up to FP rounding
// (convolution is associative and causal truncation commutes with it).
class LabelerEngine {
 public:
  LabelerEngine(const FilterBank& bank, const AncScenario& scenario);

  LabelReport label(const Signal& track) const;
  int filter_count() const { return static_cast<int>(cascades_.size()); }

 private:
  std::size_t fft_len_;
  std::vector<std::complex<double>> primary_spec_;
  std::vector<std::vector<std::complex<double>>> cascades_;  // FFT of w_i * S
};

/// One-shot labeling. The bank fingerprint must match the scenario.
LabelReport label_track(const NoiseTrack& track, const FilterBank& bank,
                        const AncScenario& scenario);

struct LabelStats {
  std::vector<int> histogram;                        // counts per class
  std::vector<std::pair<int, std::string>> failures; // (track id, message)
};

/// Labels every track in place; per-track failures are collected instead of
/// aborting the batch. Data-parallel, assembled in input order.
LabelStats label_dataset(std::vector<NoiseTrack>& tracks, const FilterBank& bank,
                         const AncScenario& scenario);

/// Stratified dataset builder: draws domain tracks whose dominant band sits
/// inside a target partition band, labels them with the oracle, and keeps
/// them bucketed by oracle label until every class holds per_class tracks.
/// Deterministic in seed.
std::vector<NoiseTrack> synth_labeled_balanced(int per_class, TrackOrigin domain,
                                               std::uint64_t seed, const FilterBank& bank,
                                               const AncScenario& scenario);

}  // namespace sfanc
