#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sfanc/anc.hpp"

namespace sfanc {

// 15 contiguous frequency bands covering [20, 7980] Hz.
struct BandPartition {
  std::vector<std::pair<int, int>> bands;  // (low_hz, high_hz), ordered

  int count() const { return static_cast<int>(bands.size()); }
};

/// Edges logarithmically spaced from 20 Hz to 7980 Hz, rounded to 1 Hz:
/// edge_k = 20 * (7980/20)^(k/15), k = 0..15. Adjacent bands share edges.
BandPartition default_partition();

struct FilterBank {
  std::vector<FirFilter> filters;  // one control filter per band, equal taps
  BandPartition partition;
  int sample_rate = kPipelineRate;
  std::uint64_t scenario_fingerprint = 0;
};

/// FNV-1a over the scenario's canonical serialization (rate, step size,
/// control length, all three path coefficient vectors).
std::uint64_t scenario_fingerprint(const AncScenario& scenario);

/// Pre-trains one control filter per band: 10 s of stationary in-band noise
/// through FxLMS from zero weights. Each band's noise level is set so the
/// filtered-reference power equals bandwidth/8000, which gives every band the
/// same convergence rate and stability margin at the default step size.
/// Deterministic in seed; bands run in parallel and are assembled in order.
FilterBank pretrain_bank(const BandPartition& partition, const AncScenario& scenario,
                         std::uint64_t seed);

/// Versioned bank file: one JSON header line, one base64 line of little-endian
/// float64 coefficients. Round-trips exactly.
void save_bank(const FilterBank& bank, const std::string& path);
FilterBank load_bank(const std::string& path);

inline constexpr double kPretrainSeconds = 10.0;

}  // namespace sfanc
