#pragma once

#include <optional>

#include "sfanc/signal.hpp"

namespace sfanc {

// Everything needed to run one single-channel ANC simulation.
struct AncScenario {
  FirFilter primary_path;             // P(z)
  FirFilter secondary_path;           // S(z)
  FirFilter secondary_path_estimate;  // S^(z); equals S by default
  double step_size = 1e-4;
  int control_length = 1024;
};

// Band-pass 20-7980 Hz paths, mu = 1e-4, L = 1024. The primary path is
// longer than the secondary path so the optimal control filter carries a
// positive (realizable) delay of 128 samples.
AncScenario default_scenario();

struct AncRunResult {
  Signal error_signal;     // e(n)
  FirFilter final_weights; // w after the last sample
  Signal disturbance;      // d(n)
};

/// d = convolve(x, primary_path).
Signal simulate_disturbance(const Signal& x, const AncScenario& scenario);

/// Fixed-filter control: y = x*w, a = y*S, e = d - a. Weights unchanged.
AncRunResult run_fixed(const Signal& x, const FirFilter& w, const AncScenario& scenario);

/// FxLMS: x' = x*S^, w(n+1) = w(n) + mu * e(n) * x'(n) over the last L
/// filtered-reference samples. Zero initial weights unless w0 is given.
AncRunResult run_fxlms(const Signal& x, const AncScenario& scenario,
                       const std::optional<FirFilter>& w0 = std::nullopt);

/// FxNLMS: normalized update w(n+1) = w(n) + mu * e(n) * x'(n) / (x'(n)^T x'(n) + delta).
AncRunResult run_fxnlms(const Signal& x, const AncScenario& scenario,
                        const std::optional<FirFilter>& w0 = std::nullopt);

inline constexpr double kFxnlmsDelta = 1e-6;
inline constexpr double kDivergenceErrorLimit = 1e6;

// Incremental fixed-filter engine used by the frame-wise controller: keeps
// the x/y convolution history so the control filter can change between
// frames without resetting state.
class FixedFilterState {
 public:
  FixedFilterState(const AncScenario& scenario, std::size_t total_len);

  // Processes x[n] with control filter w; returns the error sample.
  // d must be the precomputed disturbance at n.
  double step(const double* x, std::int64_t n, const FirFilter& w, double d);

 private:
  const FirFilter* secondary_;
  std::vector<double> y_;
  std::int64_t pos_ = 0;
};

}  // namespace sfanc
