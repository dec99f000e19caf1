#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sfanc/cnn.hpp"
#include "sfanc/filter_bank.hpp"
#include "sfanc/labeler.hpp"

namespace sfanc {

struct SfancConfig {
  int frame_len = kTrackLen;
  int selection_latency_frames = 0;  // 0: decide from the current frame; 1: previous frame
  int initial_filter_index = 0;      // used by frame 0 under latency 1
};

// Picks a control-filter index for one noise frame.
class Selector {
 public:
  virtual ~Selector() = default;
  virtual int select(const Signal& frame) = 0;
  virtual const char* name() const = 0;
};

// Exhaustive best-filter search; the performance upper bound.
class OracleSelector : public Selector {
 public:
  OracleSelector(const FilterBank& bank, const AncScenario& scenario);
  int select(const Signal& frame) override;
  const char* name() const override { return "oracle"; }

 private:
  LabelerEngine engine_;
};

class CnnSelector : public Selector {
 public:
  explicit CnnSelector(const CnnModel& model) : model_(&model) {}
  int select(const Signal& frame) override { return model_->predict_index(frame); }
  const char* name() const override { return "cnn"; }

 private:
  const CnnModel* model_;
};

class ConstantSelector : public Selector {
 public:
  explicit ConstantSelector(int index) : index_(index) {}
  int select(const Signal&) override { return index_; }
  const char* name() const override { return "constant"; }

 private:
  int index_;
};

struct SfancRunResult {
  AncRunResult run;
  std::vector<int> selected;  // filter index per frame
};

/// Frame-wise selective fixed-filter control. Convolution history carries
/// across frame boundaries, so switching filters never resets state. Samples
/// past the last whole frame are processed with the last selected filter.
SfancRunResult run_sfanc(const Signal& noise, const FilterBank& bank, Selector& selector,
                         const AncScenario& scenario, const SfancConfig& config);

struct BenchReport {
  Signal disturbance;
  Signal e_sfanc, e_fxlms, e_fxnlms;
  std::vector<int> selected;
  // rows = whole seconds; columns = sfanc, fxlms, fxnlms
  std::vector<std::array<double, 3>> nr_per_second;
};

/// Runs SFANC, FxLMS, and FxNLMS (both adaptive runs from zero weights at the
/// scenario's step size) on the identical noise and paths.
BenchReport run_comparison(const Signal& noise, const FilterBank& bank, Selector& selector,
                           const AncScenario& scenario, const SfancConfig& config);

/// Writes traces.csv (sample,d,e_sfanc,e_fxlms,e_fxnlms), nr_per_second.csv,
/// and selections.csv into dir.
void write_bench_csv(const BenchReport& report, const std::string& dir);

/// Non-stationary out-of-distribution test signal: a band emphasis gliding
/// log-linearly from 200 Hz to 2500 Hz over a broadband 50-7980 Hz bed, with
/// a slow amplitude envelope. Deterministic in seed. duration >= 3 s.
Signal make_aircraft_like_noise(double duration_s, std::uint64_t seed);

/// Piecewise-stationary noise that switches partition bands every
/// switch_period_s seconds; band order is a seeded shuffle. Segment levels
/// follow the pretraining rule so the adaptive baselines stay stable.
Signal make_composite_noise(double duration_s, double switch_period_s, std::uint64_t seed,
                            const AncScenario& scenario);

/// Per-second NR table for one error signal against its disturbance.
std::vector<double> nr_per_second(const Signal& d, const Signal& e);

}  // namespace sfanc
