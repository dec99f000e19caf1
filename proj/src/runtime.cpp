#include "sfanc/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sfanc/errors.hpp"
#include "sfanc/noise.hpp"
#include "sfanc/parallel.hpp"

namespace sfanc {

namespace fs = std::filesystem;

OracleSelector::OracleSelector(const FilterBank& bank, const AncScenario& scenario)
    : engine_(bank, scenario) {}

int OracleSelector::select(const Signal& frame) { return engine_.label(frame).label; }

SfancRunResult run_sfanc(const Signal& noise, const FilterBank& bank, Selector& selector,
                         const AncScenario& scenario, const SfancConfig& config) {
  if (config.frame_len < 1) throw ParamError("run_sfanc: frame_len must be >= 1");
  if (config.selection_latency_frames != 0 && config.selection_latency_frames != 1)
    throw ParamError("run_sfanc: selection latency must be 0 or 1");
  if (config.initial_filter_index < 0 ||
      config.initial_filter_index >= static_cast<int>(bank.filters.size()))
    throw ParamError("run_sfanc: initial_filter_index out of range");
  const std::size_t frame_len = static_cast<std::size_t>(config.frame_len);
  if (noise.size() < frame_len) throw ParamError("run_sfanc: noise shorter than one frame");

  const std::size_t n_frames = noise.size() / frame_len;

  SfancRunResult out;
  out.run.disturbance = simulate_disturbance(noise, scenario);
  out.run.error_signal.sample_rate = noise.sample_rate;
  out.run.error_signal.samples.resize(noise.size());
  out.selected.reserve(n_frames);

  // Latency 0 consults the selector on the frame being processed, so the
  // whole-frame decisions can be made up front; state still runs sample-wise.
  std::vector<int> decisions(n_frames);
  for (std::size_t k = 0; k < n_frames; ++k) {
    Signal frame;
    frame.sample_rate = noise.sample_rate;
    frame.samples.assign(noise.samples.begin() + static_cast<std::ptrdiff_t>(k * frame_len),
                         noise.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * frame_len));
    decisions[k] = selector.select(frame);
    if (decisions[k] < 0 || decisions[k] >= static_cast<int>(bank.filters.size()))
      throw ParamError("run_sfanc: selector returned an out-of-range index");
  }

  FixedFilterState state(scenario, noise.size());
  int active = config.initial_filter_index;
  for (std::size_t n = 0; n < noise.size(); ++n) {
    const std::size_t k = n / frame_len;
    if (n % frame_len == 0 && k < n_frames) {
      if (config.selection_latency_frames == 0) {
        active = decisions[k];
      } else {
        active = (k == 0) ? config.initial_filter_index : decisions[k - 1];
      }
      out.selected.push_back(active);
    }
    out.run.error_signal.samples[n] =
        state.step(noise.samples.data(), static_cast<std::int64_t>(n),
                   bank.filters[static_cast<std::size_t>(active)], out.run.disturbance.samples[n]);
  }
  out.run.final_weights = bank.filters[static_cast<std::size_t>(active)];
  return out;
}

std::vector<double> nr_per_second(const Signal& d, const Signal& e) {
  if (d.size() != e.size()) throw ParamError("nr_per_second: length mismatch");
  const std::size_t sec = static_cast<std::size_t>(d.sample_rate);
  const std::size_t n_rows = d.size() / sec;
  std::vector<double> rows(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    Signal dw, ew;
    dw.sample_rate = d.sample_rate;
    ew.sample_rate = d.sample_rate;
    dw.samples.assign(d.samples.begin() + static_cast<std::ptrdiff_t>(r * sec),
                      d.samples.begin() + static_cast<std::ptrdiff_t>((r + 1) * sec));
    ew.samples.assign(e.samples.begin() + static_cast<std::ptrdiff_t>(r * sec),
                      e.samples.begin() + static_cast<std::ptrdiff_t>((r + 1) * sec));
    rows[r] = noise_reduction_db(dw, ew);
  }
  return rows;
}

BenchReport run_comparison(const Signal& noise, const FilterBank& bank, Selector& selector,
                           const AncScenario& scenario, const SfancConfig& config) {
  BenchReport rep;
  const SfancRunResult sfanc = run_sfanc(noise, bank, selector, scenario, config);
  rep.disturbance = sfanc.run.disturbance;
  rep.e_sfanc = sfanc.run.error_signal;
  rep.selected = sfanc.selected;
  rep.e_fxlms = run_fxlms(noise, scenario).error_signal;
  rep.e_fxnlms = run_fxnlms(noise, scenario).error_signal;

  const std::vector<double> a = nr_per_second(rep.disturbance, rep.e_sfanc);
  const std::vector<double> b = nr_per_second(rep.disturbance, rep.e_fxlms);
  const std::vector<double> c = nr_per_second(rep.disturbance, rep.e_fxnlms);
  rep.nr_per_second.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) rep.nr_per_second[i] = {a[i], b[i], c[i]};
  return rep;
}

void write_bench_csv(const BenchReport& report, const std::string& dir) {
  fs::create_directories(dir);
  char line[160];
  {
    std::ofstream f(fs::path(dir) / "traces.csv", std::ios::trunc);
    if (!f) throw DataError("write_bench_csv: cannot write traces.csv");
    f << "sample,d,e_sfanc,e_fxlms,e_fxnlms\n";
    for (std::size_t n = 0; n < report.disturbance.size(); ++n) {
      std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g,%.10g\n", n,
                    report.disturbance.samples[n], report.e_sfanc.samples[n],
                    report.e_fxlms.samples[n], report.e_fxnlms.samples[n]);
      f << line;
    }
  }
  {
    std::ofstream f(fs::path(dir) / "nr_per_second.csv", std::ios::trunc);
    if (!f) throw DataError("write_bench_csv: cannot write nr_per_second.csv");
    f << "second,nr_sfanc_db,nr_fxlms_db,nr_fxnlms_db\n";
    for (std::size_t r = 0; r < report.nr_per_second.size(); ++r) {
      std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g\n", r + 1,
                    report.nr_per_second[r][0], report.nr_per_second[r][1],
                    report.nr_per_second[r][2]);
      f << line;
    }
  }
  {
    std::ofstream f(fs::path(dir) / "selections.csv", std::ios::trunc);
    if (!f) throw DataError("write_bench_csv: cannot write selections.csv");
    f << "frame,filter_index\n";
    for (std::size_t k = 0; k < report.selected.size(); ++k) {
      std::snprintf(line, sizeof(line), "%zu,%d\n", k, report.selected[k]);
      f << line;
    }
  }
}

Signal make_aircraft_like_noise(double duration_s, std::uint64_t seed) {
  if (duration_s < 3.0) throw ParamError("make_aircraft_like_noise: duration must be >= 3 s");
  const auto n = static_cast<std::size_t>(duration_s * kPipelineRate);
  Rng rng(seed);

  // Broadband bed.
  Signal bed = band_limited_noise(50.0, 7980.0, static_cast<int>(n), rng);

  // Gliding band emphasis, overlap-added in half-second hops.
  const int hop = kPipelineRate / 4;
  const int win = 2 * hop;
  std::vector<double> emphasis(n, 0.0);
  const int n_hops = static_cast<int>(n) / hop;
  for (int hix = 0; hix < n_hops; ++hix) {
    const double frac = (n_hops > 1) ? static_cast<double>(hix) / (n_hops - 1) : 0.0;
    const double center = 200.0 * std::pow(2500.0 / 200.0, frac);
    const double lo = center / 1.35, hi = std::min(center * 1.35, 7980.0);
    const Signal seg = band_limited_noise(lo, hi, win, rng);
    for (int i = 0; i < win; ++i) {
      const std::size_t at = static_cast<std::size_t>(hix) * hop + static_cast<std::size_t>(i);
      if (at >= n) break;
      const double hann =
          0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (i + 0.5) / win));
      emphasis[at] += hann * seg.samples[static_cast<std::size_t>(i)];
    }
  }

  Signal out;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kPipelineRate;
    const double env = 0.75 + 0.25 * std::sin(2.0 * std::numbers::pi * t / duration_s * 1.5);
    out.samples[i] = env * (0.25 * bed.samples[i] + emphasis[i]);
  }
  double p = 0.0;
  for (double v : out.samples) p += v * v;
  p /= static_cast<double>(n);
  const double s = 0.1 / std::sqrt(p);  // modest level keeps adaptive baselines stable
  for (auto& v : out.samples) v *= s;
  return out;
}

Signal make_composite_noise(double duration_s, double switch_period_s, std::uint64_t seed,
                            const AncScenario& scenario) {
  if (duration_s < switch_period_s) throw ParamError("make_composite_noise: too short");
  const BandPartition partition = default_partition();
  const auto n = static_cast<std::size_t>(duration_s * kPipelineRate);
  const auto seg_len = static_cast<std::size_t>(switch_period_s * kPipelineRate);

  std::vector<int> order(static_cast<std::size_t>(partition.count()));
  for (int i = 0; i < partition.count(); ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }

  Signal out;
  out.samples.resize(n);
  std::size_t at = 0;
  int seg_ix = 0;
  while (at < n) {
    const std::size_t len = std::min(seg_len, n - at);
    const int band = order[static_cast<std::size_t>(seg_ix) % order.size()];
    const auto [lo, hi] = partition.bands[static_cast<std::size_t>(band)];
    Rng seg_rng(mix_seed(seed, static_cast<std::uint64_t>(seg_ix) + 1));
    Signal seg = band_limited_noise(lo, hi, static_cast<int>(len), seg_rng);
    // Same leveling rule as pretraining: filtered-reference power = BW/8000.
    const Signal segf = convolve(seg, scenario.secondary_path_estimate);
    const double target = static_cast<double>(hi - lo) / 8000.0;
    const double pf = power(segf);
    const double s = (pf > 0.0) ? std::sqrt(target / pf) : 1.0;
    for (std::size_t i = 0; i < len; ++i) out.samples[at + i] = s * seg.samples[i];
    at += len;
    ++seg_ix;
  }
  return out;
}

}  // namespace sfanc
