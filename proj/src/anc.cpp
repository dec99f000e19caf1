#include "sfanc/anc.hpp"

#include <cmath>

#include "sfanc/errors.hpp"

namespace sfanc {

AncScenario default_scenario() {
  AncScenario sc;
  sc.primary_path = design_bandpass(20.0, 7980.0, 511, kPipelineRate);
  sc.secondary_path = design_bandpass(20.0, 7980.0, 255, kPipelineRate);
  sc.secondary_path_estimate = sc.secondary_path;
  sc.step_size = 1e-4;
  sc.control_length = 1024;
  return sc;
}

Signal simulate_disturbance(const Signal& x, const AncScenario& scenario) {
  return convolve(x, scenario.primary_path);
}

FixedFilterState::FixedFilterState(const AncScenario& scenario, std::size_t total_len)
    : secondary_(&scenario.secondary_path) {
  y_.assign(total_len, 0.0);
}

double FixedFilterState::step(const double* x, std::int64_t n, const FirFilter& w, double d) {
  y_[static_cast<std::size_t>(n)] = causal_dot(x, n, w.coefficients.data(), w.taps());
  const double a = causal_dot(y_.data(), n, secondary_->coefficients.data(), secondary_->taps());
  return d - a;
}

AncRunResult run_fixed(const Signal& x, const FirFilter& w, const AncScenario& scenario) {
  if (x.samples.empty()) throw ParamError("run_fixed: empty signal");
  AncRunResult r;
  r.disturbance = simulate_disturbance(x, scenario);
  r.final_weights = w;
  r.error_signal.sample_rate = x.sample_rate;
  r.error_signal.samples.resize(x.size());
  FixedFilterState state(scenario, x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    r.error_signal.samples[n] =
        state.step(x.samples.data(), static_cast<std::int64_t>(n), w, r.disturbance.samples[n]);
  }
  return r;
}

namespace {

AncRunResult run_adaptive(const Signal& x, const AncScenario& scenario,
                          const std::optional<FirFilter>& w0, bool normalized,
                          const char* name) {
  if (x.samples.empty()) throw ParamError(std::string(name) + ": empty signal");
  const int L = scenario.control_length;
  if (L < 1) throw ParamError(std::string(name) + ": control_length must be >= 1");
  if (w0 && w0->taps() != L)
    throw ParamError(std::string(name) + ": w0 length must equal control_length");

  AncRunResult r;
  r.disturbance = simulate_disturbance(x, scenario);
  const Signal xf = convolve(x, scenario.secondary_path_estimate);  // x'(n)

  std::vector<double> w(static_cast<std::size_t>(L), 0.0);
  if (w0) w = w0->coefficients;

  const std::size_t n_samples = x.size();
  r.error_signal.sample_rate = x.sample_rate;
  r.error_signal.samples.resize(n_samples);

  const double* xs = x.samples.data();
  const double* ds = r.disturbance.samples.data();
  const double* xps = xf.samples.data();
  const double* ss = scenario.secondary_path.coefficients.data();
  const int s_taps = scenario.secondary_path.taps();
  const double mu = scenario.step_size;

  std::vector<double> y(n_samples, 0.0);

  for (std::size_t n = 0; n < n_samples; ++n) {
    const auto ni = static_cast<std::int64_t>(n);
    y[n] = causal_dot(xs, ni, w.data(), L);
    const double a = causal_dot(y.data(), ni, ss, s_taps);
    const double e = ds[n] - a;
    r.error_signal.samples[n] = e;

    if (!std::isfinite(e) || std::abs(e) > kDivergenceErrorLimit)
      throw DivergenceError(std::string(name) + ": error signal diverged", ni);

    if (mu != 0.0) {
      double g = mu * e;
      if (normalized) {
        const int kmax = static_cast<int>(std::min<std::int64_t>(ni, L - 1));
        double norm = 0.0;
        for (int k = 0; k <= kmax; ++k) norm += xps[n - k] * xps[n - k];
        g /= norm + kFxnlmsDelta;
      }
      const int kmax = static_cast<int>(std::min<std::int64_t>(ni, L - 1));
      for (int k = 0; k <= kmax; ++k) w[static_cast<std::size_t>(k)] += g * xps[n - k];
    }
  }

  for (int k = 0; k < L; ++k) {
    if (!std::isfinite(w[static_cast<std::size_t>(k)]))
      throw DivergenceError(std::string(name) + ": non-finite weight",
                            static_cast<std::int64_t>(n_samples) - 1);
  }

  r.final_weights.coefficients = std::move(w);
  return r;
}

}  // namespace

AncRunResult run_fxlms(const Signal& x, const AncScenario& scenario,
                       const std::optional<FirFilter>& w0) {
  return run_adaptive(x, scenario, w0, false, "run_fxlms");
}

AncRunResult run_fxnlms(const Signal& x, const AncScenario& scenario,
                        const std::optional<FirFilter>& w0) {
  return run_adaptive(x, scenario, w0, true, "run_fxnlms");
}

}  // namespace sfanc
