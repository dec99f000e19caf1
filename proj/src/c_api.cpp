#include "sfanc/sfanc.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sfanc/anc.hpp"
#include "sfanc/cnn.hpp"
#include "sfanc/errors.hpp"
#include "sfanc/filter_bank.hpp"
#include "sfanc/labeler.hpp"
#include "sfanc/noise.hpp"
#include "sfanc/parallel.hpp"
#include "sfanc/runtime.hpp"
#include "sfanc/wav.hpp"

struct sfanc_scenario {
  sfanc::AncScenario v;
  double path_low = 20.0, path_high = 7980.0;
  int primary_taps = 511, secondary_taps = 255;
};
struct sfanc_bank {
  sfanc::FilterBank v;
};
struct sfanc_dataset {
  std::vector<sfanc::NoiseTrack> v;
};
struct sfanc_model {
  sfanc::CnnModel v;
};
struct sfanc_signal {
  sfanc::Signal v;
};

namespace {

thread_local std::string t_last_error;

sfanc_status fail(sfanc_status code, const std::string& msg) {
  t_last_error = msg;
  return code;
}

template <typename F>
sfanc_status guarded(F&& f) {
  try {
    f();
    return SFANC_OK;
  } catch (const sfanc::DivergenceError& e) {
    return fail(SFANC_ERR_DIVERGENCE, e.what());
  } catch (const sfanc::ParamError& e) {
    return fail(SFANC_ERR_PARAM, e.what());
  } catch (const sfanc::DataError& e) {
    return fail(SFANC_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(SFANC_ERR_DATA, e.what());
  }
}

sfanc_status require(bool ok, const char* what) {
  return ok ? SFANC_OK : fail(SFANC_ERR_PARAM, std::string("null or invalid argument: ") + what);
}

sfanc::TrackOrigin domain_of(const char* domain) {
  if (domain != nullptr) {
    const std::string d = domain;
    if (d == "A" || d == "a") return sfanc::TrackOrigin::SyntheticA;
    if (d == "B" || d == "b") return sfanc::TrackOrigin::SyntheticB;
  }
  throw sfanc::ParamError("domain must be \"A\" or \"B\"");
}

sfanc::TrainConfig to_cpp(const sfanc_train_config* cfg) {
  sfanc::TrainConfig out;
  if (cfg != nullptr) {
    out.epochs = cfg->epochs;
    out.l2_coefficient = cfg->l2_coefficient;
    out.learning_rate = cfg->learning_rate;
    out.batch_size = cfg->batch_size;
    out.seed = cfg->seed;
  }
  return out;
}

sfanc::SfancConfig to_cpp(const sfanc_run_config* cfg) {
  sfanc::SfancConfig out;
  if (cfg != nullptr) {
    out.frame_len = cfg->frame_len;
    out.selection_latency_frames = cfg->selection_latency_frames;
    out.initial_filter_index = cfg->initial_filter_index;
  }
  return out;
}

}  // namespace

extern "C" {

const char* sfanc_version(void) { return "1.0.0"; }

const char* sfanc_last_error(void) { return t_last_error.c_str(); }

void sfanc_set_threads(int n) { sfanc::set_thread_count(n); }

/* --- scenario ------------------------------------------------------------ */

sfanc_status sfanc_scenario_create_default(sfanc_scenario** out) {
  if (auto st = require(out != nullptr, "out")) return st;
  return guarded([&] { *out = new sfanc_scenario{sfanc::default_scenario(), 20.0, 7980.0, 511, 255}; });
}

sfanc_status sfanc_scenario_set(sfanc_scenario* s, const char* key, double value) {
  if (auto st = require(s != nullptr && key != nullptr, "scenario/key")) return st;
  return guarded([&] {
    const std::string k = key;
    bool rebuild = false;
    if (k == "step_size") {
      if (value < 0) throw sfanc::ParamError("step_size must be >= 0");
      s->v.step_size = value;
    } else if (k == "control_length") {
      if (value < 1) throw sfanc::ParamError("control_length must be >= 1");
      s->v.control_length = static_cast<int>(value);
    } else if (k == "path_low_hz") {
      s->path_low = value;
      rebuild = true;
    } else if (k == "path_high_hz") {
      s->path_high = value;
      rebuild = true;
    } else if (k == "primary_taps") {
      s->primary_taps = static_cast<int>(value);
      rebuild = true;
    } else if (k == "secondary_taps") {
      s->secondary_taps = static_cast<int>(value);
      rebuild = true;
    } else if (k == "estimate_noise_db") {
      sfanc::Rng rng(0x5eedULL);
      const double level = std::pow(10.0, value / 20.0);
      double rms = 0.0;
      for (double c : s->v.secondary_path.coefficients) rms += c * c;
      rms = std::sqrt(rms / s->v.secondary_path.coefficients.size());
      s->v.secondary_path_estimate = s->v.secondary_path;
      for (auto& c : s->v.secondary_path_estimate.coefficients)
        c += level * rms * rng.gaussian();
    } else {
      throw sfanc::ParamError("unknown scenario key '" + k + "'");
    }
    if (rebuild) {
      s->v.primary_path =
          sfanc::design_bandpass(s->path_low, s->path_high, s->primary_taps, sfanc::kPipelineRate);
      s->v.secondary_path = sfanc::design_bandpass(s->path_low, s->path_high, s->secondary_taps,
                                                   sfanc::kPipelineRate);
      s->v.secondary_path_estimate = s->v.secondary_path;
    }
  });
}

sfanc_status sfanc_scenario_get(const sfanc_scenario* s, const char* key, double* out) {
  if (auto st = require(s != nullptr && key != nullptr && out != nullptr, "scenario/key/out")) return st;
  return guarded([&] {
    const std::string k = key;
    if (k == "step_size") *out = s->v.step_size;
    else if (k == "control_length") *out = s->v.control_length;
    else if (k == "path_low_hz") *out = s->path_low;
    else if (k == "path_high_hz") *out = s->path_high;
    else if (k == "primary_taps") *out = s->primary_taps;
    else if (k == "secondary_taps") *out = s->secondary_taps;
    else throw sfanc::ParamError("unknown scenario key '" + k + "'");
  });
}

void sfanc_scenario_destroy(sfanc_scenario* s) { delete s; }

/* --- filter bank ----------------------------------------------------------- */

sfanc_status sfanc_bank_pretrain(const sfanc_scenario* s, uint64_t seed, sfanc_bank** out) {
  if (auto st = require(s != nullptr && out != nullptr, "scenario/out")) return st;
  return guarded([&] {
    *out = new sfanc_bank{sfanc::pretrain_bank(sfanc::default_partition(), s->v, seed)};
  });
}

sfanc_status sfanc_bank_save(const sfanc_bank* b, const char* path) {
  if (auto st = require(b != nullptr && path != nullptr, "bank/path")) return st;
  return guarded([&] { sfanc::save_bank(b->v, path); });
}

sfanc_status sfanc_bank_load(const char* path, sfanc_bank** out) {
  if (auto st = require(path != nullptr && out != nullptr, "path/out")) return st;
  return guarded([&] { *out = new sfanc_bank{sfanc::load_bank(path)}; });
}

int sfanc_bank_filter_count(const sfanc_bank* b) {
  return b == nullptr ? 0 : static_cast<int>(b->v.filters.size());
}

int sfanc_bank_taps(const sfanc_bank* b) {
  return (b == nullptr || b->v.filters.empty()) ? 0 : b->v.filters.front().taps();
}

void sfanc_bank_destroy(sfanc_bank* b) { delete b; }

/* --- datasets ---------------------------------------------------------------- */

sfanc_status sfanc_dataset_synth(int n, const char* domain, uint64_t seed, sfanc_dataset** out) {
  if (auto st = require(out != nullptr, "out")) return st;
  return guarded([&] { *out = new sfanc_dataset{sfanc::synth_dataset(n, domain_of(domain), seed)}; });
}

sfanc_status sfanc_dataset_synth_balanced(int per_class, const char* domain, uint64_t seed,
                                          const sfanc_bank* bank, const sfanc_scenario* s,
                                          sfanc_dataset** out) {
  if (auto st = require(bank != nullptr && s != nullptr && out != nullptr, "bank/scenario/out")) return st;
  return guarded([&] {
    *out = new sfanc_dataset{
        sfanc::synth_labeled_balanced(per_class, domain_of(domain), seed, bank->v, s->v)};
  });
}

sfanc_status sfanc_dataset_from_wav(const char* path, sfanc_dataset** out) {
  if (auto st = require(path != nullptr && out != nullptr, "path/out")) return st;
  return guarded([&] { *out = new sfanc_dataset{sfanc::load_wav(path)}; });
}

sfanc_status sfanc_dataset_load(const char* manifest_path, sfanc_dataset** out) {
  if (auto st = require(manifest_path != nullptr && out != nullptr, "path/out")) return st;
  return guarded([&] { *out = new sfanc_dataset{sfanc::load_dataset(manifest_path)}; });
}

sfanc_status sfanc_dataset_save(const sfanc_dataset* d, const char* dir) {
  if (auto st = require(d != nullptr && dir != nullptr, "dataset/dir")) return st;
  return guarded([&] { sfanc::save_dataset(d->v, dir); });
}

sfanc_status sfanc_dataset_save_manifest(const sfanc_dataset* d, const char* path) {
  if (auto st = require(d != nullptr && path != nullptr, "dataset/path")) return st;
  return guarded([&] { sfanc::save_manifest(d->v, path); });
}

sfanc_status sfanc_dataset_label(sfanc_dataset* d, const sfanc_bank* bank,
                                 const sfanc_scenario* s, int* histogram_out) {
  if (auto st = require(d != nullptr && bank != nullptr && s != nullptr, "dataset/bank/scenario"))
    return st;
  return guarded([&] {
    const sfanc::LabelStats stats = sfanc::label_dataset(d->v, bank->v, s->v);
    if (histogram_out != nullptr) {
      for (int i = 0; i < sfanc::kNumClasses; ++i)
        histogram_out[i] = (i < static_cast<int>(stats.histogram.size())) ? stats.histogram[static_cast<std::size_t>(i)] : 0;
    }
    if (!stats.failures.empty() && stats.failures.size() == d->v.size())
      throw sfanc::DataError("labeling failed for every track: " + stats.failures.front().second);
  });
}

int sfanc_dataset_size(const sfanc_dataset* d) {
  return d == nullptr ? 0 : static_cast<int>(d->v.size());
}

int sfanc_dataset_label_of(const sfanc_dataset* d, int index) {
  if (d == nullptr || index < 0 || index >= static_cast<int>(d->v.size())) return -1;
  const auto& lab = d->v[static_cast<std::size_t>(index)].label;
  return lab ? *lab : -1;
}

void sfanc_dataset_destroy(sfanc_dataset* d) { delete d; }

/* --- classifier ----------------------------------------------------------------- */

void sfanc_train_config_default(sfanc_train_config* cfg) {
  if (cfg == nullptr) return;
  const sfanc::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->l2_coefficient = d.l2_coefficient;
  cfg->learning_rate = d.learning_rate;
  cfg->batch_size = d.batch_size;
  cfg->seed = d.seed;
}

sfanc_status sfanc_model_build(uint64_t seed, sfanc_model** out) {
  if (auto st = require(out != nullptr, "out")) return st;
  return guarded([&] { *out = new sfanc_model{sfanc::build_default_model(seed)}; });
}

size_t sfanc_model_parameter_count(const sfanc_model* m) {
  return m == nullptr ? 0 : m->v.parameter_count();
}

sfanc_status sfanc_model_train(sfanc_model* m, const sfanc_dataset* d,
                               const sfanc_train_config* cfg, const char* metrics_csv) {
  if (auto st = require(m != nullptr && d != nullptr, "model/dataset")) return st;
  return guarded([&] {
    const std::vector<sfanc::EpochMetrics> metrics = sfanc::train(m->v, d->v, to_cpp(cfg));
    if (metrics_csv != nullptr) sfanc::write_metrics_csv(metrics, metrics_csv);
  });
}

sfanc_status sfanc_model_accuracy(const sfanc_model* m, const sfanc_dataset* d,
                                  double* accuracy_out) {
  if (auto st = require(m != nullptr && d != nullptr && accuracy_out != nullptr,
                        "model/dataset/out"))
    return st;
  return guarded([&] { *accuracy_out = sfanc::evaluate_accuracy(m->v, d->v); });
}

sfanc_status sfanc_model_predict(const sfanc_model* m, const double* samples, int n,
                                 int* index_out) {
  if (auto st = require(m != nullptr && samples != nullptr && index_out != nullptr,
                        "model/samples/out"))
    return st;
  return guarded([&] {
    sfanc::Signal x;
    x.samples.assign(samples, samples + n);
    *index_out = m->v.predict_index(x);
  });
}

sfanc_status sfanc_model_save(const sfanc_model* m, const char* path) {
  if (auto st = require(m != nullptr && path != nullptr, "model/path")) return st;
  return guarded([&] { sfanc::save_model(m->v, path); });
}

sfanc_status sfanc_model_load(const char* path, sfanc_model** out) {
  if (auto st = require(path != nullptr && out != nullptr, "path/out")) return st;
  return guarded([&] { *out = new sfanc_model{sfanc::load_model(path)}; });
}

void sfanc_model_destroy(sfanc_model* m) { delete m; }

sfanc_status sfanc_run_scheme(const char* scheme, const sfanc_dataset* synthetic_train,
                              const sfanc_dataset* real_train, const sfanc_dataset* real_test,
                              const sfanc_train_config* cfg, double* accuracy_out) {
  if (auto st = require(scheme != nullptr && synthetic_train != nullptr && real_train != nullptr &&
                            real_test != nullptr && accuracy_out != nullptr,
                        "scheme/datasets/out"))
    return st;
  return guarded([&] {
    *accuracy_out = sfanc::run_scheme(sfanc::scheme_from_name(scheme), synthetic_train->v,
                                      real_train->v, real_test->v, to_cpp(cfg));
  });
}

/* --- signals ----------------------------------------------------------------------- */

sfanc_status sfanc_signal_from_wav(const char* path, sfanc_signal** out) {
  if (auto st = require(path != nullptr && out != nullptr, "path/out")) return st;
  return guarded([&] { *out = new sfanc_signal{sfanc::read_wav_pcm16_mono_16k(path)}; });
}

sfanc_status sfanc_signal_to_wav(const sfanc_signal* x, const char* path) {
  if (auto st = require(x != nullptr && path != nullptr, "signal/path")) return st;
  return guarded([&] { sfanc::write_wav_pcm16(path, x->v); });
}

sfanc_status sfanc_make_aircraft_noise(double seconds, uint64_t seed, sfanc_signal** out) {
  if (auto st = require(out != nullptr, "out")) return st;
  return guarded([&] { *out = new sfanc_signal{sfanc::make_aircraft_like_noise(seconds, seed)}; });
}

sfanc_status sfanc_make_composite_noise(double seconds, double switch_period_s, uint64_t seed,
                                        const sfanc_scenario* s, sfanc_signal** out) {
  if (auto st = require(s != nullptr && out != nullptr, "scenario/out")) return st;
  return guarded([&] {
    *out = new sfanc_signal{sfanc::make_composite_noise(seconds, switch_period_s, seed, s->v)};
  });
}

int64_t sfanc_signal_length(const sfanc_signal* x) {
  return x == nullptr ? 0 : static_cast<int64_t>(x->v.size());
}

void sfanc_signal_destroy(sfanc_signal* x) { delete x; }

/* --- controller runtime --------------------------------------------------------------- */

void sfanc_run_config_default(sfanc_run_config* cfg) {
  if (cfg == nullptr) return;
  const sfanc::SfancConfig d;
  cfg->frame_len = d.frame_len;
  cfg->selection_latency_frames = d.selection_latency_frames;
  cfg->initial_filter_index = d.initial_filter_index;
}

sfanc_status sfanc_bench_run(const sfanc_signal* noise, const sfanc_bank* bank,
                             const sfanc_model* model, const sfanc_scenario* s,
                             const sfanc_run_config* cfg, const char* out_dir) {
  if (auto st = require(noise != nullptr && bank != nullptr && s != nullptr && out_dir != nullptr,
                        "noise/bank/scenario/out_dir"))
    return st;
  return guarded([&] {
    std::unique_ptr<sfanc::Selector> sel;
    if (model != nullptr) {
      sel = std::make_unique<sfanc::CnnSelector>(model->v);
    } else {
      sel = std::make_unique<sfanc::OracleSelector>(bank->v, s->v);
    }
    const sfanc::BenchReport rep =
        sfanc::run_comparison(noise->v, bank->v, *sel, s->v, to_cpp(cfg));
    sfanc::write_bench_csv(rep, out_dir);
  });
}

sfanc_status sfanc_simulate_run(const sfanc_signal* noise, const sfanc_bank* bank,
                                const sfanc_model* model, const sfanc_scenario* s,
                                const sfanc_run_config* cfg, const char* out_dir) {
  if (auto st = require(noise != nullptr && bank != nullptr && s != nullptr && out_dir != nullptr,
                        "noise/bank/scenario/out_dir"))
    return st;
  return guarded([&] {
    std::unique_ptr<sfanc::Selector> sel;
    if (model != nullptr) {
      sel = std::make_unique<sfanc::CnnSelector>(model->v);
    } else {
      sel = std::make_unique<sfanc::OracleSelector>(bank->v, s->v);
    }
    const sfanc::SfancConfig rc = to_cpp(cfg);
    const sfanc::SfancRunResult run = sfanc::run_sfanc(noise->v, bank->v, *sel, s->v, rc);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    sfanc::write_wav_pcm16((fs::path(out_dir) / "error.wav").string(), run.run.error_signal);
    sfanc::write_wav_pcm16((fs::path(out_dir) / "disturbance.wav").string(), run.run.disturbance);
    {
      std::ofstream f(fs::path(out_dir) / "selections.csv", std::ios::trunc);
      if (!f) throw sfanc::DataError("simulate: cannot write selections.csv");
      f << "frame,filter_index\n";
      for (std::size_t k = 0; k < run.selected.size(); ++k)
        f << k << ',' << run.selected[k] << '\n';
    }
    {
      const std::vector<double> rows = sfanc::nr_per_second(run.run.disturbance, run.run.error_signal);
      std::ofstream f(fs::path(out_dir) / "nr_per_second.csv", std::ios::trunc);
      if (!f) throw sfanc::DataError("simulate: cannot write nr_per_second.csv");
      f << "second,nr_db\n";
      char line[64];
      for (std::size_t r = 0; r < rows.size(); ++r) {
        std::snprintf(line, sizeof(line), "%zu,%.10g\n", r + 1, rows[r]);
        f << line;
      }
    }
  });
}

} /* extern "C" */
