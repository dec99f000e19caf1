/* C API for the SFANC simulation library.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Every fallible call returns a status code; on failure, sfanc_last_error()
 * returns a message describing what went wrong (thread-local).
 *
 * Status codes double as process exit codes for the CLI:
 *   0 success, 2 parameter/configuration error, 3 data error, 4 divergence.
 */
#ifndef SFANC_H
#define SFANC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef SFANC_API
#define SFANC_API __attribute__((visibility("default")))
#endif

typedef enum sfanc_status {
  SFANC_OK = 0,
  SFANC_ERR_PARAM = 2,
  SFANC_ERR_DATA = 3,
  SFANC_ERR_DIVERGENCE = 4
} sfanc_status;

typedef struct sfanc_scenario sfanc_scenario; /* paths + step size + control length */
typedef struct sfanc_bank sfanc_bank;         /* 15 pre-trained control filters */
typedef struct sfanc_dataset sfanc_dataset;   /* noise tracks + labels */
typedef struct sfanc_model sfanc_model;       /* CNN classifier */
typedef struct sfanc_signal sfanc_signal;     /* sampled waveform */

SFANC_API const char* sfanc_version(void);
SFANC_API const char* sfanc_last_error(void);

/* 0 = use all hardware threads. Results never depend on the thread count. */
SFANC_API void sfanc_set_threads(int n);

/* --- scenario ------------------------------------------------------------ */

/* Band-pass 20-7980 Hz paths, step size 1e-4, 1024-tap control filter. */
SFANC_API sfanc_status sfanc_scenario_create_default(sfanc_scenario** out);

/* Keys: "step_size", "control_length", "path_low_hz", "path_high_hz",
 * "primary_taps", "secondary_taps". Path keys rebuild the path filters.
 * "estimate_noise_db" perturbs the secondary-path estimate with seeded white
 * error at the given level (dB relative to the true path). */
SFANC_API sfanc_status sfanc_scenario_set(sfanc_scenario* s, const char* key, double value);
SFANC_API sfanc_status sfanc_scenario_get(const sfanc_scenario* s, const char* key, double* out);
SFANC_API void sfanc_scenario_destroy(sfanc_scenario* s);

/* --- filter bank ---------------------------------------------------------- */

SFANC_API sfanc_status sfanc_bank_pretrain(const sfanc_scenario* s, uint64_t seed,
                                           sfanc_bank** out);
SFANC_API sfanc_status sfanc_bank_save(const sfanc_bank* b, const char* path);
SFANC_API sfanc_status sfanc_bank_load(const char* path, sfanc_bank** out);
SFANC_API int sfanc_bank_filter_count(const sfanc_bank* b);
SFANC_API int sfanc_bank_taps(const sfanc_bank* b);
SFANC_API void sfanc_bank_destroy(sfanc_bank* b);

/* --- datasets -------------------------------------------------------------- */

/* domain: "A" (single band) or "B" (2-3 superimposed bands). */
SFANC_API sfanc_status sfanc_dataset_synth(int n, const char* domain, uint64_t seed,
                                           sfanc_dataset** out);

/* Stratified by oracle label: per_class tracks for each of the 15 classes. */
SFANC_API sfanc_status sfanc_dataset_synth_balanced(int per_class, const char* domain,
                                                    uint64_t seed, const sfanc_bank* bank,
                                                    const sfanc_scenario* s, sfanc_dataset** out);

/* Splits a 16-bit mono 16 kHz PCM WAV into 1-second tracks. */
SFANC_API sfanc_status sfanc_dataset_from_wav(const char* path, sfanc_dataset** out);

SFANC_API sfanc_status sfanc_dataset_load(const char* manifest_path, sfanc_dataset** out);

/* Writes dir/manifest.jsonl plus dir/tracks/<id>.wav. */
SFANC_API sfanc_status sfanc_dataset_save(const sfanc_dataset* d, const char* dir);

/* Writes a manifest that references the dataset's existing track files; it
 * must live in the same directory as the manifest the dataset came from. */
SFANC_API sfanc_status sfanc_dataset_save_manifest(const sfanc_dataset* d, const char* path);

/* Labels every track with the best-filter oracle. histogram_out (length 15,
 * optional) receives the per-class counts. Per-track failures are reported
 * in the return status only if every track failed. */
SFANC_API sfanc_status sfanc_dataset_label(sfanc_dataset* d, const sfanc_bank* bank,
                                           const sfanc_scenario* s, int* histogram_out);

SFANC_API int sfanc_dataset_size(const sfanc_dataset* d);
/* -1 if unlabeled. */
SFANC_API int sfanc_dataset_label_of(const sfanc_dataset* d, int index);
SFANC_API void sfanc_dataset_destroy(sfanc_dataset* d);

/* --- classifier ------------------------------------------------------------ */

typedef struct sfanc_train_config {
  int epochs;            /* default 30 */
  double l2_coefficient; /* default 1e-4 */
  double learning_rate;  /* default 1e-3 */
  int batch_size;        /* default 32 */
  uint64_t seed;
} sfanc_train_config;

SFANC_API void sfanc_train_config_default(sfanc_train_config* cfg);

SFANC_API sfanc_status sfanc_model_build(uint64_t seed, sfanc_model** out);
SFANC_API size_t sfanc_model_parameter_count(const sfanc_model* m);

/* Trains in place; writes per-epoch metrics CSV if metrics_csv is non-NULL. */
SFANC_API sfanc_status sfanc_model_train(sfanc_model* m, const sfanc_dataset* d,
                                         const sfanc_train_config* cfg, const char* metrics_csv);

SFANC_API sfanc_status sfanc_model_accuracy(const sfanc_model* m, const sfanc_dataset* d,
                                            double* accuracy_out);

/* samples: raw waveform, n = 16000. Normalization happens inside. */
SFANC_API sfanc_status sfanc_model_predict(const sfanc_model* m, const double* samples, int n,
                                           int* index_out);

SFANC_API sfanc_status sfanc_model_save(const sfanc_model* m, const char* path);
SFANC_API sfanc_status sfanc_model_load(const char* path, sfanc_model** out);
SFANC_API void sfanc_model_destroy(sfanc_model* m);

/* scheme: "synthetic-only", "real-only", "fine-tune", "mixed". */
SFANC_API sfanc_status sfanc_run_scheme(const char* scheme, const sfanc_dataset* synthetic_train,
                                        const sfanc_dataset* real_train,
                                        const sfanc_dataset* real_test,
                                        const sfanc_train_config* cfg, double* accuracy_out);

/* --- signals ---------------------------------------------------------------- */

SFANC_API sfanc_status sfanc_signal_from_wav(const char* path, sfanc_signal** out);
SFANC_API sfanc_status sfanc_signal_to_wav(const sfanc_signal* x, const char* path);
SFANC_API sfanc_status sfanc_make_aircraft_noise(double seconds, uint64_t seed,
                                                 sfanc_signal** out);
SFANC_API sfanc_status sfanc_make_composite_noise(double seconds, double switch_period_s,
                                                  uint64_t seed, const sfanc_scenario* s,
                                                  sfanc_signal** out);
SFANC_API int64_t sfanc_signal_length(const sfanc_signal* x);
SFANC_API void sfanc_signal_destroy(sfanc_signal* x);

/* --- controller runtime ------------------------------------------------------ */

typedef struct sfanc_run_config {
  int frame_len;                 /* default 16000 */
  int selection_latency_frames;  /* 0 or 1, default 0 */
  int initial_filter_index;      /* default 0 */
} sfanc_run_config;

SFANC_API void sfanc_run_config_default(sfanc_run_config* cfg);

/* model == NULL selects with the exhaustive oracle. Writes traces.csv,
 * nr_per_second.csv, and selections.csv into out_dir. */
SFANC_API sfanc_status sfanc_bench_run(const sfanc_signal* noise, const sfanc_bank* bank,
                                       const sfanc_model* model, const sfanc_scenario* s,
                                       const sfanc_run_config* cfg, const char* out_dir);

/* Single SFANC run. Writes error.wav, disturbance.wav, selections.csv and
 * nr_per_second.csv into out_dir. */
SFANC_API sfanc_status sfanc_simulate_run(const sfanc_signal* noise, const sfanc_bank* bank,
                                          const sfanc_model* model, const sfanc_scenario* s,
                                          const sfanc_run_config* cfg, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SFANC_H */
