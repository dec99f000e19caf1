// Command-line driver for the SFANC simulation library. Talks to the core
// exclusively through the C API in sfanc/sfanc.h.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfanc/sfanc.h"

namespace fs = std::filesystem;

namespace {

struct ScenarioHandle {
  sfanc_scenario* p = nullptr;
  ~ScenarioHandle() { sfanc_scenario_destroy(p); }
};
struct BankHandle {
  sfanc_bank* p = nullptr;
  ~BankHandle() { sfanc_bank_destroy(p); }
};
struct DatasetHandle {
  sfanc_dataset* p = nullptr;
  ~DatasetHandle() { sfanc_dataset_destroy(p); }
};
struct ModelHandle {
  sfanc_model* p = nullptr;
  ~ModelHandle() { sfanc_model_destroy(p); }
};
struct SignalHandle {
  sfanc_signal* p = nullptr;
  ~SignalHandle() { sfanc_signal_destroy(p); }
};

[[noreturn]] void die(sfanc_status st) {
  std::fprintf(stderr, "error: %s\n", sfanc_last_error());
  std::exit(static_cast<int>(st));
}

void check(sfanc_status st) {
  if (st != SFANC_OK) die(st);
}

// key = value lines; '#' starts a comment. Keys: scenario.<key>,
// train.<epochs|learning_rate|l2_coefficient|batch_size>,
// run.<frame_len|latency|initial_index>.
struct Config {
  std::vector<std::pair<std::string, double>> entries;

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
      std::fprintf(stderr, "error: cannot open config file %s\n", path.c_str());
      std::exit(2);
    }
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
          std::fprintf(stderr, "error: %s:%d: expected key = value\n", path.c_str(), line_no);
          std::exit(2);
        }
        continue;
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      try {
        cfg.entries.emplace_back(key, std::stod(val));
      } catch (...) {
        std::fprintf(stderr, "error: %s:%d: bad numeric value '%s'\n", path.c_str(), line_no,
                     val.c_str());
        std::exit(2);
      }
    }
    return cfg;
  }

  void apply_scenario(sfanc_scenario* s) const {
    for (const auto& [key, value] : entries) {
      if (key.rfind("scenario.", 0) == 0) check(sfanc_scenario_set(s, key.c_str() + 9, value));
    }
  }

  void apply_train(sfanc_train_config* t) const {
    for (const auto& [key, value] : entries) {
      if (key == "train.epochs") t->epochs = static_cast<int>(value);
      else if (key == "train.learning_rate") t->learning_rate = value;
      else if (key == "train.l2_coefficient") t->l2_coefficient = value;
      else if (key == "train.batch_size") t->batch_size = static_cast<int>(value);
    }
  }

  void apply_run(sfanc_run_config* r) const {
    for (const auto& [key, value] : entries) {
      if (key == "run.frame_len") r->frame_len = static_cast<int>(value);
      else if (key == "run.latency") r->selection_latency_frames = static_cast<int>(value);
      else if (key == "run.initial_index") r->initial_filter_index = static_cast<int>(value);
    }
  }
};

SignalHandle make_noise(const std::string& spec, double duration, double switch_period,
                        std::uint64_t seed, sfanc_scenario* scenario) {
  SignalHandle sig;
  if (spec == "aircraft") {
    check(sfanc_make_aircraft_noise(duration, seed, &sig.p));
  } else if (spec == "composite") {
    check(sfanc_make_composite_noise(duration, switch_period, seed, scenario, &sig.p));
  } else {
    check(sfanc_signal_from_wav(spec.c_str(), &sig.p));
  }
  return sig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective fixed-filter ANC simulation laboratory"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "RNG seed (applies to the subcommand)")->capture_default_str();
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  // pretrain
  auto* cmd_pretrain = app.add_subcommand("pretrain", "pre-train the 15-filter bank (FxLMS)");

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "generate synthetic noise tracks (WAV + manifest)");
  int synth_n = 100;
  int per_class = 0;
  std::string domain = "A";
  std::string synth_bank;
  cmd_synth->add_option("--n", synth_n, "number of tracks")->capture_default_str();
  cmd_synth->add_option("--domain", domain, "A (single band) or B (multi-band)")->capture_default_str();
  cmd_synth->add_option("--per-class", per_class,
                        "stratified mode: tracks per class (requires --bank)");
  cmd_synth->add_option("--bank", synth_bank, "bank file for stratified labeling");

  // label
  auto* cmd_label = app.add_subcommand("label", "label a dataset with the best-filter oracle");
  std::string label_in, label_bank, label_out;
  cmd_label->add_option("--in", label_in, "input manifest.jsonl")->required();
  cmd_label->add_option("--bank", label_bank, "bank file")->required();
  cmd_label->add_option("--labeled-out", label_out,
                        "output manifest path (default: labeled.jsonl next to input)");

  // train
  auto* cmd_train = app.add_subcommand("train", "train the classifier on a labeled dataset");
  std::string train_in;
  sfanc_train_config tcfg;
  sfanc_train_config_default(&tcfg);
  cmd_train->add_option("--in", train_in, "labeled manifest.jsonl")->required();
  cmd_train->add_option("--epochs", tcfg.epochs)->capture_default_str();
  cmd_train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  cmd_train->add_option("--l2", tcfg.l2_coefficient)->capture_default_str();
  cmd_train->add_option("--batch", tcfg.batch_size)->capture_default_str();

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "classification accuracy on a labeled dataset");
  std::string eval_model, eval_in;
  cmd_eval->add_option("--model", eval_model, "model checkpoint")->required();
  cmd_eval->add_option("--in", eval_in, "labeled manifest.jsonl")->required();

  // scheme
  auto* cmd_scheme = app.add_subcommand("scheme", "compare the four training schemes");
  std::string sc_syn, sc_real, sc_test;
  sfanc_train_config scfg;
  sfanc_train_config_default(&scfg);
  cmd_scheme->add_option("--synthetic", sc_syn, "synthetic-domain labeled manifest")->required();
  cmd_scheme->add_option("--real", sc_real, "real-domain labeled manifest")->required();
  cmd_scheme->add_option("--test", sc_test, "real-domain test manifest")->required();
  cmd_scheme->add_option("--epochs", scfg.epochs)->capture_default_str();
  cmd_scheme->add_option("--lr", scfg.learning_rate)->capture_default_str();
  cmd_scheme->add_option("--l2", scfg.l2_coefficient)->capture_default_str();
  cmd_scheme->add_option("--batch", scfg.batch_size)->capture_default_str();

  // bench / simulate (shared options)
  std::string bench_bank, bench_model, noise_spec = "composite";
  double duration = 10.0, switch_period = 2.0;
  sfanc_run_config rcfg;
  sfanc_run_config_default(&rcfg);
  auto add_run_opts = [&](CLI::App* c, bool need_bank) {
    auto* o = c->add_option("--bank", bench_bank, "bank file");
    if (need_bank) o->required();
    c->add_option("--model", bench_model, "classifier checkpoint (omit to use the oracle)");
    c->add_option("--noise", noise_spec, "aircraft | composite | path to a WAV file")
        ->capture_default_str();
    c->add_option("--duration", duration, "seconds (synthetic noise)")->capture_default_str();
    c->add_option("--switch-period", switch_period, "composite band-switch period, s")
        ->capture_default_str();
    c->add_option("--frame-len", rcfg.frame_len)->capture_default_str();
    c->add_option("--latency", rcfg.selection_latency_frames)->capture_default_str();
    c->add_option("--initial-index", rcfg.initial_filter_index)->capture_default_str();
  };
  auto* cmd_bench = app.add_subcommand("bench", "SFANC vs FxLMS vs FxNLMS benchmark (CSV out)");
  add_run_opts(cmd_bench, true);
  auto* cmd_sim = app.add_subcommand("simulate", "single SFANC run (WAV + CSV out)");
  add_run_opts(cmd_sim, false);
  cmd_sim->get_option("--bank")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad arguments are parameter errors
  }

  if (threads > 0) sfanc_set_threads(threads);

  Config config;
  if (!config_path.empty()) config = Config::load(config_path);

  ScenarioHandle scenario;
  check(sfanc_scenario_create_default(&scenario.p));
  config.apply_scenario(scenario.p);
  config.apply_train(&tcfg);
  config.apply_train(&scfg);
  config.apply_run(&rcfg);
  tcfg.seed = seed;
  scfg.seed = seed;

  fs::create_directories(out_dir);

  if (*cmd_pretrain) {
    BankHandle bank;
    check(sfanc_bank_pretrain(scenario.p, seed, &bank.p));
    const std::string path = (fs::path(out_dir) / "bank.sfb").string();
    check(sfanc_bank_save(bank.p, path.c_str()));
    std::printf("wrote %s (%d filters, %d taps)\n", path.c_str(),
                sfanc_bank_filter_count(bank.p), sfanc_bank_taps(bank.p));
    return 0;
  }

  if (*cmd_synth) {
    DatasetHandle ds;
    if (per_class > 0) {
      if (synth_bank.empty()) {
        std::fprintf(stderr, "error: --per-class requires --bank\n");
        return 2;
      }
      BankHandle bank;
      check(sfanc_bank_load(synth_bank.c_str(), &bank.p));
      check(sfanc_dataset_synth_balanced(per_class, domain.c_str(), seed, bank.p, scenario.p, &ds.p));
    } else {
      check(sfanc_dataset_synth(synth_n, domain.c_str(), seed, &ds.p));
    }
    check(sfanc_dataset_save(ds.p, out_dir.c_str()));
    std::printf("wrote %d tracks to %s\n", sfanc_dataset_size(ds.p), out_dir.c_str());
    return 0;
  }

  if (*cmd_label) {
    DatasetHandle ds;
    check(sfanc_dataset_load(label_in.c_str(), &ds.p));
    BankHandle bank;
    check(sfanc_bank_load(label_bank.c_str(), &bank.p));
    int histogram[15] = {0};
    check(sfanc_dataset_label(ds.p, bank.p, scenario.p, histogram));
    const std::string out_path =
        label_out.empty() ? (fs::path(label_in).parent_path() / "labeled.jsonl").string()
                          : label_out;
    check(sfanc_dataset_save_manifest(ds.p, out_path.c_str()));
    std::printf("labeled %d tracks -> %s\nhistogram:", sfanc_dataset_size(ds.p), out_path.c_str());
    for (int i = 0; i < 15; ++i) std::printf(" %d", histogram[i]);
    std::printf("\n");
    return 0;
  }

  if (*cmd_train) {
    DatasetHandle ds;
    check(sfanc_dataset_load(train_in.c_str(), &ds.p));
    ModelHandle model;
    check(sfanc_model_build(seed, &model.p));
    const std::string metrics = (fs::path(out_dir) / "metrics.csv").string();
    check(sfanc_model_train(model.p, ds.p, &tcfg, metrics.c_str()));
    const std::string path = (fs::path(out_dir) / "model.sfm").string();
    check(sfanc_model_save(model.p, path.c_str()));
    std::printf("wrote %s and %s (%zu parameters)\n", path.c_str(), metrics.c_str(),
                sfanc_model_parameter_count(model.p));
    return 0;
  }

  if (*cmd_eval) {
    ModelHandle model;
    check(sfanc_model_load(eval_model.c_str(), &model.p));
    DatasetHandle ds;
    check(sfanc_dataset_load(eval_in.c_str(), &ds.p));
    double acc = 0.0;
    check(sfanc_model_accuracy(model.p, ds.p, &acc));
    std::printf("accuracy %.4f over %d tracks\n", acc, sfanc_dataset_size(ds.p));
    return 0;
  }

  if (*cmd_scheme) {
    DatasetHandle syn, real, test;
    check(sfanc_dataset_load(sc_syn.c_str(), &syn.p));
    check(sfanc_dataset_load(sc_real.c_str(), &real.p));
    check(sfanc_dataset_load(sc_test.c_str(), &test.p));
    const char* names[4] = {"synthetic-only", "real-only", "fine-tune", "mixed"};
    const std::string path = (fs::path(out_dir) / "schemes.csv").string();
    std::ofstream f(path, std::ios::trunc);
    f << "scheme,test_accuracy\n";
    for (const char* name : names) {
      double acc = 0.0;
      check(sfanc_run_scheme(name, syn.p, real.p, test.p, &scfg, &acc));
      char line[64];
      std::snprintf(line, sizeof(line), "%s,%.6f\n", name, acc);
      f << line;
      std::printf("%-15s %.4f\n", name, acc);
    }
    std::printf("wrote %s\n", path.c_str());
    return 0;
  }

  if (*cmd_bench || *cmd_sim) {
    BankHandle bank;
    check(sfanc_bank_load(bench_bank.c_str(), &bank.p));
    ModelHandle model;
    if (!bench_model.empty()) check(sfanc_model_load(bench_model.c_str(), &model.p));
    SignalHandle noise = make_noise(noise_spec, duration, switch_period, seed, scenario.p);
    if (*cmd_bench) {
      check(sfanc_bench_run(noise.p, bank.p, model.p, scenario.p, &rcfg, out_dir.c_str()));
    } else {
      check(sfanc_simulate_run(noise.p, bank.p, model.p, scenario.p, &rcfg, out_dir.c_str()));
    }
    std::printf("wrote results to %s (noise: %s, %lld samples, selector: %s)\n", out_dir.c_str(),
                noise_spec.c_str(), static_cast<long long>(sfanc_signal_length(noise.p)),
                bench_model.empty() ? "oracle" : "cnn");
    return 0;
  }

  return 0;
}
