#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sfanc/cnn_net.hpp"
#include "sfanc/noise.hpp"
#include "sfanc/signal.hpp"

namespace sfanc {

struct TrainConfig {
  int epochs = 30;
  double l2_coefficient = 1e-4;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

// The four training schemes of the synthetic-vs-real experiment.
enum class Scheme { SyntheticOnly, RealOnly, FineTune, Mixed };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Residual 1D CNN mapping a normalized 16,000-sample waveform to a 15-class
// posterior over control-filter indices.
class CnnModel {
 public:
  CnnModel(const cnn::ArchDescriptor& arch, std::uint64_t seed);

  const cnn::ArchDescriptor& arch() const { return net_->arch(); }
  std::size_t parameter_count() const { return net_->parameter_count(); }

  /// Softmax posterior for a min-max normalized track. Inference mode.
  std::vector<float> forward(const Signal& normalized_track) const;

  /// Normalizes internally, runs forward, returns the argmax
  /// (lowest index on exact ties).
  int predict_index(const Signal& raw_track) const;

  cnn::Network<float>& net() { return *net_; }
  const cnn::Network<float>& net() const { return *net_; }

 private:
  std::unique_ptr<cnn::Network<float>> net_;
};

/// conv(63ch->44, stride 4) + BN + ReLU, residual blocks 44/88/176 with
/// stride-4 max pools between them, global average pool, FC to 15 classes.
/// Glorot-uniform weights; ~0.21M parameters.
CnnModel build_default_model(std::uint64_t seed);

/// Adam training with a seeded 90/10 train/validation split. Returns one
/// metrics row per epoch; the model keeps the best-validation snapshot.
std::vector<EpochMetrics> train(CnnModel& model, const std::vector<NoiseTrack>& dataset,
                                const TrainConfig& config);

/// Fraction of tracks whose predicted index matches the stored label.
double evaluate_accuracy(const CnnModel& model, const std::vector<NoiseTrack>& dataset);

/// Trains per the scheme and returns accuracy on the real-domain test set.
/// FineTune continues on the real set with fresh optimizer state at a tenth
/// of the learning rate.
double run_scheme(Scheme scheme, const std::vector<NoiseTrack>& synthetic_train,
                  const std::vector<NoiseTrack>& real_train,
                  const std::vector<NoiseTrack>& real_test, const TrainConfig& config);

/// Versioned binary checkpoint (magic, architecture JSON, float32 payload,
/// checksum). Round-trips parameters and running statistics bit-exactly.
void save_model(const CnnModel& model, const std::string& path);
CnnModel load_model(const std::string& path);

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

}  // namespace sfanc
