#include "sfanc/cnn.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "sfanc/errors.hpp"

namespace sfanc {

using nlohmann::json;

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::SyntheticOnly: return "synthetic-only";
    case Scheme::RealOnly: return "real-only";
    case Scheme::FineTune: return "fine-tune";
    case Scheme::Mixed: return "mixed";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "synthetic-only") return Scheme::SyntheticOnly;
  if (name == "real-only") return Scheme::RealOnly;
  if (name == "fine-tune") return Scheme::FineTune;
  if (name == "mixed") return Scheme::Mixed;
  throw ParamError("unknown scheme '" + name + "'");
}

CnnModel::CnnModel(const cnn::ArchDescriptor& arch, std::uint64_t seed)
    : net_(std::make_unique<cnn::Network<float>>(arch, seed)) {}

CnnModel build_default_model(std::uint64_t seed) {
  return CnnModel(cnn::ArchDescriptor{}, seed);
}

namespace {

std::vector<float> normalized_input(const Signal& raw, int want_len) {
  if (static_cast<int>(raw.size()) != want_len)
    throw ParamError("cnn: input must have length " + std::to_string(want_len));
  const Signal norm = min_max_normalize(raw);
  std::vector<float> out(norm.size());
  for (std::size_t i = 0; i < norm.size(); ++i) out[i] = static_cast<float>(norm.samples[i]);
  return out;
}

int argmax_lowest(const std::vector<float>& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i)
    if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
  return best;
}

}  // namespace

std::vector<float> CnnModel::forward(const Signal& normalized_track) const {
  if (static_cast<int>(normalized_track.size()) != net_->arch().input_len)
    throw ParamError("cnn: input must have length " + std::to_string(net_->arch().input_len));
  std::vector<float> x(normalized_track.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(normalized_track.samples[i]);
  const cnn::Vec<float> p = net_->forward_eval(x.data());
  return {p.data(), p.data() + p.size()};
}

int CnnModel::predict_index(const Signal& raw_track) const {
  const std::vector<float> x = normalized_input(raw_track, net_->arch().input_len);
  const cnn::Vec<float> p = net_->forward_eval(x.data());
  return argmax_lowest({p.data(), p.data() + p.size()});
}

namespace {

struct Snapshot {
  std::vector<float> values;

  static Snapshot take(cnn::Network<float>& net) {
    Snapshot s;
    for (const auto& p : net.params()) s.values.insert(s.values.end(), p.data, p.data + p.size);
    for (const auto& [name, buf] : net.buffers())
      s.values.insert(s.values.end(), buf->data(), buf->data() + buf->size());
    return s;
  }

  void restore(cnn::Network<float>& net) const {
    std::size_t off = 0;
    for (auto& p : net.params()) {
      std::copy(values.begin() + static_cast<std::ptrdiff_t>(off),
                values.begin() + static_cast<std::ptrdiff_t>(off + p.size), p.data);
      off += p.size;
    }
    for (auto& [name, buf] : net.buffers()) {
      std::copy(values.begin() + static_cast<std::ptrdiff_t>(off),
                values.begin() + static_cast<std::ptrdiff_t>(off + buf->size()), buf->data());
      off += static_cast<std::size_t>(buf->size());
    }
  }
};

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

double accuracy_over(const cnn::Network<float>& net, const std::vector<std::vector<float>>& inputs,
                     const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  std::vector<int> hit(idx.size(), 0);
  parallel_for(idx.size(), [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) {
      const cnn::Vec<float> p = net.forward_eval(inputs[idx[i]].data());
      int best = 0;
      for (int k = 1; k < static_cast<int>(p.size()); ++k)
        if (p[k] > p[best]) best = k;
      hit[i] = (best == labels[idx[i]]) ? 1 : 0;
    }
  });
  const int total = std::accumulate(hit.begin(), hit.end(), 0);
  return static_cast<double>(total) / static_cast<double>(idx.size());
}

}  // namespace

std::vector<EpochMetrics> train(CnnModel& model, const std::vector<NoiseTrack>& dataset,
                                const TrainConfig& config) {
  if (dataset.empty()) throw ParamError("train: empty dataset");
  if (config.epochs < 1) throw ParamError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ParamError("train: batch_size must be >= 1");
  if (config.learning_rate <= 0 || config.l2_coefficient < 0)
    throw ParamError("train: bad optimizer settings");

  auto& net = model.net();
  const int input_len = net.arch().input_len;
  const std::size_t n = dataset.size();

  std::vector<std::vector<float>> inputs(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!dataset[i].label) throw DataError("train: track " + std::to_string(dataset[i].id) + " has no label");
    labels[i] = *dataset[i].label;
    if (labels[i] < 0 || labels[i] >= net.arch().classes)
      throw DataError("train: label out of range on track " + std::to_string(dataset[i].id));
  }
  parallel_for(n, [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) inputs[i] = normalized_input(dataset[i].signal, input_len);
  });

  // Fixed 90/10 split by seeded shuffle.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(mix_seed(config.seed, 0));
  seeded_shuffle(order, split_rng);
  const std::size_t val_n = n / 10;
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_n), order.end());
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_n));
  // Tiny datasets keep everything for training and validate on it.
  const std::vector<std::size_t>& score_idx = val_idx.empty() ? train_idx : val_idx;

  cnn::AdamState<float> adam;
  adam.reset(net.params());

  std::vector<EpochMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(config.epochs));
  Snapshot best;
  double best_acc = -1.0;

  std::vector<const float*> batch_in;
  std::vector<int> batch_lab;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> sched = train_idx;
    seeded_shuffle(sched, epoch_rng);

    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t b0 = 0; b0 < sched.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t b1 = std::min(sched.size(), b0 + static_cast<std::size_t>(config.batch_size));
      batch_in.clear();
      batch_lab.clear();
      for (std::size_t i = b0; i < b1; ++i) {
        batch_in.push_back(inputs[sched[i]].data());
        batch_lab.push_back(labels[sched[i]]);
      }
      net.zero_grad();
      const float ce = net.train_batch(batch_in, batch_lab);
      const float l2 = net.apply_l2(static_cast<float>(config.l2_coefficient));
      cnn::adam_step(net.params(), adam, config.learning_rate, config.adam_beta1,
                     config.adam_beta2, config.adam_epsilon);
      loss_sum += static_cast<double>(ce) + static_cast<double>(l2);
      ++n_batches;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = (n_batches > 0) ? loss_sum / n_batches : 0.0;
    em.val_accuracy = accuracy_over(net, inputs, labels, score_idx);
    metrics.push_back(em);

    if (em.val_accuracy > best_acc) {
      best_acc = em.val_accuracy;
      best = Snapshot::take(net);
    }
  }

  if (!best.values.empty()) best.restore(net);
  return metrics;
}

double evaluate_accuracy(const CnnModel& model, const std::vector<NoiseTrack>& dataset) {
  if (dataset.empty()) throw ParamError("evaluate_accuracy: empty dataset");
  const auto& net = model.net();
  const int input_len = net.arch().input_len;
  std::vector<std::vector<float>> inputs(dataset.size());
  std::vector<int> labels(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].label) throw DataError("evaluate_accuracy: unlabeled track");
    labels[i] = *dataset[i].label;
  }
  parallel_for(dataset.size(), [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) inputs[i] = normalized_input(dataset[i].signal, input_len);
  });
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  return accuracy_over(net, inputs, labels, idx);
}

double run_scheme(Scheme scheme, const std::vector<NoiseTrack>& synthetic_train,
                  const std::vector<NoiseTrack>& real_train,
                  const std::vector<NoiseTrack>& real_test, const TrainConfig& config) {
  CnnModel model = build_default_model(mix_seed(config.seed, 0x6d6f64656cULL));
  switch (scheme) {
    case Scheme::SyntheticOnly:
      train(model, synthetic_train, config);
      break;
    case Scheme::RealOnly:
      train(model, real_train, config);
      break;
    case Scheme::FineTune: {
      train(model, synthetic_train, config);
      TrainConfig ft = config;
      ft.learning_rate = config.learning_rate * 0.1;
      ft.seed = mix_seed(config.seed, 0x66746e65ULL);
      train(model, real_train, ft);
      break;
    }
    case Scheme::Mixed: {
      std::vector<NoiseTrack> both = synthetic_train;
      both.insert(both.end(), real_train.begin(), real_train.end());
      train(model, both, config);
      break;
    }
  }
  return evaluate_accuracy(model, real_test);
}

// --- checkpoint --------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'F', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

json arch_to_json(const cnn::ArchDescriptor& a) {
  json j;
  j["input_len"] = a.input_len;
  j["classes"] = a.classes;
  j["conv1_kernel"] = a.conv1_kernel;
  j["conv1_stride"] = a.conv1_stride;
  j["conv1_pad"] = a.conv1_pad;
  j["block_kernel"] = a.block_kernel;
  j["pool"] = a.pool;
  j["widths"] = a.widths;
  return j;
}

cnn::ArchDescriptor arch_from_json(const json& j) {
  cnn::ArchDescriptor a;
  a.input_len = j.at("input_len").get<int>();
  a.classes = j.at("classes").get<int>();
  a.conv1_kernel = j.at("conv1_kernel").get<int>();
  a.conv1_stride = j.at("conv1_stride").get<int>();
  a.conv1_pad = j.at("conv1_pad").get<int>();
  a.block_kernel = j.at("block_kernel").get<int>();
  a.pool = j.at("pool").get<int>();
  a.widths = j.at("widths").get<std::vector<int>>();
  return a;
}

template <typename T>
void append_raw(std::string& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

}  // namespace

void save_model(const CnnModel& model, const std::string& path) {
  const auto& net = model.net();

  std::string payload;
  std::size_t n_floats = 0;
  for (const auto& p : net.params()) n_floats += p.size;
  for (const auto& [name, buf] : const_cast<cnn::Network<float>&>(net).buffers())
    n_floats += static_cast<std::size_t>(buf->size());
  payload.reserve(n_floats * 4);
  for (const auto& p : net.params())
    payload.append(reinterpret_cast<const char*>(p.data), p.size * 4);
  for (const auto& [name, buf] : const_cast<cnn::Network<float>&>(net).buffers())
    payload.append(reinterpret_cast<const char*>(buf->data()), static_cast<std::size_t>(buf->size()) * 4);

  const std::string arch = arch_to_json(net.arch()).dump();

  std::string out;
  out.append(kMagic, 4);
  append_raw(out, kVersion);
  append_raw(out, static_cast<std::uint32_t>(arch.size()));
  out.append(arch);
  append_raw(out, static_cast<std::uint64_t>(n_floats));
  out.append(payload);
  append_raw(out, fnv1a64(payload.data(), payload.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("save_model: cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("save_model: write failed for " + path);
}

CnnModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_model: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  std::size_t off = 0;
  auto need = [&](std::size_t k) {
    if (off + k > buf.size()) throw DataError("load_model: corrupt checkpoint (truncated): " + path);
  };
  need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError("load_model: corrupt checkpoint (bad magic): " + path);
  off = 4;

  auto read_u32 = [&]() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + off, 4);
    off += 4;
    return v;
  };
  auto read_u64 = [&]() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + off, 8);
    off += 8;
    return v;
  };

  const std::uint32_t version = read_u32();
  if (version != kVersion)
    throw DataError("load_model: unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t arch_len = read_u32();
  need(arch_len);
  cnn::ArchDescriptor arch;
  try {
    arch = arch_from_json(json::parse(buf.substr(off, arch_len)));
  } catch (const json::exception& e) {
    throw DataError(std::string("load_model: corrupt architecture descriptor: ") + e.what());
  }
  off += arch_len;

  CnnModel model(arch, 0);
  auto& net = model.net();
  std::size_t expect = 0;
  for (const auto& p : net.params()) expect += p.size;
  for (const auto& [name, b] : net.buffers()) expect += static_cast<std::size_t>(b->size());

  const std::uint64_t n_floats = read_u64();
  if (n_floats != expect)
    throw DataError("load_model: shape mismatch, checkpoint has " + std::to_string(n_floats) +
                    " parameters but the architecture needs " + std::to_string(expect));
  need(n_floats * 4);
  const char* payload = buf.data() + off;
  const std::size_t payload_bytes = n_floats * 4;
  off += payload_bytes;
  const std::uint64_t checksum = read_u64();
  if (fnv1a64(payload, payload_bytes) != checksum)
    throw DataError("load_model: corrupt checkpoint (checksum failure): " + path);

  std::size_t foff = 0;
  for (auto& p : net.params()) {
    std::memcpy(p.data, payload + foff * 4, p.size * 4);
    foff += p.size;
  }
  for (auto& [name, b] : net.buffers()) {
    std::memcpy(b->data(), payload + foff * 4, static_cast<std::size_t>(b->size()) * 4);
    foff += static_cast<std::size_t>(b->size());
  }
  return model;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("write_metrics_csv: cannot write " + path);
  f << "epoch,train_loss,val_accuracy\n";
  char line[96];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g\n", m.epoch, m.train_loss, m.val_accuracy);
    f << line;
  }
}

}  // namespace sfanc
