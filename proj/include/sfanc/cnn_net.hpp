#pragma once

// From-scratch 1D CNN used by the filter-index classifier. Everything is
// templated on the scalar type: float for production, double for the
// finite-difference gradient tests.
//
// Batch processing runs layer by layer; within a layer, samples are
// data-parallel with per-sample partial buffers. All cross-sample reductions
// (batch-norm statistics, weight gradients) happen on the calling thread in
// sample order, so results do not depend on the thread count.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sfanc/errors.hpp"
#include "sfanc/parallel.hpp"
#include "sfanc/rng.hpp"

namespace sfanc::cnn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;  // col-major: (channels, length)
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ArchDescriptor {
  int input_len = 16000;
  int classes = 15;
  int conv1_kernel = 63;
  int conv1_stride = 4;
  int conv1_pad = 31;
  int block_kernel = 3;
  int pool = 4;                             // stride-4 max pool between blocks
  std::vector<int> widths = {44, 88, 176};  // one residual block per entry

  bool operator==(const ArchDescriptor&) const = default;
};

template <typename T>
struct ParamRef {
  std::string name;
  T* data = nullptr;
  T* grad = nullptr;
  std::size_t size = 0;
  bool weight_decay = false;  // L2 applies to conv/FC weights only
};

// ---------------------------------------------------------------------------

template <typename T>
struct Conv1d {
  int c_in = 0, c_out = 0, kernel = 0, stride = 1, pad = 0;
  int l_in = 0, l_out = 0;
  Mat<T> W;  // (c_out, c_in*kernel)
  Vec<T> b;
  Mat<T> dW;
  Vec<T> db;

  void configure(int ci, int co, int k, int s, int p, int li) {
    c_in = ci; c_out = co; kernel = k; stride = s; pad = p; l_in = li;
    l_out = (li + 2 * p - k) / s + 1;
    if (l_out < 1) throw ParamError("cnn: conv output would be empty");
    W.setZero(co, static_cast<Eigen::Index>(ci) * k);
    b.setZero(co);
    dW.setZero(co, static_cast<Eigen::Index>(ci) * k);
    db.setZero(co);
  }

  void init(Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(c_in) * kernel +
                                          static_cast<double>(c_out) * kernel));
    T* p = W.data();
    for (Eigen::Index i = 0; i < W.size(); ++i) p[i] = static_cast<T>(rng.uniform(-limit, limit));
    b.setZero();
  }

  // Only strided convs go through the column matrix; unit-stride convs run as
  // one GEMM per tap directly on the input.
  void im2col(const Mat<T>& x, Mat<T>& cols) const {
    cols.resize(static_cast<Eigen::Index>(c_in) * kernel, l_out);
    if (c_in == 1) {
      const T* xp = x.data();
      T* cp = cols.data();
      for (int j = 0; j < l_out; ++j) {
        const int base = j * stride - pad;
        T* col = cp + static_cast<std::ptrdiff_t>(j) * kernel;
        for (int t = 0; t < kernel; ++t) {
          const int src = base + t;
          col[t] = (src >= 0 && src < l_in) ? xp[src] : static_cast<T>(0);
        }
      }
    } else {
      cols.setZero();
      for (int t = 0; t < kernel; ++t) {
        for (int j = 0; j < l_out; ++j) {
          const int src = j * stride + t - pad;
          if (src >= 0 && src < l_in)
            cols.col(j).segment(static_cast<Eigen::Index>(t) * c_in, c_in) = x.col(src);
        }
      }
    }
  }

  void forward(const Mat<T>& x, Mat<T>& cols, Mat<T>& y) const {
    y.resize(c_out, l_out);
    if (stride == 1) {
      // One GEMM per tap directly on the input; no column matrix needed.
      y.colwise() = b;
      for (int t = 0; t < kernel; ++t) {
        const int j0 = std::max(0, pad - t);
        const int j1 = std::min(l_out, l_in + pad - t);
        if (j0 < j1)
          y.middleCols(j0, j1 - j0).noalias() +=
              W.middleCols(static_cast<Eigen::Index>(t) * c_in, c_in) *
              x.middleCols(j0 + t - pad, j1 - j0);
      }
    } else {
      im2col(x, cols);
      y.noalias() = W * cols;
      y.colwise() += b;
    }
  }

  // Accumulates this sample's weight gradient into dW_p/db_p; dx is optional.
  void backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>& cols, Mat<T>& dcols,
                Mat<T>& dW_p, Vec<T>& db_p, Mat<T>* dx) const {
    db_p += dy.rowwise().sum();
    if (stride == 1) {
      for (int t = 0; t < kernel; ++t) {
        const int j0 = std::max(0, pad - t);
        const int j1 = std::min(l_out, l_in + pad - t);
        if (j0 >= j1) continue;
        dW_p.middleCols(static_cast<Eigen::Index>(t) * c_in, c_in).noalias() +=
            dy.middleCols(j0, j1 - j0) * x.middleCols(j0 + t - pad, j1 - j0).transpose();
      }
      if (dx == nullptr) return;
      dx->setZero(c_in, l_in);
      for (int t = 0; t < kernel; ++t) {
        const int j0 = std::max(0, pad - t);
        const int j1 = std::min(l_out, l_in + pad - t);
        if (j0 >= j1) continue;
        dx->middleCols(j0 + t - pad, j1 - j0).noalias() +=
            W.middleCols(static_cast<Eigen::Index>(t) * c_in, c_in).transpose() *
            dy.middleCols(j0, j1 - j0);
      }
      return;
    }
    im2col(x, cols);
    dW_p.noalias() += dy * cols.transpose();
    if (dx == nullptr) return;
    dcols.resize(static_cast<Eigen::Index>(c_in) * kernel, l_out);
    dcols.noalias() = W.transpose() * dy;
    dx->setZero(c_in, l_in);
    for (int t = 0; t < kernel; ++t) {
      for (int j = 0; j < l_out; ++j) {
        const int src = j * stride + t - pad;
        if (src >= 0 && src < l_in)
          dx->col(src) += dcols.col(j).segment(static_cast<Eigen::Index>(t) * c_in, c_in);
      }
    }
  }

  void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    out.push_back({prefix + ".W", W.data(), dW.data(), static_cast<std::size_t>(W.size()), true});
    out.push_back({prefix + ".b", b.data(), db.data(), static_cast<std::size_t>(b.size()), false});
  }
};

// ---------------------------------------------------------------------------

template <typename T>
struct BatchNorm1d {
  int c = 0;
  T eps = static_cast<T>(1e-5);
  T momentum = static_cast<T>(0.1);
  Vec<T> gamma, beta, dgamma, dbeta;
  Vec<T> running_mean, running_var;
  Vec<T> mean, invstd;  // batch stats of the current training step

  void configure(int channels) {
    c = channels;
    gamma.setOnes(c);
    beta.setZero(c);
    dgamma.setZero(c);
    dbeta.setZero(c);
    running_mean.setZero(c);
    running_var.setOnes(c);
    mean.setZero(c);
    invstd.setZero(c);
  }

  void forward_train(const std::vector<Mat<T>*>& xs, const std::vector<Mat<T>*>& ys,
                     const std::vector<Mat<T>*>& xhat, std::size_t n) {
    const Eigen::Index len = xs[0]->cols();
    const T n_total = static_cast<T>(static_cast<double>(len) * static_cast<double>(n));

    std::vector<Vec<T>> partial(n);
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) partial[s] = xs[s]->rowwise().sum();
    });
    mean.setZero(c);
    for (std::size_t s = 0; s < n; ++s) mean += partial[s];
    mean /= n_total;

    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s)
        partial[s] = (xs[s]->colwise() - mean).array().square().matrix().rowwise().sum();
    });
    Vec<T> var = Vec<T>::Zero(c);
    for (std::size_t s = 0; s < n; ++s) var += partial[s];
    var /= n_total;

    invstd = (var.array() + eps).rsqrt();
    running_mean = (static_cast<T>(1) - momentum) * running_mean + momentum * mean;
    running_var = (static_cast<T>(1) - momentum) * running_var + momentum * var;

    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        *xhat[s] = (xs[s]->colwise() - mean).array().colwise() * invstd.array();
        *ys[s] = (xhat[s]->array().colwise() * gamma.array()).colwise() + beta.array();
      }
    });
  }

  // Gradient through the batch statistics. dys may alias dxs.
  void backward(const std::vector<Mat<T>*>& xhat, const std::vector<Mat<T>*>& dys,
                const std::vector<Mat<T>*>& dxs, std::size_t n) {
    const Eigen::Index len = dys[0]->cols();
    const T n_total = static_cast<T>(static_cast<double>(len) * static_cast<double>(n));

    std::vector<Vec<T>> pg(n), pb(n);
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        pg[s] = (dys[s]->array() * xhat[s]->array()).matrix().rowwise().sum();
        pb[s] = dys[s]->rowwise().sum();
      }
    });
    Vec<T> sg = Vec<T>::Zero(c), sb = Vec<T>::Zero(c);
    for (std::size_t s = 0; s < n; ++s) {
      sg += pg[s];
      sb += pb[s];
    }
    dgamma += sg;
    dbeta += sb;

    const Vec<T> gi = (gamma.array() * invstd.array() / n_total).matrix();
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        Mat<T>& dx = *dxs[s];
        if (&dx != dys[s]) dx = *dys[s];
        dx *= n_total;
        dx.colwise() -= sb;
        dx -= (xhat[s]->array().colwise() * sg.array()).matrix();
        dx.array().colwise() *= gi.array();
      }
    });
  }

  void forward_eval(const Mat<T>& x, Mat<T>& y) const {
    const Vec<T> inv = (running_var.array() + eps).rsqrt().matrix();
    const Vec<T> scale = (gamma.array() * inv.array()).matrix();
    const Vec<T> shift = (beta.array() - running_mean.array() * scale.array()).matrix();
    y = (x.array().colwise() * scale.array()).colwise() + shift.array();
  }

  void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", gamma.data(), dgamma.data(), static_cast<std::size_t>(c), false});
    out.push_back({prefix + ".beta", beta.data(), dbeta.data(), static_cast<std::size_t>(c), false});
  }

  void collect_buffers(std::vector<std::pair<std::string, Vec<T>*>>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".running_mean", &running_mean);
    out.emplace_back(prefix + ".running_var", &running_var);
  }
};

// ---------------------------------------------------------------------------

template <typename T>
inline void relu_inplace(Mat<T>& x) {
  x = x.cwiseMax(static_cast<T>(0));
}

// Masks d by the post-activation sign.
template <typename T>
inline void relu_backward(const Mat<T>& y_post, Mat<T>& d) {
  d.array() *= (y_post.array() > static_cast<T>(0)).template cast<T>();
}

template <typename T>
struct MaxPool1d {
  int c = 0, window = 0, l_in = 0, l_out = 0;

  void configure(int channels, int w, int li) {
    c = channels;
    window = w;
    l_in = li;
    l_out = li / w;
  }

  void forward(const Mat<T>& x, Mat<T>& y, std::vector<int>& idx) const {
    y.resize(c, l_out);
    idx.assign(static_cast<std::size_t>(c) * l_out, 0);
    for (int j = 0; j < l_out; ++j) {
      for (int ch = 0; ch < c; ++ch) {
        T best = x(ch, j * window);
        int arg = 0;
        for (int t = 1; t < window; ++t) {
          const T v = x(ch, j * window + t);
          if (v > best) {
            best = v;
            arg = t;
          }
        }
        y(ch, j) = best;
        idx[static_cast<std::size_t>(j) * c + ch] = arg;
      }
    }
  }

  void backward(const Mat<T>& dy, const std::vector<int>& idx, Mat<T>& dx) const {
    dx.setZero(c, l_in);
    for (int j = 0; j < l_out; ++j)
      for (int ch = 0; ch < c; ++ch)
        dx(ch, j * window + idx[static_cast<std::size_t>(j) * c + ch]) = dy(ch, j);
  }
};

// ---------------------------------------------------------------------------

template <typename T>
struct ResidualBlock {
  int c_in = 0, c_out = 0, len = 0;
  bool projects = false;
  Conv1d<T> conv_a, conv_b, conv_sc;
  BatchNorm1d<T> bn_a, bn_b, bn_sc;

  void configure(int ci, int co, int k, int li) {
    c_in = ci;
    c_out = co;
    len = li;
    projects = (ci != co);
    conv_a.configure(ci, co, k, 1, (k - 1) / 2, li);
    bn_a.configure(co);
    conv_b.configure(co, co, k, 1, (k - 1) / 2, li);
    bn_b.configure(co);
    if (projects) {
      conv_sc.configure(ci, co, 1, 1, 0, li);
      bn_sc.configure(co);
    }
  }

  void init(Rng& rng) {
    conv_a.init(rng);
    conv_b.init(rng);
    if (projects) conv_sc.init(rng);
  }

  void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    conv_a.collect(out, prefix + ".conv_a");
    bn_a.collect(out, prefix + ".bn_a");
    conv_b.collect(out, prefix + ".conv_b");
    bn_b.collect(out, prefix + ".bn_b");
    if (projects) {
      conv_sc.collect(out, prefix + ".conv_sc");
      bn_sc.collect(out, prefix + ".bn_sc");
    }
  }

  void collect_buffers(std::vector<std::pair<std::string, Vec<T>*>>& out, const std::string& prefix) {
    bn_a.collect_buffers(out, prefix + ".bn_a");
    bn_b.collect_buffers(out, prefix + ".bn_b");
    if (projects) bn_sc.collect_buffers(out, prefix + ".bn_sc");
  }
};

// ---------------------------------------------------------------------------

// Batch-norm runs in place on the conv output, so each stage keeps only the
// post-activation tensor plus the normalized cache for backward.
template <typename T>
struct BlockCache {
  Mat<T> a_post, a_xhat;   // conv_a output, normalized + relu'd in place
  Mat<T> sum_post, b_xhat; // conv_b output -> bn_b -> + shortcut -> relu
  Mat<T> sc_bn, sc_xhat;   // projection shortcut after its bn
  Mat<T> d1, d2, d3;       // backward scratch
};

template <typename T>
struct SampleCache {
  Mat<T> input;  // (1, input_len)
  Mat<T> bn1_post, bn1_xhat;  // conv1 output, normalized + relu'd in place
  std::vector<Mat<T>> pooled;
  std::vector<std::vector<int>> pool_idx;
  std::vector<BlockCache<T>> blocks;
  Vec<T> gap;
  Vec<T> probs;
  Mat<T> cols, dcols;  // scratch for the strided stem conv
  Mat<T> dstage;       // gradient flowing between stages
};

template <typename T>
class Network {
 public:
  Network(const ArchDescriptor& arch, std::uint64_t seed) : arch_(arch) {
    if (arch.widths.empty()) throw ParamError("cnn: need at least one residual block");

    conv1_.configure(1, arch.widths[0], arch.conv1_kernel, arch.conv1_stride, arch.conv1_pad,
                     arch.input_len);
    bn1_.configure(arch.widths[0]);
    int len = conv1_.l_out;
    blocks_.resize(arch.widths.size());
    pools_.resize(arch.widths.size() - 1);
    int ci = arch.widths[0];
    for (std::size_t bi = 0; bi < arch.widths.size(); ++bi) {
      blocks_[bi].configure(ci, arch.widths[bi], arch.block_kernel, len);
      ci = arch.widths[bi];
      if (bi + 1 < arch.widths.size()) {
        pools_[bi].configure(ci, arch.pool, len);
        len = pools_[bi].l_out;
        if (len < 1) throw ParamError("cnn: input too short for the pooling chain");
      }
    }
    last_len_ = len;
    fc_.configure(ci, arch.classes, 1, 1, 0, 1);

    Rng rng(seed);
    conv1_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    fc_.init(rng);

    conv1_.collect(params_, "conv1");
    bn1_.collect(params_, "bn1");
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi)
      blocks_[bi].collect(params_, "block" + std::to_string(bi));
    fc_.collect(params_, "fc");
    bn1_.collect_buffers(buffers_, "bn1");
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi)
      blocks_[bi].collect_buffers(buffers_, "block" + std::to_string(bi));
  }

  // Param references point into layer storage; the network is not copyable.
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const ArchDescriptor& arch() const { return arch_; }
  std::vector<ParamRef<T>>& params() { return params_; }
  const std::vector<ParamRef<T>>& params() const { return params_; }
  std::vector<std::pair<std::string, Vec<T>*>>& buffers() { return buffers_; }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.size;
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad, p.grad + p.size, static_cast<T>(0));
  }

  // --- inference (running statistics; thread-safe, no caches touched) -------

  Vec<T> forward_eval(const T* x) const {
    Mat<T> stage(1, arch_.input_len);
    for (int i = 0; i < arch_.input_len; ++i) stage(0, i) = x[i];

    Mat<T> cols, y, t;
    conv1_.forward(stage, cols, y);
    bn1_.forward_eval(y, stage);
    relu_inplace(stage);

    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& blk = blocks_[bi];
      blk.conv_a.forward(stage, cols, y);
      blk.bn_a.forward_eval(y, t);
      relu_inplace(t);
      blk.conv_b.forward(t, cols, y);
      Mat<T> main;
      blk.bn_b.forward_eval(y, main);
      if (blk.projects) {
        blk.conv_sc.forward(stage, cols, y);
        blk.bn_sc.forward_eval(y, t);
        main += t;
      } else {
        main += stage;
      }
      relu_inplace(main);
      stage.swap(main);
      if (bi + 1 < blocks_.size()) {
        Mat<T> pooled;
        std::vector<int> idx;
        pools_[bi].forward(stage, pooled, idx);
        stage.swap(pooled);
      }
    }

    const Vec<T> gap = stage.rowwise().mean();
    Vec<T> logits = fc_.W * gap + fc_.b;
    return softmax(logits);
  }

  // --- training --------------------------------------------------------------

  // Forward + backward over a batch; accumulates gradients and returns the
  // mean cross-entropy (L2 not included; see apply_l2).
  T train_batch(const std::vector<const T*>& inputs, const std::vector<int>& labels) {
    const std::size_t n = inputs.size();
    if (n == 0 || labels.size() != n) throw ParamError("cnn: bad batch");
    for (int lab : labels)
      if (lab < 0 || lab >= arch_.classes) throw ParamError("cnn: label out of range");
    ensure_caches(n);

    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        auto& c = cache_[s];
        c.input.resize(1, arch_.input_len);
        for (int i = 0; i < arch_.input_len; ++i) c.input(0, i) = inputs[s][i];
        conv1_.forward(c.input, c.cols, c.bn1_post);
      }
    });
    bn1_.forward_train(view([](SampleCache<T>& c) -> Mat<T>& { return c.bn1_post; }, n),
                       view([](SampleCache<T>& c) -> Mat<T>& { return c.bn1_post; }, n),
                       view([](SampleCache<T>& c) -> Mat<T>& { return c.bn1_xhat; }, n), n);
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) relu_inplace(cache_[s].bn1_post);
    });

    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      auto& blk = blocks_[bi];
      auto in_of = [bi](SampleCache<T>& c) -> Mat<T>& {
        return bi == 0 ? c.bn1_post : c.pooled[bi - 1];
      };
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          auto& c = cache_[s];
          blk.conv_a.forward(in_of(c), c.cols, c.blocks[bi].a_post);
        }
      });
      blk.bn_a.forward_train(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].a_post; }, n),
                             view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].a_post; }, n),
                             view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].a_xhat; }, n), n);
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          auto& c = cache_[s];
          relu_inplace(c.blocks[bi].a_post);
          blk.conv_b.forward(c.blocks[bi].a_post, c.cols, c.blocks[bi].sum_post);
        }
      });
      blk.bn_b.forward_train(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sum_post; }, n),
                             view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sum_post; }, n),
                             view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].b_xhat; }, n), n);
      if (blk.projects) {
        parallel_for(n, [&](std::size_t s0, std::size_t s1) {
          for (std::size_t s = s0; s < s1; ++s) {
            auto& c = cache_[s];
            blk.conv_sc.forward(in_of(c), c.cols, c.blocks[bi].sc_bn);
          }
        });
        blk.bn_sc.forward_train(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sc_bn; }, n),
                                view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sc_bn; }, n),
                                view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sc_xhat; }, n), n);
      }
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          auto& c = cache_[s];
          if (blk.projects) {
            c.blocks[bi].sum_post += c.blocks[bi].sc_bn;
          } else {
            c.blocks[bi].sum_post += in_of(c);
          }
          relu_inplace(c.blocks[bi].sum_post);
          if (bi + 1 < blocks_.size())
            pools_[bi].forward(c.blocks[bi].sum_post, c.pooled[bi], c.pool_idx[bi]);
        }
      });
    }

    const std::size_t last = blocks_.size() - 1;
    std::vector<T> losses(n);
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        auto& c = cache_[s];
        const Mat<T>& feat = c.blocks[last].sum_post;
        c.gap = feat.rowwise().mean();
        Vec<T> logits = fc_.W * c.gap + fc_.b;
        c.probs = softmax(logits);
        losses[s] = -std::log(std::max(c.probs[labels[s]], std::numeric_limits<T>::min()));
      }
    });
    T loss = 0;
    for (std::size_t s = 0; s < n; ++s) loss += losses[s];
    loss /= static_cast<T>(n);

    backward(labels, n);
    return loss;
  }

  // L2 penalty over decay-eligible weights; adds 2*l2*w to their gradients.
  T apply_l2(T l2_coefficient) {
    if (l2_coefficient == static_cast<T>(0)) return 0;
    T penalty = 0;
    for (auto& p : params_) {
      if (!p.weight_decay) continue;
      for (std::size_t i = 0; i < p.size; ++i) {
        penalty += p.data[i] * p.data[i];
        p.grad[i] += 2 * l2_coefficient * p.data[i];
      }
    }
    return l2_coefficient * penalty;
  }

  static Vec<T> softmax(const Vec<T>& logits) {
    const T m = logits.maxCoeff();
    Vec<T> e = (logits.array() - m).exp();
    return e / e.sum();
  }

 private:
  void backward(const std::vector<int>& labels, std::size_t n) {
    const std::size_t last = blocks_.size() - 1;
    const T inv_n = static_cast<T>(1) / static_cast<T>(n);

    // head: softmax-CE -> FC -> GAP
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        auto& c = cache_[s];
        Vec<T> dlogits = c.probs;
        dlogits[labels[s]] -= 1;
        dlogits *= inv_n;
        fc_dW_[s] = dlogits * c.gap.transpose();
        fc_db_[s] = dlogits;
        const Vec<T> dgap = fc_.W.transpose() * dlogits;
        const Mat<T>& feat = c.blocks[last].sum_post;
        const T inv_len = static_cast<T>(1) / static_cast<T>(feat.cols());
        c.dstage = (dgap * inv_len).replicate(1, feat.cols());
      }
    });
    for (std::size_t s = 0; s < n; ++s) {
      fc_.dW += fc_dW_[s];
      fc_.db += fc_db_[s];
    }

    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
      auto& blk = blocks_[bi];
      auto in_of = [bi](SampleCache<T>& c) -> Mat<T>& {
        return bi == 0 ? c.bn1_post : c.pooled[bi - 1];
      };
      if (bi + 1 < blocks_.size()) {
        parallel_for(n, [&](std::size_t s0, std::size_t s1) {
          for (std::size_t s = s0; s < s1; ++s) {
            auto& c = cache_[s];
            pools_[bi].backward(c.dstage, c.pool_idx[bi], c.blocks[bi].d1);
            c.dstage.swap(c.blocks[bi].d1);
          }
        });
      }
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s)
          relu_backward(cache_[s].blocks[bi].sum_post, cache_[s].dstage);
      });

      // main branch
      blk.bn_b.backward(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].b_xhat; }, n),
                        view([bi](SampleCache<T>& c) -> Mat<T>& { return c.dstage; }, n),
                        view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].d1; }, n), n);
      zero_partials(blk.conv_b);
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          auto& c = cache_[s];
          blk.conv_b.backward(c.blocks[bi].a_post, c.blocks[bi].d1, c.cols, c.dcols,
                              conv_dW_[s], conv_db_[s], &c.blocks[bi].d2);
          relu_backward(c.blocks[bi].a_post, c.blocks[bi].d2);
        }
      });
      reduce_partials(blk.conv_b, n);
      blk.bn_a.backward(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].a_xhat; }, n),
                        view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].d2; }, n),
                        view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].d1; }, n), n);
      zero_partials(blk.conv_a);
      parallel_for(n, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          auto& c = cache_[s];
          blk.conv_a.backward(in_of(c), c.blocks[bi].d1, c.cols, c.dcols, conv_dW_[s], conv_db_[s],
                              &c.blocks[bi].d2);
        }
      });
      reduce_partials(blk.conv_a, n);

      if (blk.projects) {
        blk.bn_sc.backward(view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].sc_xhat; }, n),
                           view([bi](SampleCache<T>& c) -> Mat<T>& { return c.dstage; }, n),
                           view([bi](SampleCache<T>& c) -> Mat<T>& { return c.blocks[bi].d3; }, n), n);
        zero_partials(blk.conv_sc);
        parallel_for(n, [&](std::size_t s0, std::size_t s1) {
          for (std::size_t s = s0; s < s1; ++s) {
            auto& c = cache_[s];
            blk.conv_sc.backward(in_of(c), c.blocks[bi].d3, c.cols, c.dcols, conv_dW_[s],
                                 conv_db_[s], &c.blocks[bi].d1);
            c.dstage = c.blocks[bi].d2 + c.blocks[bi].d1;
          }
        });
        reduce_partials(blk.conv_sc, n);
      } else {
        parallel_for(n, [&](std::size_t s0, std::size_t s1) {
          for (std::size_t s = s0; s < s1; ++s) cache_[s].dstage += cache_[s].blocks[bi].d2;
        });
      }
    }

    // stem: bn1's input gradient is computed in place on dstage
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) relu_backward(cache_[s].bn1_post, cache_[s].dstage);
    });
    bn1_.backward(view([](SampleCache<T>& c) -> Mat<T>& { return c.bn1_xhat; }, n),
                  view([](SampleCache<T>& c) -> Mat<T>& { return c.dstage; }, n),
                  view([](SampleCache<T>& c) -> Mat<T>& { return c.dstage; }, n), n);
    zero_partials(conv1_);
    parallel_for(n, [&](std::size_t s0, std::size_t s1) {
      for (std::size_t s = s0; s < s1; ++s) {
        auto& c = cache_[s];
        conv1_.backward(c.input, c.dstage, c.cols, c.dcols, conv_dW_[s], conv_db_[s], nullptr);
      }
    });
    reduce_partials(conv1_, n);
  }

  template <typename F>
  std::vector<Mat<T>*> view(F sel, std::size_t n) {
    std::vector<Mat<T>*> v(n);
    for (std::size_t s = 0; s < n; ++s) v[s] = &sel(cache_[s]);
    return v;
  }

  void zero_partials(const Conv1d<T>& conv) {
    for (auto& m : conv_dW_) m.setZero(conv.W.rows(), conv.W.cols());
    for (auto& v : conv_db_) v.setZero(conv.b.size());
  }

  void reduce_partials(Conv1d<T>& conv, std::size_t n) {
    for (std::size_t s = 0; s < n; ++s) {
      conv.dW += conv_dW_[s];
      conv.db += conv_db_[s];
    }
  }

  void ensure_caches(std::size_t n) {
    if (cache_.size() < n) {
      cache_.resize(n);
      for (auto& c : cache_) {
        c.blocks.resize(blocks_.size());
        c.pooled.resize(pools_.size());
        c.pool_idx.resize(pools_.size());
      }
      conv_dW_.resize(n);
      conv_db_.resize(n);
      fc_dW_.resize(n);
      fc_db_.resize(n);
    }
  }

  ArchDescriptor arch_;
  Conv1d<T> conv1_;
  BatchNorm1d<T> bn1_;
  std::vector<ResidualBlock<T>> blocks_;
  std::vector<MaxPool1d<T>> pools_;
  Conv1d<T> fc_;  // dense head: W is (classes, c_last)
  int last_len_ = 0;

  std::vector<SampleCache<T>> cache_;
  std::vector<Mat<T>> conv_dW_, fc_dW_;
  std::vector<Vec<T>> conv_db_, fc_db_;
  std::vector<ParamRef<T>> params_;
  std::vector<std::pair<std::string, Vec<T>*>> buffers_;
};

// ---------------------------------------------------------------------------

// Standard Adam with bias correction, applied over the parameter registry.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::int64_t t = 0;

  void reset(const std::vector<ParamRef<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.size, static_cast<T>(0));
      v.emplace_back(p.size, static_cast<T>(0));
    }
    t = 0;
  }
};

template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, AdamState<T>& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != params.size()) throw ParamError("adam: state/parameter mismatch");
  state.t += 1;
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(state.t)));
  const T bc2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(state.t)));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (state.m[pi].size() != p.size) throw ParamError("adam: shape mismatch");
    T* m = state.m[pi].data();
    T* v = state.v[pi].data();
    for (std::size_t i = 0; i < p.size; ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (1 - b1) * g;
      v[i] = b2 * v[i] + (1 - b2) * g * g;
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      p.data[i] -= static_cast<T>(lr) * mhat / (std::sqrt(vhat) + static_cast<T>(eps));
    }
  }
}

}  // namespace sfanc::cnn
