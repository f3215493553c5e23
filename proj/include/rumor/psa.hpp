#pragma once

// Style-aggregating classifier: a bag-of-words MLP over the instance text,
// optionally augmented with a publisher style vector extracted by a
// multi-window CNN from the aggregated embedding matrices of the publisher's
// accessible source posts.

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rumor/corpus.hpp"
#include "rumor/features.hpp"
#include "rumor/nn.hpp"
#include "rumor/splits.hpp"

namespace rumor {

enum class Encoder { kRootText, kMeanText };
enum class AggrMode { kNone, kSum, kMean };

const char* encoder_to_string(Encoder encoder);
Encoder encoder_from_string(std::string_view s);
const char* aggr_to_string(AggrMode mode);
AggrMode aggr_from_string(std::string_view s);

struct PsaConfig {
  Encoder encoder = Encoder::kMeanText;
  AggrMode aggr = AggrMode::kNone;

  std::size_t vocab_cap = kDefaultVocabCap;
  std::size_t embed_dim = 300;       // d
  std::size_t max_tokens = 50;       // L, truncate/pad length per post
  std::size_t filters = 100;         // F per window size
  std::array<std::size_t, 3> windows{3, 4, 5};
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;          // n; also the style projection width

  double dropout = 0.5;
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;

  std::string embeddings_path;  // optional pretrained word vectors

  std::string model_name() const;
};

std::string psa_config_to_json(const PsaConfig& config);
PsaConfig psa_config_from_json(const std::string& text);

// Post indices whose source text feeds the publisher matrix for `instance`:
// the publisher's training-split posts, plus the instance's own source post
// when the instance is not itself in the training split.
std::vector<std::size_t> accessible_posts(const std::string& publisher_id,
                                          const SplitSpec& split,
                                          const MicroblogInstance& instance,
                                          const Corpus& corpus);

// Precomputed lookups for one (corpus, split, vocabulary, config) tuple:
// split membership, per-publisher training posts, instance encodings, and
// source-post token ids padded to config.max_tokens.
struct PsaContext {
  const Corpus* corpus = nullptr;
  std::vector<int> part;  // 0 train / 1 validation / 2 test / -1 unassigned
  std::unordered_map<std::string, std::vector<std::size_t>> publisher_train_posts;
  std::vector<std::map<std::uint32_t, double>> encoded;
  std::vector<std::vector<std::uint32_t>> padded_tokens;  // pad id == vocab size

  static PsaContext build(const Corpus& corpus, const SplitSpec& split,
                          const Vocabulary& vocab, const PsaConfig& config);

  std::vector<std::size_t> accessible(std::size_t instance_index) const;
};

// Whitespace-delimited "token v1 .. vd" lines; returns vocab row -> vector.
std::map<std::uint32_t, std::vector<double>> load_embedding_file(
    const std::string& path, const Vocabulary& vocab, std::size_t dim);

template <class T>
class PsaModelT {
 public:
  PsaModelT(const PsaConfig& config, const Vocabulary& vocab, std::uint64_t seed)
      : config_(config), vocab_(vocab), init_seed_(seed) {
    const std::size_t v = vocab_.size();
    const std::size_t d = config_.embed_dim;
    if (config_.aggr != AggrMode::kNone) {
      for (std::size_t k : config_.windows) {
        if (config_.max_tokens < k) {
          throw Error("max_tokens must be >= the largest convolution window");
        }
      }
    }
    Rng rng(seed);

    mlp_w1_ = nn::Param<T>("mlp_w1", {v, config_.hidden1});
    mlp_b1_ = nn::Param<T>("mlp_b1", {config_.hidden1});
    mlp_w2_ = nn::Param<T>("mlp_w2", {config_.hidden1, config_.hidden2});
    mlp_b2_ = nn::Param<T>("mlp_b2", {config_.hidden2});
    out_w_ = nn::Param<T>("out_w", {config_.hidden2, static_cast<std::size_t>(kNumClasses)});
    glorot_init(mlp_w1_, v, config_.hidden1, rng);
    glorot_init(mlp_w2_, config_.hidden1, config_.hidden2, rng);
    glorot_init(out_w_, config_.hidden2, static_cast<std::size_t>(kNumClasses), rng);

    if (config_.aggr != AggrMode::kNone) {
      embeddings_ = nn::Param<T>("embeddings", {v + 1, d});  // last row = pad, frozen zero
      for (std::size_t i = 0; i < v * d; ++i) {
        embeddings_.value.data[i] = static_cast<T>(rng.uniform(-0.1, 0.1));
      }
      if (!config_.embeddings_path.empty()) {
        for (const auto& [row, vec] : load_embedding_file(config_.embeddings_path, vocab_, d)) {
          for (std::size_t j = 0; j < d; ++j) {
            embeddings_.value.at2(row, j) = static_cast<T>(vec[j]);
          }
        }
      }
      for (std::size_t w = 0; w < config_.windows.size(); ++w) {
        const std::size_t k = config_.windows[w];
        conv_kernels_[w] = nn::Param<T>("conv" + std::to_string(k) + "_kernels",
                                        {config_.filters, k, d});
        conv_bias_[w] = nn::Param<T>("conv" + std::to_string(k) + "_bias", {config_.filters});
        glorot_init(conv_kernels_[w], k * d, config_.filters, rng);
      }
      style_w_ = nn::Param<T>("style_w", {3 * config_.filters, config_.hidden2});
      glorot_init(style_w_, 3 * config_.filters, config_.hidden2, rng);
    }
  }

  const PsaConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::uint64_t init_seed() const { return init_seed_; }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> blocks{&mlp_w1_, &mlp_b1_, &mlp_w2_, &mlp_b2_, &out_w_};
    if (config_.aggr != AggrMode::kNone) {
      blocks.push_back(&embeddings_);
      for (auto& k : conv_kernels_) blocks.push_back(&k);
      for (auto& b : conv_bias_) blocks.push_back(&b);
      blocks.push_back(&style_w_);
    }
    return blocks;
  }

  nn::Param<T>& block(const std::string& name) {
    for (auto* p : params()) {
      if (p->name == name) return *p;
    }
    throw Error("unknown parameter block \"" + name + "\"");
  }

  void zero_grads() {
    for (auto* p : params()) p->zero_grad();
  }

  // Intermediate values of one forward pass, kept for the backward pass.
  struct Cache {
    const std::map<std::uint32_t, double>* x = nullptr;
    std::size_t instance_index = 0;
    std::vector<std::size_t> posts;
    std::vector<T> z1, a1, z2, hidden;
    nn::Tensor<T> publisher_matrix;
    std::array<nn::Tensor<T>, 3> maps;
    std::array<std::vector<std::size_t>, 3> argmax;
    std::vector<T> style, style_proj, combined, dropped;
    std::vector<std::uint8_t> dropout_mask;
    bool dropout_active = false;
    std::vector<T> probs;
  };

  // Class distribution for one instance. `training` enables dropout, which
  // draws from `rng`.
  std::vector<T> forward(const std::map<std::uint32_t, double>& x, std::size_t instance_index,
                         const PsaContext& ctx, bool training, Rng* rng, Cache& cache) const {
    if (!x.empty() && x.rbegin()->first >= vocab_.size()) {
      throw Error("encoding does not match the model vocabulary");
    }
    cache.x = &x;
    cache.instance_index = instance_index;

    nn::dense_forward_sparse(x, mlp_w1_.value, mlp_b1_.value.data, cache.z1);
    nn::relu_forward(cache.z1, cache.a1);
    nn::dense_forward(cache.a1, mlp_w2_.value, mlp_b2_.value.data, cache.z2);
    nn::relu_forward(cache.z2, cache.hidden);

    cache.combined = cache.hidden;
    if (config_.aggr != AggrMode::kNone) {
      cache.posts = ctx.accessible(instance_index);
      build_publisher_matrix(ctx, cache.posts, cache.publisher_matrix);
      cache.style.assign(3 * config_.filters, T(0));
      for (std::size_t w = 0; w < 3; ++w) {
        nn::conv1d_forward(cache.publisher_matrix, conv_kernels_[w].value,
                           conv_bias_[w].value.data, cache.maps[w]);
        cache.argmax[w].resize(config_.filters);
        const std::size_t steps = cache.maps[w].cols();
        for (std::size_t f = 0; f < config_.filters; ++f) {
          auto [value, index] = nn::maxpool_over_time(&cache.maps[w].data[f * steps], steps);
          cache.style[w * config_.filters + f] = value;
          cache.argmax[w][f] = index;
        }
      }
      cache.style_proj.assign(config_.hidden2, T(0));
      for (std::size_t i = 0; i < cache.style.size(); ++i) {
        const T s = cache.style[i];
        if (s == T(0)) continue;
        const T* row = &style_w_.value.data[i * config_.hidden2];
        for (std::size_t j = 0; j < config_.hidden2; ++j) cache.style_proj[j] += s * row[j];
      }
      for (std::size_t j = 0; j < config_.hidden2; ++j) cache.combined[j] += cache.style_proj[j];
    }

    if (training && rng == nullptr) throw Error("training-mode forward needs an rng");
    cache.dropout_active = training && config_.dropout > 0.0;
    nn::dropout_forward(cache.combined, config_.dropout, training ? *rng : eval_rng_,
                        training, cache.dropped, cache.dropout_mask);

    std::vector<T> logits(kNumClasses, T(0));
    for (std::size_t i = 0; i < config_.hidden2; ++i) {
      const T h = cache.dropped[i];
      if (h == T(0)) continue;
      const T* row = &out_w_.value.data[i * kNumClasses];
      for (int c = 0; c < kNumClasses; ++c) logits[static_cast<std::size_t>(c)] += h * row[c];
    }
    auto sm = nn::softmax_cross_entropy(logits, 0);  // class only affects loss, not probs
    cache.probs = sm.probs;
    return sm.probs;
  }

  // Cross-entropy loss for `label`, with gradients accumulated into every
  // parameter block scaled by `scale` (1/batch for mini-batch means).
  T backward(const Cache& cache, Label label, T scale, const PsaContext& ctx) {
    const auto target = static_cast<std::size_t>(static_cast<int>(label));
    std::vector<T> logits_grad = cache.probs;
    logits_grad[target] -= T(1);
    const T loss = -std::log(std::max(cache.probs[target], std::numeric_limits<T>::min()));
    for (T& g : logits_grad) g *= scale;

    // Output layer.
    std::vector<T> ddropped(config_.hidden2, T(0));
    for (std::size_t i = 0; i < config_.hidden2; ++i) {
      const T h = cache.dropped[i];
      T* dw_row = &out_w_.grad.data[i * kNumClasses];
      const T* w_row = &out_w_.value.data[i * kNumClasses];
      T acc = T(0);
      for (int c = 0; c < kNumClasses; ++c) {
        dw_row[c] += h * logits_grad[static_cast<std::size_t>(c)];
        acc += w_row[c] * logits_grad[static_cast<std::size_t>(c)];
      }
      ddropped[i] = acc;
    }
    if (cache.dropout_active) {
      nn::dropout_backward(cache.dropout_mask, config_.dropout, ddropped);
    }
    std::vector<T>& dcombined = ddropped;

    if (config_.aggr != AggrMode::kNone) {
      std::vector<T> dstyle(cache.style.size(), T(0));
      for (std::size_t i = 0; i < cache.style.size(); ++i) {
        const T s = cache.style[i];
        T* dw_row = &style_w_.grad.data[i * config_.hidden2];
        const T* w_row = &style_w_.value.data[i * config_.hidden2];
        T acc = T(0);
        for (std::size_t j = 0; j < config_.hidden2; ++j) {
          dw_row[j] += s * dcombined[j];
          acc += w_row[j] * dcombined[j];
        }
        dstyle[i] = acc;
      }
      nn::Tensor<T> dmatrix(cache.publisher_matrix.shape);
      for (std::size_t w = 0; w < 3; ++w) {
        nn::Tensor<T> dmaps(cache.maps[w].shape);
        const std::size_t steps = cache.maps[w].cols();
        for (std::size_t f = 0; f < config_.filters; ++f) {
          dmaps.data[f * steps + cache.argmax[w][f]] = dstyle[w * config_.filters + f];
        }
        nn::conv1d_backward(cache.publisher_matrix, conv_kernels_[w].value, cache.maps[w], dmaps,
                            &dmatrix, conv_kernels_[w].grad, conv_bias_[w].grad.data);
      }
      // Route the aggregated-matrix gradient back into the embedding rows of
      // every contributing post; pad positions stay untouched.
      const std::size_t d = config_.embed_dim;
      const auto pad = static_cast<std::uint32_t>(vocab_.size());
      const T weight = (config_.aggr == AggrMode::kMean && cache.posts.size() > 1)
                           ? static_cast<T>(1.0 / static_cast<double>(cache.posts.size()))
                           : T(1);
      for (std::size_t post : cache.posts) {
        const auto& tokens = ctx.padded_tokens[post];
        for (std::size_t t = 0; t < config_.max_tokens; ++t) {
          if (tokens[t] == pad) continue;
          const T* dm = &dmatrix.data[t * d];
          T* demb = &embeddings_.grad.data[tokens[t] * d];
          for (std::size_t j = 0; j < d; ++j) demb[j] += weight * dm[j];
        }
      }
    }

    // MLP.
    std::vector<T> dz2 = dcombined;
    nn::relu_backward(cache.z2, dz2);
    std::vector<T> da1(config_.hidden1, T(0));
    nn::dense_backward(cache.a1, mlp_w2_.value, dz2, &da1, mlp_w2_.grad, mlp_b2_.grad.data);
    nn::relu_backward(cache.z1, da1);
    nn::dense_backward_sparse(*cache.x, da1, mlp_w1_.grad, mlp_b1_.grad.data);
    return loss * scale;
  }

  std::vector<T> predict_proba(std::size_t instance_index, const PsaContext& ctx) const {
    Cache cache;
    return forward(ctx.encoded[instance_index], instance_index, ctx, false, nullptr, cache);
  }

  // Evaluation with an overriding instance view (e.g. truncated comments);
  // the view must keep the id/publisher of the original instance.
  std::vector<T> predict_proba(const MicroblogInstance& view, const PsaContext& ctx) const {
    const std::size_t index = ctx.corpus->index_of(view.id);
    EncodedInstance enc = config_.encoder == Encoder::kRootText ? root_text(view, vocab_)
                                                                : mean_text(view, vocab_);
    Cache cache;
    return forward(enc.values, index, ctx, false, nullptr, cache);
  }

  static Label argmax_label(const std::vector<T>& probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (probs[c] > probs[best]) best = c;
    }
    return static_cast<Label>(static_cast<int>(best));
  }

 private:
  void glorot_init(nn::Param<T>& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : p.value.data) v = static_cast<T>(rng.uniform(-limit, limit));
  }

  void build_publisher_matrix(const PsaContext& ctx, const std::vector<std::size_t>& posts,
                              nn::Tensor<T>& H) const {
    const std::size_t d = config_.embed_dim;
    const std::size_t L = config_.max_tokens;
    H = nn::Tensor<T>({L, d});
    const auto pad = static_cast<std::uint32_t>(vocab_.size());
    for (std::size_t post : posts) {
      const auto& tokens = ctx.padded_tokens[post];
      for (std::size_t t = 0; t < L; ++t) {
        if (tokens[t] == pad) continue;  // pad rows contribute zero
        const T* emb = &embeddings_.value.data[tokens[t] * d];
        T* h = &H.data[t * d];
        for (std::size_t j = 0; j < d; ++j) h[j] += emb[j];
      }
    }
    if (config_.aggr == AggrMode::kMean && posts.size() > 1) {
      const T inv = static_cast<T>(1.0 / static_cast<double>(posts.size()));
      for (T& v : H.data) v *= inv;
    }
  }

  PsaConfig config_;
  Vocabulary vocab_;
  std::uint64_t init_seed_ = 0;
  mutable Rng eval_rng_{0};  // never drawn from: dropout is identity in eval

  nn::Param<T> mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_, out_w_;
  nn::Param<T> embeddings_;
  std::array<nn::Param<T>, 3> conv_kernels_;
  std::array<nn::Param<T>, 3> conv_bias_;
  nn::Param<T> style_w_;
};

using PsaModel = PsaModelT<float>;

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

template <class T>
struct TrainOutput {
  PsaModelT<T> model;
  PsaContext context;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Mini-batch training with per-epoch shuffling, early stopping on validation
// accuracy, and restoration of the best-validation parameters. Deterministic
// given (corpus, split, seed).
template <class T>
TrainOutput<T> train_model(const PsaConfig& config, const Corpus& corpus,
                           const Vocabulary& vocab, const SplitSpec& split,
                           std::uint64_t seed) {
  if (split.train.empty()) throw Error("training split is empty");
  validate_split(split, corpus);

  TrainOutput<T> out{PsaModelT<T>(config, vocab, seed), PsaContext::build(corpus, split, vocab, config), {}, 0, 0.0};
  PsaModelT<T>& model = out.model;
  const PsaContext& ctx = out.context;

  std::vector<std::size_t> train_idx;
  train_idx.reserve(split.train.size());
  for (const auto& id : split.train) train_idx.push_back(corpus.index_of(id));
  std::vector<std::size_t> val_idx;
  val_idx.reserve(split.validation.size());
  for (const auto& id : split.validation) val_idx.push_back(corpus.index_of(id));

  Rng shuffle_rng = Rng(seed).fork(1);
  Rng dropout_rng = Rng(seed).fork(2);
  nn::Adam<T> adam;
  adam.learning_rate = config.learning_rate;
  adam.weight_decay = config.weight_decay;
  auto params = model.params();

  std::vector<nn::Tensor<T>> best_values;
  auto snapshot = [&]() {
    best_values.clear();
    for (auto* p : params) best_values.push_back(p->value);
  };
  snapshot();

  std::size_t since_best = 0;
  typename PsaModelT<T>::Cache cache;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, train_idx.size());
      const T scale = static_cast<T>(1.0 / static_cast<double>(stop - start));
      model.zero_grads();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = train_idx[b];
        model.forward(ctx.encoded[i], i, ctx, true, &dropout_rng, cache);
        batch_loss += static_cast<double>(model.backward(cache, corpus.at(i).label, scale, ctx));
      }
      adam.step(params);
      epoch_loss += batch_loss;
      ++batches;
    }

    std::size_t correct = 0;
    for (std::size_t i : val_idx) {
      if (PsaModelT<T>::argmax_label(model.predict_proba(i, ctx)) == corpus.at(i).label) ++correct;
    }
    const double val_acc = val_idx.empty()
        ? 0.0 : static_cast<double>(correct) / static_cast<double>(val_idx.size());
    out.history.push_back({epoch, batches ? epoch_loss / static_cast<double>(batches) : 0.0, val_acc});

    if (val_idx.empty() || val_acc > out.best_val_accuracy || out.best_epoch == 0) {
      out.best_val_accuracy = val_acc;
      out.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  for (std::size_t p = 0; p < params.size(); ++p) params[p]->value = best_values[p];
  return out;
}

// Finite-difference verification of every parameter block on a small batch;
// dropout disabled, double precision. The mean batch loss is the objective.
std::vector<nn::BlockReport> psa_grad_check(PsaModelT<double>& model, const PsaContext& ctx,
                                            const Corpus& corpus,
                                            const std::vector<std::size_t>& batch,
                                            double step = 1e-5, std::uint64_t seed = 7);

// Checkpoints: "<prefix>.json" manifest (shapes, hyperparameters, seed) plus
// "<prefix>.bin", the raw little-endian parameter arrays in manifest order.
void save_checkpoint(PsaModelT<float>& model, const std::string& prefix);
PsaModelT<float> load_checkpoint(const std::string& prefix, const Vocabulary& vocab);

}  // namespace rumor
