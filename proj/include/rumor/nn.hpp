#pragma once

// Minimal numerical stack for training the classifiers from scratch: tensors,
// layers with hand-written backward passes, Adam, and finite-difference
// gradient verification. Training instantiates the templates with float;
// verification uses double so the 1e-4 gradient tolerance is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rumor/error.hpp"
#include "rumor/rng.hpp"

namespace rumor::nn {

template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    data.assign(n, T(0));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  T& at2(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  const T& at2(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Layers. Backward passes accumulate into the provided gradient buffers.

// y = x W + b with x: [in], W: [in, out], b: [out].
template <class T>
void dense_forward(const std::vector<T>& x, const Tensor<T>& W, const std::vector<T>& b,
                   std::vector<T>& y) {
  const std::size_t in = W.rows();
  const std::size_t out = W.cols();
  if (x.size() != in || b.size() != out) throw Error("dense: shape mismatch");
  y.assign(out, T(0));
  for (std::size_t i = 0; i < in; ++i) {
    const T xi = x[i];
    if (xi == T(0)) continue;
    const T* w_row = &W.data[i * out];
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * w_row[j];
  }
  for (std::size_t j = 0; j < out; ++j) y[j] += b[j];
}

template <class T>
void dense_backward(const std::vector<T>& x, const Tensor<T>& W, const std::vector<T>& dy,
                    std::vector<T>* dx, Tensor<T>& dW, std::vector<T>& db) {
  const std::size_t in = W.rows();
  const std::size_t out = W.cols();
  if (x.size() != in || dy.size() != out) throw Error("dense backward: shape mismatch");
  for (std::size_t j = 0; j < out; ++j) db[j] += dy[j];
  for (std::size_t i = 0; i < in; ++i) {
    const T xi = x[i];
    if (xi != T(0)) {
      T* dw_row = &dW.data[i * out];
      for (std::size_t j = 0; j < out; ++j) dw_row[j] += xi * dy[j];
    }
    if (dx != nullptr) {
      const T* w_row = &W.data[i * out];
      T acc = T(0);
      for (std::size_t j = 0; j < out; ++j) acc += w_row[j] * dy[j];
      (*dx)[i] += acc;
    }
  }
}

// Sparse input variant: x given as index -> value. dW accumulates only into
// the touched rows; gradients for x itself are never needed.
template <class T>
void dense_forward_sparse(const std::map<std::uint32_t, double>& x, const Tensor<T>& W,
                          const std::vector<T>& b, std::vector<T>& y) {
  const std::size_t out = W.cols();
  y.assign(b.begin(), b.end());
  for (const auto& [idx, v] : x) {
    if (idx >= W.rows()) throw Error("dense: sparse index out of range");
    const T* w_row = &W.data[idx * out];
    const T xv = static_cast<T>(v);
    for (std::size_t j = 0; j < out; ++j) y[j] += xv * w_row[j];
  }
}

template <class T>
void dense_backward_sparse(const std::map<std::uint32_t, double>& x, const std::vector<T>& dy,
                           Tensor<T>& dW, std::vector<T>& db) {
  const std::size_t out = dW.cols();
  for (std::size_t j = 0; j < out; ++j) db[j] += dy[j];
  for (const auto& [idx, v] : x) {
    T* dw_row = &dW.data[idx * out];
    const T xv = static_cast<T>(v);
    for (std::size_t j = 0; j < out; ++j) dw_row[j] += xv * dy[j];
  }
}

template <class T>
void relu_forward(const std::vector<T>& x, std::vector<T>& y) {
  y.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// grad is the gradient w.r.t. relu output; zeroed where the input was <= 0.
template <class T>
void relu_backward(const std::vector<T>& pre, std::vector<T>& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (pre[i] <= T(0)) grad[i] = T(0);
  }
}

// Inverted dropout; identity in evaluation mode. rate must be in [0, 1).
template <class T>
void dropout_forward(const std::vector<T>& x, double rate, Rng& rng, bool training,
                     std::vector<T>& y, std::vector<std::uint8_t>& mask) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout rate must lie in [0, 1)");
  y.resize(x.size());
  if (!training || rate == 0.0) {
    mask.assign(x.size(), 1);
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  mask.resize(x.size());
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.bernoulli(rate) ? 0 : 1;
    y[i] = mask[i] ? x[i] * scale : T(0);
  }
}

template <class T>
void dropout_backward(const std::vector<std::uint8_t>& mask, double rate, std::vector<T>& grad) {
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = mask[i] ? grad[i] * scale : T(0);
  }
}

// 1-D convolution over a row-major [L, d] matrix with kernels [F, k, d] and
// per-filter bias, ReLU applied in place. maps: [F, L - k + 1].
template <class T>
void conv1d_forward(const Tensor<T>& H, const Tensor<T>& kernels, const std::vector<T>& bias,
                    Tensor<T>& maps) {
  const std::size_t L = H.rows();
  const std::size_t d = H.cols();
  const std::size_t F = kernels.shape.at(0);
  const std::size_t k = kernels.shape.at(1);
  if (kernels.shape.at(2) != d) throw Error("conv1d: kernel depth mismatch");
  if (k > L) throw Error("conv1d: window exceeds sequence length");
  const std::size_t steps = L - k + 1;
  maps = Tensor<T>({F, steps});
  const std::size_t window = k * d;
  for (std::size_t f = 0; f < F; ++f) {
    const T* kernel = &kernels.data[f * window];
    for (std::size_t j = 0; j < steps; ++j) {
      const T* h = &H.data[j * d];
      T acc = bias[f];
      for (std::size_t w = 0; w < window; ++w) acc += kernel[w] * h[w];
      maps.at2(f, j) = acc > T(0) ? acc : T(0);
    }
  }
}

template <class T>
void conv1d_backward(const Tensor<T>& H, const Tensor<T>& kernels, const Tensor<T>& maps,
                     const Tensor<T>& dmaps, Tensor<T>* dH, Tensor<T>& dkernels,
                     std::vector<T>& dbias) {
  const std::size_t d = H.cols();
  const std::size_t F = kernels.shape.at(0);
  const std::size_t k = kernels.shape.at(1);
  const std::size_t steps = maps.cols();
  const std::size_t window = k * d;
  for (std::size_t f = 0; f < F; ++f) {
    const T* kernel = &kernels.data[f * window];
    T* dkernel = &dkernels.data[f * window];
    for (std::size_t j = 0; j < steps; ++j) {
      if (maps.at2(f, j) <= T(0)) continue;  // ReLU gate
      const T g = dmaps.at2(f, j);
      if (g == T(0)) continue;
      const T* h = &H.data[j * d];
      for (std::size_t w = 0; w < window; ++w) dkernel[w] += g * h[w];
      if (dH != nullptr) {
        T* dh = &dH->data[j * d];
        for (std::size_t w = 0; w < window; ++w) dh[w] += g * kernel[w];
      }
      dbias[f] += g;
    }
  }
}

// Maximum entry and the index of its first occurrence.
template <class T>
std::pair<T, std::size_t> maxpool_over_time(const T* values, std::size_t len) {
  if (len == 0) throw Error("maxpool over an empty feature map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < len; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return {values[best], best};
}

template <class T>
struct SoftmaxLoss {
  T loss = T(0);
  std::vector<T> probs;
  std::vector<T> grad;  // softmax(logits) - onehot(true_class)
};

template <class T>
SoftmaxLoss<T> softmax_cross_entropy(const std::vector<T>& logits, int true_class) {
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= logits.size()) {
    throw Error("softmax: class index out of range");
  }
  SoftmaxLoss<T> out;
  const T max_logit = *std::max_element(logits.begin(), logits.end());
  out.probs.resize(logits.size());
  T denom = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - max_logit);
    denom += out.probs[i];
  }
  for (T& p : out.probs) p /= denom;
  out.loss = -std::log(std::max(out.probs[static_cast<std::size_t>(true_class)],
                                std::numeric_limits<T>::min()));
  out.grad = out.probs;
  out.grad[static_cast<std::size_t>(true_class)] -= T(1);
  return out;
}

// ---------------------------------------------------------------------------
// Parameters and Adam with decoupled weight decay.

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(shape), adam_m(shape), adam_v(shape) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <class T>
struct Adam {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;

  void step(const std::vector<Param<T>*>& params) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (Param<T>* p : params) {
      const std::size_t n = p->value.numel();
      // Decoupled weight decay: shrink parameters before the moment update.
      if (weight_decay != 0.0) {
        const T shrink = static_cast<T>(1.0 - learning_rate * weight_decay);
        for (std::size_t i = 0; i < n; ++i) p->value.data[i] *= shrink;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double g = static_cast<double>(p->grad.data[i]);
        double m = beta1 * static_cast<double>(p->adam_m.data[i]) + (1.0 - beta1) * g;
        double v = beta2 * static_cast<double>(p->adam_v.data[i]) + (1.0 - beta2) * g * g;
        p->adam_m.data[i] = static_cast<T>(m);
        p->adam_v.data[i] = static_cast<T>(v);
        const double update = learning_rate * (m / bc1) / (std::sqrt(v / bc2) + epsilon);
        p->value.data[i] -= static_cast<T>(update);
      }
      if (!all_finite(p->value)) {
        throw Error("non-finite parameter values in block \"" + p->name + "\"");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Finite-difference gradient verification (double precision only).

struct BlockReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool applicable = true;  // false for zero-length blocks
};

// `loss_fn` evaluates the loss for the current parameter values; `backward_fn`
// recomputes analytic gradients into each block's grad tensor. At least
// `coords_per_block` coordinates per block (all of them for small blocks) are
// perturbed with central differences of the given step.
inline std::vector<BlockReport> grad_check(const std::function<double()>& loss_fn,
                                           const std::function<void()>& backward_fn,
                                           const std::vector<Param<double>*>& blocks,
                                           double step = 1e-5,
                                           std::size_t coords_per_block = 20,
                                           std::uint64_t seed = 7) {
  backward_fn();
  std::vector<BlockReport> reports;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Param<double>* block = blocks[b];
    BlockReport report;
    report.name = block->name;
    const std::size_t n = block->value.numel();
    if (n == 0) {
      report.applicable = false;
      reports.push_back(std::move(report));
      continue;
    }
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (n > coords_per_block) {
      Rng rng = Rng(seed).fork(b);
      rng.shuffle(coords);
      coords.resize(coords_per_block);
    }
    for (std::size_t c : coords) {
      const double original = block->value.data[c];
      block->value.data[c] = original + step;
      const double plus = loss_fn();
      block->value.data[c] = original - step;
      const double minus = loss_fn();
      block->value.data[c] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw Error("non-finite loss during gradient check");
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = block->grad.data[c];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace rumor::nn
