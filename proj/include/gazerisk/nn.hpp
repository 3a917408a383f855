#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "gazerisk/rng.hpp"
#include "gazerisk/tensor.hpp"

namespace gazerisk::nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Dot product with four independent accumulators. A single-accumulator loop
/// serializes on FMA latency and the compiler may not reorder float sums;
/// this fixed summation order is deterministic and several times faster.
inline double dot(const double* __restrict a, const double* __restrict b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// Fully connected layer
// ---------------------------------------------------------------------------

struct Linear {
  Parameter w;  // (out, in)
  Parameter b;  // (out)

  Linear() = default;
  Linear(int in, int out) : w({out, in}), b({out}) {}

  int in_dim() const { return w.value.shape[1]; }
  int out_dim() const { return w.value.shape[0]; }
};

inline std::vector<double> linear_forward(const Linear& fc, std::span<const double> x) {
  const int out = fc.out_dim(), in = fc.in_dim();
  if (static_cast<int>(x.size()) != in)
    throw std::invalid_argument("linear_forward: input size mismatch");
  std::vector<double> y(out);
  for (int o = 0; o < out; ++o) {
    const double* row = fc.w.value.data.data() + static_cast<std::size_t>(o) * in;
    y[o] = fc.b.value[o] + dot(row, x.data(), in);
  }
  return y;
}

/// Accumulates parameter gradients and returns the input gradient.
inline std::vector<double> linear_backward(Linear& fc, std::span<const double> x,
                                           std::span<const double> dy) {
  const int out = fc.out_dim(), in = fc.in_dim();
  std::vector<double> dx(in, 0.0);
  double* __restrict dxp = dx.data();
  const double* __restrict xp = x.data();
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    fc.b.grad[o] += g;
    double* __restrict wrow = fc.w.grad.data.data() + static_cast<std::size_t>(o) * in;
    const double* __restrict vrow = fc.w.value.data.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      wrow[i] += g * xp[i];
      dxp[i] += g * vrow[i];
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// Gate order in the stacked weight matrices is fixed: input, forget, cell,
/// output. The forget-gate bias is initialized to one.
struct LstmParams {
  Parameter wx;  // (4H, I)
  Parameter wh;  // (4H, H)
  Parameter b;   // (4H)

  LstmParams() = default;
  LstmParams(int input_dim, int hidden)
      : wx({4 * hidden, input_dim}), wh({4 * hidden, hidden}), b({4 * hidden}) {}

  int input_dim() const { return wx.value.shape[1]; }
  int hidden_dim() const { return wh.value.shape[1]; }
};

struct LstmStepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, g, o, c, tanh_c;
};

struct LstmCache {
  std::vector<LstmStepCache> steps;
};

struct LstmResult {
  std::vector<std::vector<double>> hidden;  // T x H
  std::vector<double> h;                    // final hidden
  std::vector<double> c;                    // final cell
};

/// Standard LSTM recurrence with sigmoid gates and tanh cell/output
/// activations. Pass a cache pointer when gradients are needed.
inline LstmResult lstm_forward(const LstmParams& p,
                               const std::vector<std::vector<double>>& inputs,
                               std::span<const double> h0, std::span<const double> c0,
                               LstmCache* cache = nullptr) {
  const int H = p.hidden_dim(), I = p.input_dim();
  std::vector<double> h(h0.begin(), h0.end());
  std::vector<double> c(c0.begin(), c0.end());
  if (static_cast<int>(h.size()) != H || static_cast<int>(c.size()) != H)
    throw std::invalid_argument("lstm_forward: state size mismatch");
  LstmResult res;
  res.hidden.reserve(inputs.size());
  if (cache) cache->steps.clear();
  std::vector<double> z(4 * H);
  for (const auto& x : inputs) {
    if (static_cast<int>(x.size()) != I)
      throw std::invalid_argument("lstm_forward: input size mismatch");
    for (int r = 0; r < 4 * H; ++r) {
      const double* wx = p.wx.value.data.data() + static_cast<std::size_t>(r) * I;
      const double* wh = p.wh.value.data.data() + static_cast<std::size_t>(r) * H;
      z[r] = p.b.value[r] + dot(wx, x.data(), I) + dot(wh, h.data(), H);
    }
    LstmStepCache sc;
    sc.x = x;
    sc.h_prev = h;
    sc.c_prev = c;
    sc.i.resize(H);
    sc.f.resize(H);
    sc.g.resize(H);
    sc.o.resize(H);
    sc.c.resize(H);
    sc.tanh_c.resize(H);
    for (int j = 0; j < H; ++j) {
      sc.i[j] = sigmoid(z[j]);
      sc.f[j] = sigmoid(z[H + j]);
      sc.g[j] = std::tanh(z[2 * H + j]);
      sc.o[j] = sigmoid(z[3 * H + j]);
      sc.c[j] = sc.f[j] * c[j] + sc.i[j] * sc.g[j];
      sc.tanh_c[j] = std::tanh(sc.c[j]);
      h[j] = sc.o[j] * sc.tanh_c[j];
    }
    c = sc.c;
    res.hidden.push_back(h);
    if (cache) cache->steps.push_back(std::move(sc));
  }
  res.h = h;
  res.c = c;
  if (!res.h.empty()) ensure_finite(res.h, "lstm_forward hidden state");
  return res;
}

/// Backpropagation through time. `d_hidden` may be empty (no per-step loss)
/// or match the forward sequence length. Returns gradients for the inputs;
/// parameter gradients accumulate into `p`.
struct LstmGrad {
  std::vector<std::vector<double>> d_inputs;
  std::vector<double> d_h0, d_c0;
};

inline LstmGrad lstm_backward(LstmParams& p, const LstmCache& cache,
                              const std::vector<std::vector<double>>& d_hidden,
                              std::span<const double> d_h_final,
                              std::span<const double> d_c_final) {
  const int H = p.hidden_dim(), I = p.input_dim();
  const std::size_t T = cache.steps.size();
  if (!d_hidden.empty() && d_hidden.size() != T)
    throw std::invalid_argument("lstm_backward: d_hidden length mismatch");
  std::vector<double> dh(H, 0.0), dc(H, 0.0);
  if (!d_h_final.empty()) dh.assign(d_h_final.begin(), d_h_final.end());
  if (!d_c_final.empty()) dc.assign(d_c_final.begin(), d_c_final.end());
  LstmGrad out;
  out.d_inputs.assign(T, {});
  std::vector<double> dz(4 * H);
  for (std::size_t t = T; t-- > 0;) {
    const LstmStepCache& sc = cache.steps[t];
    if (!d_hidden.empty())
      for (int j = 0; j < H; ++j) dh[j] += d_hidden[t][j];
    for (int j = 0; j < H; ++j) {
      const double do_ = dh[j] * sc.tanh_c[j];
      const double dct = dh[j] * sc.o[j] * (1.0 - sc.tanh_c[j] * sc.tanh_c[j]) + dc[j];
      const double di = dct * sc.g[j];
      const double df = dct * sc.c_prev[j];
      const double dg = dct * sc.i[j];
      dz[j] = di * sc.i[j] * (1.0 - sc.i[j]);
      dz[H + j] = df * sc.f[j] * (1.0 - sc.f[j]);
      dz[2 * H + j] = dg * (1.0 - sc.g[j] * sc.g[j]);
      dz[3 * H + j] = do_ * sc.o[j] * (1.0 - sc.o[j]);
      dc[j] = dct * sc.f[j];
    }
    std::vector<double>& dx = out.d_inputs[t];
    dx.assign(I, 0.0);
    std::fill(dh.begin(), dh.end(), 0.0);
    double* __restrict dxp = dx.data();
    double* __restrict dhp = dh.data();
    const double* __restrict scx = sc.x.data();
    const double* __restrict sch = sc.h_prev.data();
    for (int r = 0; r < 4 * H; ++r) {
      const double g = dz[r];
      p.b.grad[r] += g;
      double* __restrict wxg = p.wx.grad.data.data() + static_cast<std::size_t>(r) * I;
      const double* __restrict wxv = p.wx.value.data.data() + static_cast<std::size_t>(r) * I;
      for (int i = 0; i < I; ++i) {
        wxg[i] += g * scx[i];
        dxp[i] += g * wxv[i];
      }
      double* __restrict whg = p.wh.grad.data.data() + static_cast<std::size_t>(r) * H;
      const double* __restrict whv = p.wh.value.data.data() + static_cast<std::size_t>(r) * H;
      for (int j = 0; j < H; ++j) {
        whg[j] += g * sch[j];
        dhp[j] += g * whv[j];
      }
    }
  }
  out.d_h0 = dh;
  out.d_c0 = dc;
  return out;
}

// ---------------------------------------------------------------------------
// 2-D convolution (valid padding)
// ---------------------------------------------------------------------------

struct Conv2d {
  Parameter k;  // (out_ch, in_ch, kh, kw)
  Parameter b;  // (out_ch)
  int stride = 1;

  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, int stride_)
      : k({out_ch, in_ch, ksize, ksize}), b({out_ch}), stride(stride_) {}

  int in_ch() const { return k.value.shape[1]; }
  int out_ch() const { return k.value.shape[0]; }
  int ksize() const { return k.value.shape[2]; }
  static int out_extent(int in, int ksize, int stride) {
    return (in - ksize) / stride + 1;
  }
};

/// Input and output are channel-major flat buffers: (ch, rows, cols).
inline std::vector<double> conv2d_forward(const Conv2d& cv, std::span<const double> x,
                                          int rows, int cols) {
  const int ic = cv.in_ch(), oc = cv.out_ch(), ks = cv.ksize(), st = cv.stride;
  if (static_cast<int>(x.size()) != ic * rows * cols)
    throw std::invalid_argument("conv2d_forward: input size mismatch");
  const int orows = Conv2d::out_extent(rows, ks, st);
  const int ocols = Conv2d::out_extent(cols, ks, st);
  std::vector<double> y(static_cast<std::size_t>(oc) * orows * ocols);
  for (int o = 0; o < oc; ++o)
    for (int r = 0; r < orows; ++r)
      for (int c = 0; c < ocols; ++c) {
        double acc = cv.b.value[o];
        for (int i = 0; i < ic; ++i) {
          const double* xs = x.data() + (static_cast<std::size_t>(i) * rows + r * st) * cols + c * st;
          const double* kw = cv.k.value.data.data() +
                             ((static_cast<std::size_t>(o) * ic + i) * ks) * ks;
          for (int kr = 0; kr < ks; ++kr)
            for (int kc = 0; kc < ks; ++kc)
              acc += kw[kr * ks + kc] * xs[kr * cols + kc];
        }
        y[(static_cast<std::size_t>(o) * orows + r) * ocols + c] = acc;
      }
  return y;
}

inline std::vector<double> conv2d_backward(Conv2d& cv, std::span<const double> x,
                                           int rows, int cols,
                                           std::span<const double> dy) {
  const int ic = cv.in_ch(), oc = cv.out_ch(), ks = cv.ksize(), st = cv.stride;
  const int orows = Conv2d::out_extent(rows, ks, st);
  const int ocols = Conv2d::out_extent(cols, ks, st);
  std::vector<double> dx(static_cast<std::size_t>(ic) * rows * cols, 0.0);
  for (int o = 0; o < oc; ++o)
    for (int r = 0; r < orows; ++r)
      for (int c = 0; c < ocols; ++c) {
        const double g = dy[(static_cast<std::size_t>(o) * orows + r) * ocols + c];
        cv.b.grad[o] += g;
        for (int i = 0; i < ic; ++i) {
          const std::size_t xbase = (static_cast<std::size_t>(i) * rows + r * st) * cols + c * st;
          const std::size_t kbase = ((static_cast<std::size_t>(o) * ic + i) * ks) * ks;
          for (int kr = 0; kr < ks; ++kr)
            for (int kc = 0; kc < ks; ++kc) {
              cv.k.grad[kbase + kr * ks + kc] += g * x[xbase + kr * cols + kc];
              dx[xbase + kr * cols + kc] += g * cv.k.value[kbase + kr * ks + kc];
            }
        }
      }
  return dx;
}

// ---------------------------------------------------------------------------
// Activations and losses
// ---------------------------------------------------------------------------

inline std::vector<double> tanh_forward(std::span<const double> x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

/// `y` must be the tanh_forward output for the same inputs.
inline std::vector<double> tanh_backward(std::span<const double> y,
                                         std::span<const double> dy) {
  std::vector<double> dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
  return dx;
}

/// Numerically stable softmax (max subtraction); the output sums to one.
inline std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  double zmax = z[0];
  for (double v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
    zmax = std::max(zmax, v);
  }
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

/// Cross-entropy of a probability vector against an integer label.
inline double cross_entropy(std::span<const double> p, int label) {
  if (label < 0 || label >= static_cast<int>(p.size()))
    throw std::invalid_argument("cross_entropy: label out of range");
  return -std::log(std::max(p[label], 1e-300));
}

/// Fused softmax + cross-entropy with its logit gradient (p - onehot).
struct SoftmaxCeResult {
  double loss;
  std::vector<double> probs;
  std::vector<double> d_logits;
};

inline SoftmaxCeResult softmax_cross_entropy(std::span<const double> logits, int label) {
  SoftmaxCeResult r;
  r.probs = softmax(logits);
  r.loss = cross_entropy(r.probs, label);
  r.d_logits = r.probs;
  r.d_logits[label] -= 1.0;
  return r;
}

/// Mean squared error over all elements, with gradient w.r.t. predictions.
struct MseResult {
  double loss;
  std::vector<double> d_pred;
};

inline MseResult mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("mse: size mismatch");
  if (pred.empty()) throw std::invalid_argument("mse: empty input");
  MseResult r;
  r.d_pred.resize(pred.size());
  double acc = 0.0;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
    r.d_pred[i] = 2.0 * d / n;
  }
  r.loss = acc / n;
  return r;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Uniform +-1/sqrt(fan_in) initialization.
inline void init_uniform(Parameter& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : p.value.data) v = rng.uniform(-bound, bound);
}

inline void init_linear(Linear& fc, Rng& rng) {
  init_uniform(fc.w, fc.in_dim(), rng);
  fc.b.value.zero();
}

inline void init_conv(Conv2d& cv, Rng& rng) {
  init_uniform(cv.k, cv.in_ch() * cv.ksize() * cv.ksize(), rng);
  cv.b.value.zero();
}

inline void init_lstm(LstmParams& p, Rng& rng) {
  init_uniform(p.wx, p.input_dim(), rng);
  init_uniform(p.wh, p.hidden_dim(), rng);
  p.b.value.zero();
  const int H = p.hidden_dim();
  for (int j = 0; j < H; ++j) p.b.value[H + j] = 1.0;  // forget gate
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// Textbook bias-corrected Adam. Moment buffers are lazily matched to the
/// parameter list on the first step.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Tensor> m, v;
};

inline void adam_step(AdamState& st, std::span<Parameter* const> params) {
  if (st.m.empty()) {
    for (const Parameter* p : params) {
      st.m.emplace_back(p->value.shape);
      st.v.emplace_back(p->value.shape);
    }
  }
  if (st.m.size() != params.size())
    throw std::invalid_argument("adam_step: parameter list changed size");
  for (const Parameter* p : params)
    ensure_finite(p->grad, "adam_step gradient");
  ++st.step_count;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = st.m[k];
    Tensor& v = st.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g;
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

inline void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace gazerisk::nn
