#pragma once

// Deterministic single-threaded training loops: batched Adam with gradient
// accumulation, per-epoch validation, early stopping on validation loss with
// best-weight restore. The intention model is always trained first; the
// trajectory model is trained afterwards with the intention weights frozen
// (its loss never touches them).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gazerisk/predictor.hpp"

namespace gazerisk {

struct TrainParams {
  double lr = 0.001;
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 5; // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
  double min_train_loss = 0.0; // stop once the epoch training loss drops this low
  double lr_decay = 1.0;       // per-epoch learning-rate multiplier
};

struct TrainLog {
  std::vector<double> train_loss, val_loss; // one entry per completed epoch
  int best_epoch = -1;
  double best_val = std::numeric_limits<double>::infinity();
};

/// Mean Euclidean displacement between a predicted trajectory and the truth.
inline double ade(const Trajectory& pred, std::span<const Vec2> truth) {
  if (pred.waypoints.size() != truth.size())
    throw std::invalid_argument("ade: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    acc += (pred.waypoints[i] - truth[i]).norm();
  return acc / static_cast<double>(truth.size());
}

namespace detail {

inline std::vector<Tensor> snapshot(std::span<Parameter* const> params) {
  std::vector<Tensor> vals;
  vals.reserve(params.size());
  for (const Parameter* p : params) vals.push_back(p->value);
  return vals;
}

inline void restore(std::span<Parameter* const> params, const std::vector<Tensor>& vals) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = vals[i];
}

/// Shared epoch driver. `step_sample(i, scale)` runs forward+backward for
/// train record i with the gradient scaled by 1/batch and returns its loss;
/// `eval_sample(i)` returns the validation loss of val record i.
template <typename StepFn, typename EvalFn>
inline TrainLog run_training(std::span<Parameter* const> params, std::size_t n_train,
                             std::size_t n_val, const TrainParams& tp, StepFn&& step_sample,
                             EvalFn&& eval_sample) {
  if (n_train == 0 || n_val == 0)
    throw std::invalid_argument("training requires nonempty train and validation splits");
  if (tp.batch_size <= 0 || tp.max_epochs <= 0)
    throw std::invalid_argument("training: batch_size and max_epochs must be positive");

  nn::AdamState adam;
  adam.lr = tp.lr;
  TrainLog log;
  std::vector<Tensor> best = snapshot(params);
  int bad_epochs = 0;
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 0; epoch < tp.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(tp.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n_train; i-- > 1;)
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    double train_acc = 0.0;
    for (std::size_t start = 0; start < n_train; start += tp.batch_size) {
      const std::size_t stop = std::min(n_train, start + tp.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      nn::zero_grads(params);
      for (std::size_t i = start; i < stop; ++i) train_acc += step_sample(order[i], scale);
      nn::adam_step(adam, params);
    }
    log.train_loss.push_back(train_acc / static_cast<double>(n_train));

    double val_acc = 0.0;
    for (std::size_t i = 0; i < n_val; ++i) val_acc += eval_sample(i);
    const double val = val_acc / static_cast<double>(n_val);
    log.val_loss.push_back(val);

    if (val < log.best_val) {
      log.best_val = val;
      log.best_epoch = epoch;
      best = snapshot(params);
      bad_epochs = 0;
    } else if (++bad_epochs >= tp.patience) {
      break;
    }
    if (log.train_loss.back() <= tp.min_train_loss) break;
    adam.lr *= tp.lr_decay;
  }
  restore(params, best);
  return log;
}

struct PreparedSet {
  std::vector<FeatureWindow> windows;
  std::span<const EpisodeRecord> records;
};

inline PreparedSet prepare(std::span<const EpisodeRecord> records, const FeatureSpec& spec,
                           const NormStats& norm) {
  PreparedSet out;
  out.records = records;
  out.windows.reserve(records.size());
  for (const auto& rec : records) out.windows.push_back(make_feature_window(rec, spec, norm));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Intention model
// ---------------------------------------------------------------------------

namespace detail {

inline double di_step(ModelBundle& bundle, const FeatureWindow& window,
                      const EpisodeRecord& rec, double scale, bool backward) {
  const std::vector<double> zeros(kHiddenDim, 0.0);
  nn::LstmCache lc;
  ContextCache cc;
  auto enc = nn::lstm_forward(bundle.di.encoder, window.rows, zeros, zeros,
                              backward ? &lc : nullptr);
  auto ctx = encode_context(bundle.di.context, rec.raster, backward ? &cc : nullptr);
  auto fused = fuse(enc.h, ctx);
  auto logits = nn::linear_forward(bundle.di.head, fused);
  auto sce = nn::softmax_cross_entropy(logits, rec.label);
  if (!backward) return sce.loss;
  for (auto& g : sce.d_logits) g *= scale;
  auto d_fused = nn::linear_backward(bundle.di.head, fused, sce.d_logits);
  std::span<const double> d_h(d_fused.data(), kHiddenDim);
  std::span<const double> d_ctx(d_fused.data() + kHiddenDim, kHiddenDim);
  nn::lstm_backward(bundle.di.encoder, lc, {}, d_h, {});
  context_backward(bundle.di.context, cc, d_ctx);
  return sce.loss;
}

}  // namespace detail

/// Fits normalization stats on the training split, then trains the intention
/// classifier with cross-entropy.
inline TrainLog train_di(ModelBundle& bundle, std::span<const EpisodeRecord> train,
                         std::span<const EpisodeRecord> val, const TrainParams& tp) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_di: empty train or validation split");
  bundle.norm = fit_norm_stats(train, bundle.features);
  auto tr = detail::prepare(train, bundle.features, bundle.norm);
  auto va = detail::prepare(val, bundle.features, bundle.norm);
  auto params = di_parameters(bundle);
  auto step = [&](std::size_t i, double scale) {
    return detail::di_step(bundle, tr.windows[i], tr.records[i], scale, true);
  };
  auto eval = [&](std::size_t i) {
    return detail::di_step(bundle, va.windows[i], va.records[i], 0.0, false);
  };
  return detail::run_training(params, train.size(), val.size(), tp, step, eval);
}

// ---------------------------------------------------------------------------
// Multimodal trajectory model
// ---------------------------------------------------------------------------

namespace detail {

/// MSE on the label-matching mode only; other modes get no gradient from
/// this sample.
inline double mt_step(ModelBundle& bundle, const FeatureWindow& window,
                      const EpisodeRecord& rec, double scale, bool backward) {
  const std::vector<double> zeros(kHiddenDim, 0.0);
  nn::LstmCache enc_cache;
  ContextCache ctx_cache;
  auto enc = nn::lstm_forward(bundle.mt.encoder, window.rows, zeros, zeros,
                              backward ? &enc_cache : nullptr);
  auto ctx = encode_context(bundle.mt.context, rec.raster, backward ? &ctx_cache : nullptr);
  auto fused = fuse(enc.h, ctx);
  auto init = nn::linear_forward(bundle.mt.init, fused);
  std::span<const double> h0(init.data(), kHiddenDim);
  std::span<const double> c0(init.data() + kHiddenDim, kHiddenDim);
  const std::vector<std::vector<double>> zero_inputs(kFutureSteps,
                                                     std::vector<double>(2, 0.0));
  nn::LstmCache dec_cache;
  auto dec = nn::lstm_forward(bundle.mt.decoder, zero_inputs, h0, c0,
                              backward ? &dec_cache : nullptr);
  std::vector<std::vector<double>> head_out(kFutureSteps);
  std::vector<double> pred(2 * kFutureSteps), truth(2 * kFutureSteps);
  const int m = rec.label;
  for (int t = 0; t < kFutureSteps; ++t) {
    head_out[t] = nn::linear_forward(bundle.mt.head, dec.hidden[t]);
    pred[2 * t] = head_out[t][2 * m];
    pred[2 * t + 1] = head_out[t][2 * m + 1];
    truth[2 * t] = rec.future[t].x;
    truth[2 * t + 1] = rec.future[t].y;
  }
  auto loss = nn::mse(pred, truth);
  if (!backward) return loss.loss;

  std::vector<std::vector<double>> d_hidden(kFutureSteps);
  std::vector<double> dy(2 * kNumModes);
  for (int t = 0; t < kFutureSteps; ++t) {
    std::fill(dy.begin(), dy.end(), 0.0);
    dy[2 * m] = loss.d_pred[2 * t] * scale;
    dy[2 * m + 1] = loss.d_pred[2 * t + 1] * scale;
    d_hidden[t] = nn::linear_backward(bundle.mt.head, dec.hidden[t], dy);
  }
  auto dec_grad = nn::lstm_backward(bundle.mt.decoder, dec_cache, d_hidden, {}, {});
  auto d_init = fuse(dec_grad.d_h0, dec_grad.d_c0);
  auto d_fused = nn::linear_backward(bundle.mt.init, fused, d_init);
  std::span<const double> d_h(d_fused.data(), kHiddenDim);
  std::span<const double> d_ctx(d_fused.data() + kHiddenDim, kHiddenDim);
  nn::lstm_backward(bundle.mt.encoder, enc_cache, {}, d_h, {});
  context_backward(bundle.mt.context, ctx_cache, d_ctx);
  return loss.loss;
}

}  // namespace detail

/// Trains the trajectory decoder; requires normalization stats fitted by
/// train_di on the same bundle. Intention weights are left untouched.
inline TrainLog train_mt(ModelBundle& bundle, std::span<const EpisodeRecord> train,
                         std::span<const EpisodeRecord> val, const TrainParams& tp) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_mt: empty train or validation split");
  auto tr = detail::prepare(train, bundle.features, bundle.norm);
  auto va = detail::prepare(val, bundle.features, bundle.norm);
  auto params = mt_parameters(bundle);
  auto step = [&](std::size_t i, double scale) {
    return detail::mt_step(bundle, tr.windows[i], tr.records[i], scale, true);
  };
  auto eval = [&](std::size_t i) {
    return detail::mt_step(bundle, va.windows[i], va.records[i], 0.0, false);
  };
  return detail::run_training(params, train.size(), val.size(), tp, step, eval);
}

// ---------------------------------------------------------------------------
// Fed-forward LSTM baseline
// ---------------------------------------------------------------------------

namespace detail {

inline double ff_step(FfBundle& bundle, const FeatureWindow& window, const EpisodeRecord& rec,
                      double scale, bool backward) {
  FfModel& m = bundle.model;
  const std::vector<double> zeros(kHiddenDim, 0.0);
  nn::LstmCache enc_cache;
  ContextCache ctx_cache;
  auto enc = nn::lstm_forward(m.encoder, window.rows, zeros, zeros,
                              backward ? &enc_cache : nullptr);
  auto ctx = encode_context(m.context, rec.raster, backward ? &ctx_cache : nullptr);
  auto fused = fuse(enc.h, ctx);
  auto init = nn::linear_forward(m.init, fused);
  std::vector<double> h(init.begin(), init.begin() + kHiddenDim);
  std::vector<double> c(init.begin() + kHiddenDim, init.end());

  // Unrolled by hand because each step's input is the previous waypoint.
  std::vector<nn::LstmStepCache> step_caches;
  std::vector<std::vector<double>> hidden(kFutureSteps), waypoint(kFutureSteps);
  std::vector<double> wp{0.0, 0.0};
  std::vector<double> pred(2 * kFutureSteps), truth(2 * kFutureSteps);
  for (int t = 0; t < kFutureSteps; ++t) {
    nn::LstmCache one;
    auto out = nn::lstm_forward(m.decoder, {wp}, h, c, backward ? &one : nullptr);
    if (backward) step_caches.push_back(std::move(one.steps[0]));
    h = out.h;
    c = out.c;
    hidden[t] = h;
    wp = nn::linear_forward(m.head, h);
    waypoint[t] = wp;
    pred[2 * t] = wp[0];
    pred[2 * t + 1] = wp[1];
    truth[2 * t] = rec.future[t].x;
    truth[2 * t + 1] = rec.future[t].y;
  }
  auto loss = nn::mse(pred, truth);
  if (!backward) return loss.loss;

  std::vector<double> dh_next(kHiddenDim, 0.0), dc_next(kHiddenDim, 0.0);
  std::vector<double> d_wp_next; // gradient on waypoint t via the step t+1 input
  for (int t = kFutureSteps - 1; t >= 0; --t) {
    std::vector<double> d_wp{loss.d_pred[2 * t] * scale, loss.d_pred[2 * t + 1] * scale};
    if (!d_wp_next.empty()) {
      d_wp[0] += d_wp_next[0];
      d_wp[1] += d_wp_next[1];
    }
    auto d_h = nn::linear_backward(m.head, hidden[t], d_wp);
    for (int j = 0; j < kHiddenDim; ++j) d_h[j] += dh_next[j];
    nn::LstmCache one;
    one.steps.push_back(step_caches[t]);
    auto g = nn::lstm_backward(m.decoder, one, {}, d_h, dc_next);
    d_wp_next = g.d_inputs[0];
    dh_next = g.d_h0;
    dc_next = g.d_c0;
  }
  auto d_init = fuse(dh_next, dc_next);
  auto d_fused = nn::linear_backward(m.init, fused, d_init);
  std::span<const double> d_h(d_fused.data(), kHiddenDim);
  std::span<const double> d_ctx(d_fused.data() + kHiddenDim, kHiddenDim);
  nn::lstm_backward(m.encoder, enc_cache, {}, d_h, {});
  context_backward(m.context, ctx_cache, d_ctx);
  return loss.loss;
}

}  // namespace detail

inline TrainLog train_ff(FfBundle& bundle, std::span<const EpisodeRecord> train,
                         std::span<const EpisodeRecord> val, const TrainParams& tp) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_ff: empty train or validation split");
  bundle.norm = fit_norm_stats(train, bundle.features);
  auto tr = detail::prepare(train, bundle.features, bundle.norm);
  auto va = detail::prepare(val, bundle.features, bundle.norm);
  auto params = ff_parameters(bundle);
  auto step = [&](std::size_t i, double scale) {
    return detail::ff_step(bundle, tr.windows[i], tr.records[i], scale, true);
  };
  auto eval = [&](std::size_t i) {
    return detail::ff_step(bundle, va.windows[i], va.records[i], 0.0, false);
  };
  return detail::run_training(params, train.size(), val.size(), tp, step, eval);
}

// ---------------------------------------------------------------------------
// Flat multimodal baseline (winner takes all)
// ---------------------------------------------------------------------------

namespace detail {

inline double mtp_step(MtpBundle& bundle, const FeatureWindow& window,
                       const EpisodeRecord& rec, double scale, bool backward) {
  MtpModel& m = bundle.model;
  const std::vector<double> zeros(kHiddenDim, 0.0);
  nn::LstmCache enc_cache;
  ContextCache ctx_cache;
  auto enc = nn::lstm_forward(m.encoder, window.rows, zeros, zeros,
                              backward ? &enc_cache : nullptr);
  auto ctx = encode_context(m.context, rec.raster, backward ? &ctx_cache : nullptr);
  auto fused = fuse(enc.h, ctx);
  auto out = nn::linear_forward(m.head, fused);

  constexpr int kPerMode = 2 * kFutureSteps + 1;
  // Winner: the mode whose trajectory is closest to the truth by mean
  // displacement; regression on the winner, classification toward it.
  int winner = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int mo = 0; mo < kNumModes; ++mo) {
    double acc = 0.0;
    for (int t = 0; t < kFutureSteps; ++t) {
      const Vec2 p{out[mo * kPerMode + 2 * t], out[mo * kPerMode + 2 * t + 1]};
      acc += (p - rec.future[t]).norm();
    }
    if (acc < best) {
      best = acc;
      winner = mo;
    }
  }
  std::vector<double> pred(2 * kFutureSteps), truth(2 * kFutureSteps);
  for (int t = 0; t < kFutureSteps; ++t) {
    pred[2 * t] = out[winner * kPerMode + 2 * t];
    pred[2 * t + 1] = out[winner * kPerMode + 2 * t + 1];
    truth[2 * t] = rec.future[t].x;
    truth[2 * t + 1] = rec.future[t].y;
  }
  auto reg = nn::mse(pred, truth);
  std::vector<double> logits(kNumModes);
  for (int mo = 0; mo < kNumModes; ++mo) logits[mo] = out[mo * kPerMode + 2 * kFutureSteps];
  auto cls = nn::softmax_cross_entropy(logits, winner);
  const double loss = reg.loss + cls.loss;
  if (!backward) return loss;

  std::vector<double> d_out(MtpModel::kOut, 0.0);
  for (int t = 0; t < kFutureSteps; ++t) {
    d_out[winner * kPerMode + 2 * t] = reg.d_pred[2 * t] * scale;
    d_out[winner * kPerMode + 2 * t + 1] = reg.d_pred[2 * t + 1] * scale;
  }
  for (int mo = 0; mo < kNumModes; ++mo)
    d_out[mo * kPerMode + 2 * kFutureSteps] = cls.d_logits[mo] * scale;
  auto d_fused = nn::linear_backward(m.head, fused, d_out);
  std::span<const double> d_h(d_fused.data(), kHiddenDim);
  std::span<const double> d_ctx(d_fused.data() + kHiddenDim, kHiddenDim);
  nn::lstm_backward(m.encoder, enc_cache, {}, d_h, {});
  context_backward(m.context, ctx_cache, d_ctx);
  return loss;
}

}  // namespace detail

inline TrainLog train_mtp(MtpBundle& bundle, std::span<const EpisodeRecord> train,
                          std::span<const EpisodeRecord> val, const TrainParams& tp) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_mtp: empty train or validation split");
  bundle.norm = fit_norm_stats(train, bundle.features);
  auto tr = detail::prepare(train, bundle.features, bundle.norm);
  auto va = detail::prepare(val, bundle.features, bundle.norm);
  auto params = mtp_parameters(bundle);
  auto step = [&](std::size_t i, double scale) {
    return detail::mtp_step(bundle, tr.windows[i], tr.records[i], scale, true);
  };
  auto eval = [&](std::size_t i) {
    return detail::mtp_step(bundle, va.windows[i], va.records[i], 0.0, false);
  };
  return detail::run_training(params, train.size(), val.size(), tp, step, eval);
}

}  // namespace gazerisk
