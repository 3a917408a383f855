#pragma once

// Intention and trajectory models over windowed records: an intention
// classifier (LSTM over the feature window fused with a convolutional
// context encoding), a multimodal trajectory decoder with one mode per
// maneuver, the trajectory filter that picks the most probable mode, and
// three baselines (constant turn rate and acceleration, fed-forward LSTM,
// and a flat multimodal FC head).

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazerisk/geometry.hpp"
#include "gazerisk/nn.hpp"
#include "gazerisk/scenegen.hpp"
#include "gazerisk/serialization.hpp"
#include "gazerisk/tensor.hpp"

namespace gazerisk {

inline constexpr double kScreenWidth = 1920.0;
inline constexpr double kScreenHeight = 1080.0;
inline constexpr int kHiddenDim = 128;
inline constexpr int kFusedDim = 2 * kHiddenDim;
inline constexpr int kNumModes = 3;

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Which record columns feed the models. The steering column exists only as
/// the in-memory side channel of records built straight from episodes.
struct FeatureSpec {
  bool use_state = true; // px, py, vx, vy, theta
  bool use_aoi = true;   // mu_x, mu_y, sigma_x, sigma_y (pre-scaled to [0,1])
  bool use_steer = false;

  int dim() const { return (use_state ? 5 : 0) + (use_aoi ? 4 : 0) + (use_steer ? 1 : 0); }
};

/// Per-column z-scoring statistics, fitted on the training split only.
struct NormStats {
  std::vector<double> mean, stddev;

  double scale(int c, double v) const {
    const double s = stddev[c] < 1e-8 ? 1.0 : stddev[c];
    return (v - mean[c]) / s;
  }
};

/// Raw (un-normalized) feature rows for one record: AOI pixels scaled by the
/// image dimensions, layout per `spec`.
inline std::vector<std::vector<double>> raw_feature_rows(const EpisodeRecord& rec,
                                                         const FeatureSpec& spec) {
  if (spec.use_steer && rec.steer.size() != rec.obs.size())
    throw std::invalid_argument(
        "raw_feature_rows: record lacks the steering side channel (rebuild from raw "
        "episodes)");
  std::vector<std::vector<double>> rows(rec.obs.size());
  for (std::size_t r = 0; r < rec.obs.size(); ++r) {
    auto& row = rows[r];
    row.reserve(spec.dim());
    const auto& o = rec.obs[r];
    if (spec.use_state) row.insert(row.end(), {o[0], o[1], o[2], o[3], o[4]});
    if (spec.use_aoi)
      row.insert(row.end(), {o[5] / kScreenWidth, o[6] / kScreenHeight,
                             o[7] / kScreenWidth, o[8] / kScreenHeight});
    if (spec.use_steer) row.push_back(rec.steer[r]);
  }
  return rows;
}

inline NormStats fit_norm_stats(std::span<const EpisodeRecord> records,
                                const FeatureSpec& spec) {
  if (records.empty()) throw std::invalid_argument("fit_norm_stats: no records");
  const int d = spec.dim();
  NormStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  std::size_t n = 0;
  for (const auto& rec : records)
    for (const auto& row : raw_feature_rows(rec, spec)) {
      for (int c = 0; c < d; ++c) st.mean[c] += row[c];
      ++n;
    }
  for (int c = 0; c < d; ++c) st.mean[c] /= static_cast<double>(n);
  for (const auto& rec : records)
    for (const auto& row : raw_feature_rows(rec, spec))
      for (int c = 0; c < d; ++c) {
        const double dv = row[c] - st.mean[c];
        st.stddev[c] += dv * dv;
      }
  for (int c = 0; c < d; ++c)
    st.stddev[c] = std::sqrt(st.stddev[c] / static_cast<double>(n > 1 ? n - 1 : 1));
  return st;
}

/// Normalized 20-row model input.
struct FeatureWindow {
  std::vector<std::vector<double>> rows;
};

inline FeatureWindow make_feature_window(const EpisodeRecord& rec, const FeatureSpec& spec,
                                         const NormStats& norm) {
  if (static_cast<int>(norm.mean.size()) != spec.dim())
    throw std::invalid_argument("make_feature_window: normalization dim mismatch");
  FeatureWindow w;
  w.rows = raw_feature_rows(rec, spec);
  for (auto& row : w.rows)
    for (int c = 0; c < spec.dim(); ++c) row[c] = norm.scale(c, row[c]);
  return w;
}

// ---------------------------------------------------------------------------
// Context encoder
// ---------------------------------------------------------------------------

inline constexpr int kCtxConv1Out = 15; // (32-3)/2+1
inline constexpr int kCtxConv2Out = 7;  // (15-3)/2+1
inline constexpr int kCtxFlat = 16 * kCtxConv2Out * kCtxConv2Out; // 784

struct ContextEncoder {
  nn::Conv2d conv1{3, 8, 3, 2};
  nn::Conv2d conv2{8, 16, 3, 2};
  nn::Linear fc{kCtxFlat, kHiddenDim};
};

struct ContextCache {
  std::vector<double> x, a1, a2, out;
};

/// conv(3->8, 3x3, s2) -> tanh -> conv(8->16, 3x3, s2) -> tanh -> flatten ->
/// FC(784->128) -> tanh.
inline std::vector<double> encode_context(const ContextEncoder& enc, const SceneRaster& raster,
                                          ContextCache* cache = nullptr) {
  if (static_cast<int>(raster.cells.size()) != SceneRaster::kCells)
    throw std::invalid_argument("encode_context: raster size mismatch");
  std::vector<double> x(raster.cells.begin(), raster.cells.end());
  auto a1 = nn::tanh_forward(nn::conv2d_forward(enc.conv1, x, SceneRaster::kGrid,
                                                SceneRaster::kGrid));
  auto a2 = nn::tanh_forward(nn::conv2d_forward(enc.conv2, a1, kCtxConv1Out, kCtxConv1Out));
  auto out = nn::tanh_forward(nn::linear_forward(enc.fc, a2));
  ensure_finite(out, "encode_context output");
  if (cache) {
    cache->x = std::move(x);
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
    cache->out = out;
  }
  return out;
}

/// Accumulates parameter gradients for the encoder; the raster itself is an
/// input, so its gradient is discarded.
inline void context_backward(ContextEncoder& enc, const ContextCache& cache,
                             std::span<const double> d_out) {
  auto d_fc = nn::tanh_backward(cache.out, d_out);
  auto d_a2 = nn::linear_backward(enc.fc, cache.a2, d_fc);
  auto d_y2 = nn::tanh_backward(cache.a2, d_a2);
  auto d_a1 = nn::conv2d_backward(enc.conv2, cache.a1, kCtxConv1Out, kCtxConv1Out, d_y2);
  auto d_y1 = nn::tanh_backward(cache.a1, d_a1);
  nn::conv2d_backward(enc.conv1, cache.x, SceneRaster::kGrid, SceneRaster::kGrid, d_y1);
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

struct IntentionDist {
  std::array<double, kNumModes> probs{};
};

struct ModeSet {
  IntentionDist probs;
  std::array<Trajectory, kNumModes> trajectories;
};

/// Intention classifier: window LSTM final hidden (128) fused with the
/// context feature (128), FC to 3 logits.
struct DiModel {
  nn::LstmParams encoder;
  ContextEncoder context;
  nn::Linear head{kFusedDim, kNumModes};

  DiModel() = default;
  explicit DiModel(int input_dim) : encoder(input_dim, kHiddenDim) {}
};

/// Multimodal trajectory decoder: fused feature projects to the decoder's
/// initial (h, c); the decoder runs 10 steps on zero inputs and a per-step FC
/// emits an (x, y) waypoint for each of the 3 modes.
struct MtModel {
  nn::LstmParams encoder;
  ContextEncoder context;
  nn::Linear init{kFusedDim, 2 * kHiddenDim};
  nn::LstmParams decoder{2, kHiddenDim};
  nn::Linear head{kHiddenDim, 2 * kNumModes};

  MtModel() = default;
  explicit MtModel(int input_dim) : encoder(input_dim, kHiddenDim) {}
};

/// Single-mode decoder whose step input is its own previous waypoint.
struct FfModel {
  nn::LstmParams encoder;
  ContextEncoder context;
  nn::Linear init{kFusedDim, 2 * kHiddenDim};
  nn::LstmParams decoder{2, kHiddenDim};
  nn::Linear head{kHiddenDim, 2};

  FfModel() = default;
  explicit FfModel(int input_dim) : encoder(input_dim, kHiddenDim) {}
};

/// Flat multimodal head: fused feature -> FC -> 3 x (20 coordinates + 1
/// logit) = 63 values.
struct MtpModel {
  static constexpr int kOut = kNumModes * (2 * kFutureSteps + 1);

  nn::LstmParams encoder;
  ContextEncoder context;
  nn::Linear head{kFusedDim, kOut};

  MtpModel() = default;
  explicit MtpModel(int input_dim) : encoder(input_dim, kHiddenDim) {}
};

/// The full intention + trajectory model with its preprocessing state.
struct ModelBundle {
  FeatureSpec features;
  NormStats norm;
  DiModel di;
  MtModel mt;
};

namespace detail {

inline void check_window(const FeatureWindow& w, int expect_dim, const char* what) {
  if (static_cast<int>(w.rows.size()) != kObsFrames)
    throw std::invalid_argument(std::string(what) + ": window must have 20 rows");
  for (const auto& r : w.rows)
    if (static_cast<int>(r.size()) != expect_dim)
      throw std::invalid_argument(std::string(what) + ": window feature dim mismatch");
}

inline std::vector<double> fuse(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

inline IntentionDist predict_intention(const FeatureWindow& window, const SceneRaster& raster,
                                       const ModelBundle& bundle) {
  detail::check_window(window, bundle.di.encoder.input_dim(), "predict_intention");
  const std::vector<double> zeros(kHiddenDim, 0.0);
  auto enc = nn::lstm_forward(bundle.di.encoder, window.rows, zeros, zeros);
  auto ctx = encode_context(bundle.di.context, raster);
  auto logits = nn::linear_forward(bundle.di.head, detail::fuse(enc.h, ctx));
  auto probs = nn::softmax(logits);
  IntentionDist dist;
  for (int i = 0; i < kNumModes; ++i) dist.probs[i] = probs[i];
  return dist;
}

/// Decoder outputs for all modes: [step][2 * mode + (x|y)].
inline std::vector<std::vector<double>> decode_multimodal(const MtModel& mt,
                                                          std::span<const double> fused) {
  auto init = nn::linear_forward(mt.init, fused);
  std::span<const double> h0(init.data(), kHiddenDim);
  std::span<const double> c0(init.data() + kHiddenDim, kHiddenDim);
  const std::vector<std::vector<double>> zero_inputs(kFutureSteps, std::vector<double>(2, 0.0));
  auto dec = nn::lstm_forward(mt.decoder, zero_inputs, h0, c0);
  std::vector<std::vector<double>> out(kFutureSteps);
  for (int t = 0; t < kFutureSteps; ++t) out[t] = nn::linear_forward(mt.head, dec.hidden[t]);
  return out;
}

inline ModeSet predict_multimodal(const FeatureWindow& window, const SceneRaster& raster,
                                  const ModelBundle& bundle) {
  detail::check_window(window, bundle.mt.encoder.input_dim(), "predict_multimodal");
  const std::vector<double> zeros(kHiddenDim, 0.0);
  auto enc = nn::lstm_forward(bundle.mt.encoder, window.rows, zeros, zeros);
  auto ctx = encode_context(bundle.mt.context, raster);
  auto steps = decode_multimodal(bundle.mt, detail::fuse(enc.h, ctx));

  ModeSet modes;
  modes.probs = predict_intention(window, raster, bundle);
  for (int m = 0; m < kNumModes; ++m) {
    modes.trajectories[m].step = 0.3;
    modes.trajectories[m].waypoints.resize(kFutureSteps);
    for (int t = 0; t < kFutureSteps; ++t)
      modes.trajectories[m].waypoints[t] = {steps[t][2 * m], steps[t][2 * m + 1]};
  }
  return modes;
}

/// The trajectory filter: picks the maneuver mode with the maximum
/// probability; ties go to the lowest index.
inline std::pair<int, Trajectory> filter_trajectory(const ModeSet& modes) {
  int best = 0;
  for (int i = 1; i < kNumModes; ++i)
    if (modes.probs.probs[i] > modes.probs.probs[best]) best = i;
  return {best, modes.trajectories[best]};
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

inline Trajectory ff_lstm_predict(const FeatureWindow& window, const SceneRaster& raster,
                                  const FfModel& ff) {
  detail::check_window(window, ff.encoder.input_dim(), "ff_lstm_predict");
  const std::vector<double> zeros(kHiddenDim, 0.0);
  auto enc = nn::lstm_forward(ff.encoder, window.rows, zeros, zeros);
  auto ctx = encode_context(ff.context, raster);
  auto init = nn::linear_forward(ff.init, detail::fuse(enc.h, ctx));
  std::vector<double> h(init.begin(), init.begin() + kHiddenDim);
  std::vector<double> c(init.begin() + kHiddenDim, init.end());
  Trajectory traj;
  traj.step = 0.3;
  std::vector<double> wp{0.0, 0.0};
  for (int t = 0; t < kFutureSteps; ++t) {
    auto step = nn::lstm_forward(ff.decoder, {wp}, h, c);
    h = step.h;
    c = step.c;
    wp = nn::linear_forward(ff.head, h);
    traj.waypoints.push_back({wp[0], wp[1]});
  }
  return traj;
}

/// Splits the 63-value head output into 3 trajectories plus mode
/// probabilities. Layout per mode: 20 coordinates (x1, y1, ..., x10, y10)
/// followed by one logit.
inline ModeSet mtp_lstm_predict(const FeatureWindow& window, const SceneRaster& raster,
                                const MtpModel& mtp) {
  detail::check_window(window, mtp.encoder.input_dim(), "mtp_lstm_predict");
  const std::vector<double> zeros(kHiddenDim, 0.0);
  auto enc = nn::lstm_forward(mtp.encoder, window.rows, zeros, zeros);
  auto ctx = encode_context(mtp.context, raster);
  auto out = nn::linear_forward(mtp.head, detail::fuse(enc.h, ctx));

  ModeSet modes;
  std::vector<double> logits(kNumModes);
  for (int m = 0; m < kNumModes; ++m) {
    const int base = m * (2 * kFutureSteps + 1);
    modes.trajectories[m].step = 0.3;
    modes.trajectories[m].waypoints.resize(kFutureSteps);
    for (int t = 0; t < kFutureSteps; ++t)
      modes.trajectories[m].waypoints[t] = {out[base + 2 * t], out[base + 2 * t + 1]};
    logits[m] = out[base + 2 * kFutureSteps];
  }
  auto probs = nn::softmax(logits);
  for (int i = 0; i < kNumModes; ++i) modes.probs.probs[i] = probs[i];
  return modes;
}

// ---------------------------------------------------------------------------
// CTRA baseline
// ---------------------------------------------------------------------------

/// Closed-form constant-turn-rate-and-acceleration rollout. Inside the small
/// turn-rate guard the positions use the second-order expansion in the turn
/// rate, so trajectories stay continuous across the switch.
inline Trajectory ctra_predict(const VehicleState& state, double accel, double yaw_rate,
                               double horizon = 3.0, double step = 0.3) {
  if (!std::isfinite(accel) || !std::isfinite(yaw_rate))
    throw std::invalid_argument("ctra_predict: non-finite inputs");
  const double x0 = state.pose.x, y0 = state.pose.y, th0 = state.pose.heading;
  const double v0 = state.speed();
  const double c0 = std::cos(th0), s0 = std::sin(th0);
  Trajectory traj;
  traj.step = step;
  const int n = static_cast<int>(std::llround(horizon / step));
  for (int k = 1; k <= n; ++k) {
    const double t = k * step;
    double dx, dy;
    if (std::abs(yaw_rate) < 1e-4) {
      const double along = v0 * t + 0.5 * accel * t * t;
      const double across = yaw_rate * (v0 * t * t / 2.0 + accel * t * t * t / 3.0);
      const double shrink = yaw_rate * yaw_rate * (v0 * t * t * t / 6.0 + accel * t * t * t * t / 8.0);
      dx = c0 * (along - shrink) - s0 * across;
      dy = s0 * (along - shrink) + c0 * across;
    } else {
      const double th = th0 + yaw_rate * t;
      const double vt = v0 + accel * t;
      const double w = yaw_rate, w2 = yaw_rate * yaw_rate;
      dx = (vt * std::sin(th) - v0 * s0) / w + accel * (std::cos(th) - c0) / w2;
      dy = -(vt * std::cos(th) - v0 * c0) / w + accel * (std::sin(th) - s0) / w2;
    }
    traj.waypoints.push_back({x0 + dx, y0 + dy});
  }
  return traj;
}

/// Base state plus least-squares acceleration and yaw rate from the last
/// 0.5 s (6 samples) of a record's raw observation rows.
struct CtraInput {
  VehicleState state;
  double accel = 0.0;
  double yaw_rate = 0.0;
};

inline CtraInput estimate_ctra_input(std::span<const std::array<double, 9>> obs) {
  if (obs.size() < 6) throw std::invalid_argument("estimate_ctra_input: need 6 rows");
  const int n = 6;
  const std::size_t first = obs.size() - n;
  // Unwrapped headings and speeds at t = -0.5 ... 0.
  std::vector<double> t(n), speed(n), heading(n);
  double prev = obs[first][4], acc_heading = obs[first][4];
  for (int i = 0; i < n; ++i) {
    const auto& row = obs[first + i];
    t[i] = (i - (n - 1)) * kFrameDt;
    speed[i] = std::hypot(row[2], row[3]);
    acc_heading += wrap_angle(row[4] - prev);
    prev = row[4];
    heading[i] = acc_heading;
  }
  auto slope = [&](const std::vector<double>& y) {
    double tm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
      tm += t[i];
      ym += y[i];
    }
    tm /= n;
    ym /= n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      num += (t[i] - tm) * (y[i] - ym);
      den += (t[i] - tm) * (t[i] - tm);
    }
    return num / den;
  };
  CtraInput in;
  const auto& last = obs.back();
  in.state = {Pose2D{last[0], last[1], last[4]}, last[2], last[3]};
  in.accel = slope(speed);
  in.yaw_rate = slope(heading);
  return in;
}

inline Trajectory ctra_from_record(const EpisodeRecord& rec) {
  const CtraInput in = estimate_ctra_input(rec.obs);
  return ctra_predict(in.state, in.accel, in.yaw_rate);
}

// ---------------------------------------------------------------------------
// Initialization and checkpoint mapping
// ---------------------------------------------------------------------------

inline void init_context(ContextEncoder& enc, Rng& rng) {
  nn::init_conv(enc.conv1, rng);
  nn::init_conv(enc.conv2, rng);
  nn::init_linear(enc.fc, rng);
}

inline ModelBundle init_bundle(const FeatureSpec& spec, std::uint64_t seed) {
  ModelBundle b;
  b.features = spec;
  b.di = DiModel(spec.dim());
  b.mt = MtModel(spec.dim());
  Rng rng(derive_seed(seed, 0xD1));
  nn::init_lstm(b.di.encoder, rng);
  init_context(b.di.context, rng);
  nn::init_linear(b.di.head, rng);
  Rng rng_mt(derive_seed(seed, 0x317));
  nn::init_lstm(b.mt.encoder, rng_mt);
  init_context(b.mt.context, rng_mt);
  nn::init_linear(b.mt.init, rng_mt);
  nn::init_lstm(b.mt.decoder, rng_mt);
  nn::init_linear(b.mt.head, rng_mt);
  b.norm.mean.assign(spec.dim(), 0.0);
  b.norm.stddev.assign(spec.dim(), 1.0);
  return b;
}

namespace detail {

inline void push_ctx_params(std::vector<Parameter*>& out, ContextEncoder& enc) {
  out.insert(out.end(), {&enc.conv1.k, &enc.conv1.b, &enc.conv2.k, &enc.conv2.b,
                         &enc.fc.w, &enc.fc.b});
}

}  // namespace detail

inline std::vector<Parameter*> di_parameters(ModelBundle& b) {
  std::vector<Parameter*> out{&b.di.encoder.wx, &b.di.encoder.wh, &b.di.encoder.b};
  detail::push_ctx_params(out, b.di.context);
  out.insert(out.end(), {&b.di.head.w, &b.di.head.b});
  return out;
}

inline std::vector<Parameter*> mt_parameters(ModelBundle& b) {
  std::vector<Parameter*> out{&b.mt.encoder.wx, &b.mt.encoder.wh, &b.mt.encoder.b};
  detail::push_ctx_params(out, b.mt.context);
  out.insert(out.end(), {&b.mt.init.w, &b.mt.init.b, &b.mt.decoder.wx, &b.mt.decoder.wh,
                         &b.mt.decoder.b, &b.mt.head.w, &b.mt.head.b});
  return out;
}

namespace detail {

struct NamedParam {
  std::string name;
  Parameter* param;
};

inline std::vector<NamedParam> bundle_schema(ModelBundle& b) {
  return {
      {"di.encoder.wx", &b.di.encoder.wx},   {"di.encoder.wh", &b.di.encoder.wh},
      {"di.encoder.b", &b.di.encoder.b},     {"di.context.conv1.k", &b.di.context.conv1.k},
      {"di.context.conv1.b", &b.di.context.conv1.b},
      {"di.context.conv2.k", &b.di.context.conv2.k},
      {"di.context.conv2.b", &b.di.context.conv2.b},
      {"di.context.fc.w", &b.di.context.fc.w}, {"di.context.fc.b", &b.di.context.fc.b},
      {"di.head.w", &b.di.head.w},           {"di.head.b", &b.di.head.b},
      {"mt.encoder.wx", &b.mt.encoder.wx},   {"mt.encoder.wh", &b.mt.encoder.wh},
      {"mt.encoder.b", &b.mt.encoder.b},     {"mt.context.conv1.k", &b.mt.context.conv1.k},
      {"mt.context.conv1.b", &b.mt.context.conv1.b},
      {"mt.context.conv2.k", &b.mt.context.conv2.k},
      {"mt.context.conv2.b", &b.mt.context.conv2.b},
      {"mt.context.fc.w", &b.mt.context.fc.w}, {"mt.context.fc.b", &b.mt.context.fc.b},
      {"mt.init.w", &b.mt.init.w},           {"mt.init.b", &b.mt.init.b},
      {"mt.decoder.wx", &b.mt.decoder.wx},   {"mt.decoder.wh", &b.mt.decoder.wh},
      {"mt.decoder.b", &b.mt.decoder.b},     {"mt.head.w", &b.mt.head.w},
      {"mt.head.b", &b.mt.head.b},
  };
}

}  // namespace detail

namespace detail {

inline void append_preproc_tensors(std::vector<NamedTensor>& out, const FeatureSpec& spec,
                                   const NormStats& norm) {
  Tensor mask({3});
  mask.data = {spec.use_state ? 1.0 : 0.0, spec.use_aoi ? 1.0 : 0.0,
               spec.use_steer ? 1.0 : 0.0};
  out.push_back({"features.mask", mask});
  Tensor mean({static_cast<int>(norm.mean.size())});
  mean.data = norm.mean;
  Tensor stddev({static_cast<int>(norm.stddev.size())});
  stddev.data = norm.stddev;
  out.push_back({"norm.mean", mean});
  out.push_back({"norm.stddev", stddev});
}

}  // namespace detail

inline std::vector<NamedTensor> bundle_to_tensors(ModelBundle bundle) {
  std::vector<NamedTensor> out;
  for (const auto& np : detail::bundle_schema(bundle)) out.push_back({np.name, np.param->value});
  detail::append_preproc_tensors(out, bundle.features, bundle.norm);
  return out;
}

namespace detail {

inline const Tensor& get_tensor(const std::map<std::string, Tensor>& tensors,
                                const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

inline FeatureSpec read_feature_spec(const std::map<std::string, Tensor>& tensors) {
  const Tensor& mask = get_tensor(tensors, "features.mask");
  if (mask.data.size() != 3)
    throw std::runtime_error("checkpoint features.mask must have 3 entries");
  return {mask.data[0] != 0.0, mask.data[1] != 0.0, mask.data[2] != 0.0};
}

inline NormStats read_norm(const std::map<std::string, Tensor>& tensors,
                           const FeatureSpec& spec) {
  NormStats norm;
  norm.mean = get_tensor(tensors, "norm.mean").data;
  norm.stddev = get_tensor(tensors, "norm.stddev").data;
  if (static_cast<int>(norm.mean.size()) != spec.dim() ||
      static_cast<int>(norm.stddev.size()) != spec.dim())
    throw std::runtime_error("checkpoint normalization dim mismatch");
  return norm;
}

template <typename Schema>
inline void load_params_from(const std::map<std::string, Tensor>& tensors,
                             const Schema& schema) {
  for (const auto& np : schema) {
    const Tensor& t = get_tensor(tensors, np.name);
    if (t.shape != np.param->value.shape)
      throw std::runtime_error("checkpoint shape mismatch for '" + np.name + "'");
    np.param->value = t;
    np.param->grad = Tensor(t.shape);
  }
}

}  // namespace detail

inline ModelBundle bundle_from_tensors(const std::map<std::string, Tensor>& tensors) {
  const FeatureSpec spec = detail::read_feature_spec(tensors);
  ModelBundle b;
  b.features = spec;
  b.di = DiModel(spec.dim());
  b.mt = MtModel(spec.dim());
  detail::load_params_from(tensors, detail::bundle_schema(b));
  b.norm = detail::read_norm(tensors, spec);
  return b;
}

inline void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  save_checkpoint(path, bundle_to_tensors(bundle));
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_tensors(load_checkpoint(path));
}

// ---------------------------------------------------------------------------
// Baseline bundles
// ---------------------------------------------------------------------------

struct FfBundle {
  FeatureSpec features;
  NormStats norm;
  FfModel model;
};

/// The flat multimodal baseline drops the AOI columns by contract.
struct MtpBundle {
  FeatureSpec features{true, false, false};
  NormStats norm;
  MtpModel model;
};

inline FfBundle init_ff_bundle(const FeatureSpec& spec, std::uint64_t seed) {
  FfBundle b;
  b.features = spec;
  b.model = FfModel(spec.dim());
  Rng rng(derive_seed(seed, 0xFF));
  nn::init_lstm(b.model.encoder, rng);
  init_context(b.model.context, rng);
  nn::init_linear(b.model.init, rng);
  nn::init_lstm(b.model.decoder, rng);
  nn::init_linear(b.model.head, rng);
  b.norm.mean.assign(spec.dim(), 0.0);
  b.norm.stddev.assign(spec.dim(), 1.0);
  return b;
}

inline MtpBundle init_mtp_bundle(std::uint64_t seed) {
  MtpBundle b;
  b.model = MtpModel(b.features.dim());
  Rng rng(derive_seed(seed, 0x317B));
  nn::init_lstm(b.model.encoder, rng);
  init_context(b.model.context, rng);
  nn::init_linear(b.model.head, rng);
  b.norm.mean.assign(b.features.dim(), 0.0);
  b.norm.stddev.assign(b.features.dim(), 1.0);
  return b;
}

inline std::vector<Parameter*> ff_parameters(FfBundle& b) {
  std::vector<Parameter*> out{&b.model.encoder.wx, &b.model.encoder.wh, &b.model.encoder.b};
  detail::push_ctx_params(out, b.model.context);
  out.insert(out.end(), {&b.model.init.w, &b.model.init.b, &b.model.decoder.wx,
                         &b.model.decoder.wh, &b.model.decoder.b, &b.model.head.w,
                         &b.model.head.b});
  return out;
}

inline std::vector<Parameter*> mtp_parameters(MtpBundle& b) {
  std::vector<Parameter*> out{&b.model.encoder.wx, &b.model.encoder.wh, &b.model.encoder.b};
  detail::push_ctx_params(out, b.model.context);
  out.insert(out.end(), {&b.model.head.w, &b.model.head.b});
  return out;
}

namespace detail {

inline std::vector<NamedParam> ff_schema(FfBundle& b) {
  return {
      {"ff.encoder.wx", &b.model.encoder.wx}, {"ff.encoder.wh", &b.model.encoder.wh},
      {"ff.encoder.b", &b.model.encoder.b},   {"ff.context.conv1.k", &b.model.context.conv1.k},
      {"ff.context.conv1.b", &b.model.context.conv1.b},
      {"ff.context.conv2.k", &b.model.context.conv2.k},
      {"ff.context.conv2.b", &b.model.context.conv2.b},
      {"ff.context.fc.w", &b.model.context.fc.w}, {"ff.context.fc.b", &b.model.context.fc.b},
      {"ff.init.w", &b.model.init.w},         {"ff.init.b", &b.model.init.b},
      {"ff.decoder.wx", &b.model.decoder.wx}, {"ff.decoder.wh", &b.model.decoder.wh},
      {"ff.decoder.b", &b.model.decoder.b},   {"ff.head.w", &b.model.head.w},
      {"ff.head.b", &b.model.head.b},
  };
}

inline std::vector<NamedParam> mtp_schema(MtpBundle& b) {
  return {
      {"mtp.encoder.wx", &b.model.encoder.wx}, {"mtp.encoder.wh", &b.model.encoder.wh},
      {"mtp.encoder.b", &b.model.encoder.b},
      {"mtp.context.conv1.k", &b.model.context.conv1.k},
      {"mtp.context.conv1.b", &b.model.context.conv1.b},
      {"mtp.context.conv2.k", &b.model.context.conv2.k},
      {"mtp.context.conv2.b", &b.model.context.conv2.b},
      {"mtp.context.fc.w", &b.model.context.fc.w},
      {"mtp.context.fc.b", &b.model.context.fc.b},
      {"mtp.head.w", &b.model.head.w},         {"mtp.head.b", &b.model.head.b},
  };
}

}  // namespace detail

inline void save_ff_bundle(const std::filesystem::path& path, FfBundle bundle) {
  std::vector<NamedTensor> out;
  for (const auto& np : detail::ff_schema(bundle)) out.push_back({np.name, np.param->value});
  detail::append_preproc_tensors(out, bundle.features, bundle.norm);
  save_checkpoint(path, out);
}

inline FfBundle load_ff_bundle(const std::filesystem::path& path) {
  const auto tensors = load_checkpoint(path);
  const FeatureSpec spec = detail::read_feature_spec(tensors);
  FfBundle b;
  b.features = spec;
  b.model = FfModel(spec.dim());
  detail::load_params_from(tensors, detail::ff_schema(b));
  b.norm = detail::read_norm(tensors, spec);
  return b;
}

inline void save_mtp_bundle(const std::filesystem::path& path, MtpBundle bundle) {
  std::vector<NamedTensor> out;
  for (const auto& np : detail::mtp_schema(bundle)) out.push_back({np.name, np.param->value});
  detail::append_preproc_tensors(out, bundle.features, bundle.norm);
  save_checkpoint(path, out);
}

inline MtpBundle load_mtp_bundle(const std::filesystem::path& path) {
  const auto tensors = load_checkpoint(path);
  const FeatureSpec spec = detail::read_feature_spec(tensors);
  MtpBundle b;
  b.features = spec;
  b.model = MtpModel(spec.dim());
  detail::load_params_from(tensors, detail::mtp_schema(b));
  b.norm = detail::read_norm(tensors, spec);
  return b;
}

}  // namespace gazerisk
