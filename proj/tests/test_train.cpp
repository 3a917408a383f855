#include "gazerisk/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <vector>

#include "gazerisk/scenegen.hpp"
#include "testutil.hpp"

namespace gazerisk {
namespace {

constexpr double kGradTol = 1e-4;

/// Small three-maneuver dataset: one straight pass and one turn each way,
/// windowed into records. Labels cover all three classes.
std::vector<EpisodeRecord> build_records() {
  std::vector<Episode> eps;
  ScenarioConfig straight;
  straight.duration_s = 6.0;
  straight.seed = 11;
  eps.push_back(generate_episode(straight));
  eps.back().id = "s0";

  ScenarioConfig right;
  right.turn = 1;
  right.duration_s = 8.0;
  right.ramp_start_s = 3.0;
  right.gaze_lead_s = 1.0;
  right.seed = 12;
  eps.push_back(generate_episode(right));
  eps.back().id = "r0";

  ScenarioConfig left = right;
  left.turn = 2;
  left.seed = 13;
  eps.push_back(generate_episode(left));
  eps.back().id = "l0";
  return window_dataset(eps);
}

/// A fixed 32-record batch with all three labels present.
const std::vector<EpisodeRecord>& overfit_batch() {
  static const std::vector<EpisodeRecord> batch = [] {
    auto records = build_records();
    std::vector<EpisodeRecord> out;
    int n_turn1 = 0, n_turn2 = 0;
    for (const auto& r : records) {
      if (r.label == 0 && r.episode_id == "s0") out.push_back(r);
      if (r.label == 1 && n_turn1 < 11) {
        out.push_back(r);
        ++n_turn1;
      }
      if (r.label == 2 && n_turn2 < 10) {
        out.push_back(r);
        ++n_turn2;
      }
    }
    out.resize(32);
    return out;
  }();
  return batch;
}

int count_label(const std::vector<EpisodeRecord>& recs, int label) {
  int n = 0;
  for (const auto& r : recs)
    if (r.label == label) ++n;
  return n;
}

TEST(OverfitBatch, CoversAllLabels) {
  const auto& batch = overfit_batch();
  ASSERT_EQ(batch.size(), 32u);
  EXPECT_GE(count_label(batch, 0), 10);
  EXPECT_GE(count_label(batch, 1), 10);
  EXPECT_GE(count_label(batch, 2), 10);
}

/// Compares accumulated analytic gradients against central finite
/// differences on a random sample of entries of every parameter.
template <typename LossFn>
void check_sampled_grads(std::span<Parameter* const> params, LossFn&& loss, Rng& pick,
                         int samples_per_param) {
  for (Parameter* p : params) {
    const int n = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(samples_per_param), p->value.size()));
    for (int s = 0; s < n; ++s) {
      const std::size_t idx = pick.below(p->value.size());
      const double num = testutil::fd_derivative(&p->value.data[idx], loss);
      EXPECT_LT(testutil::rel_error(p->grad[idx], num), kGradTol)
          << "param of size " << p->value.size() << " entry " << idx;
    }
  }
}

TEST(GradCheck, IntentionStep) {
  auto bundle = init_bundle(FeatureSpec{}, 21);
  const auto& batch = overfit_batch();
  bundle.norm = fit_norm_stats(batch, bundle.features);
  const auto& rec = batch[3];
  auto w = make_feature_window(rec, bundle.features, bundle.norm);

  auto params = di_parameters(bundle);
  nn::zero_grads(params);
  detail::di_step(bundle, w, rec, 1.0, true);
  auto loss = [&] { return detail::di_step(bundle, w, rec, 1.0, false); };
  Rng pick(100);
  check_sampled_grads(params, loss, pick, 8);
}

TEST(GradCheck, TrajectoryStepAndFrozenIntention) {
  auto bundle = init_bundle(FeatureSpec{}, 22);
  const auto& batch = overfit_batch();
  bundle.norm = fit_norm_stats(batch, bundle.features);
  const auto& rec = batch[20];  // a turning record
  auto w = make_feature_window(rec, bundle.features, bundle.norm);

  auto mt_params = mt_parameters(bundle);
  auto di_params = di_parameters(bundle);
  nn::zero_grads(mt_params);
  nn::zero_grads(di_params);
  detail::mt_step(bundle, w, rec, 1.0, true);
  for (const Parameter* p : di_params)
    for (double g : p->grad.data) EXPECT_EQ(g, 0.0);  // trajectory loss never reaches them
  auto loss = [&] { return detail::mt_step(bundle, w, rec, 1.0, false); };
  Rng pick(101);
  check_sampled_grads(mt_params, loss, pick, 8);
}

TEST(GradCheck, FedForwardStep) {
  auto bundle = init_ff_bundle(FeatureSpec{}, 23);
  const auto& batch = overfit_batch();
  bundle.norm = fit_norm_stats(batch, bundle.features);
  const auto& rec = batch[25];
  auto w = make_feature_window(rec, bundle.features, bundle.norm);

  auto params = ff_parameters(bundle);
  nn::zero_grads(params);
  detail::ff_step(bundle, w, rec, 1.0, true);
  auto loss = [&] { return detail::ff_step(bundle, w, rec, 1.0, false); };
  Rng pick(102);
  check_sampled_grads(params, loss, pick, 10);
}

TEST(GradCheck, FlatMultimodalStep) {
  auto bundle = init_mtp_bundle(24);
  const auto& batch = overfit_batch();
  bundle.norm = fit_norm_stats(batch, bundle.features);
  const auto& rec = batch[10];
  auto w = make_feature_window(rec, bundle.features, bundle.norm);

  auto params = mtp_parameters(bundle);
  nn::zero_grads(params);
  detail::mtp_step(bundle, w, rec, 1.0, true);
  auto loss = [&] { return detail::mtp_step(bundle, w, rec, 1.0, false); };
  Rng pick(103);
  check_sampled_grads(params, loss, pick, 8);
}

TEST(TrainDi, LossesDecreaseAndBestWeightsAreRestored) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 30);
  TrainParams tp;
  tp.max_epochs = 5;
  tp.patience = 5;
  tp.seed = 1;
  auto log = train_di(bundle, batch, batch, tp);
  ASSERT_EQ(log.train_loss.size(), 5u);
  ASSERT_EQ(log.val_loss.size(), 5u);
  EXPECT_LT(log.train_loss.back(), log.train_loss.front());
  ASSERT_GE(log.best_epoch, 0);
  EXPECT_EQ(log.best_val, *std::min_element(log.val_loss.begin(), log.val_loss.end()));

  // With the best weights restored, re-evaluating reproduces best_val.
  auto va = detail::prepare(batch, bundle.features, bundle.norm);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    acc += detail::di_step(bundle, va.windows[i], va.records[i], 0.0, false);
  EXPECT_DOUBLE_EQ(acc / batch.size(), log.best_val);
}

TEST(Training, StopsWhenValidationStalls) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 31);
  TrainParams tp;
  tp.lr = 0.0;  // weights never move, so validation never improves
  tp.max_epochs = 50;
  tp.patience = 3;
  auto log = train_di(bundle, batch, batch, tp);
  EXPECT_EQ(log.val_loss.size(), 4u);  // first epoch sets the best, then patience runs out
  EXPECT_EQ(log.best_epoch, 0);
}

TEST(Training, MinTrainLossStopsEarly) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 32);
  TrainParams tp;
  tp.max_epochs = 10;
  tp.min_train_loss = 1e9;
  auto log = train_di(bundle, batch, batch, tp);
  EXPECT_EQ(log.train_loss.size(), 1u);
}

TEST(Training, BitExactlyReproducible) {
  const auto& batch = overfit_batch();
  TrainParams tp;
  tp.max_epochs = 3;
  tp.patience = 3;
  tp.seed = 7;

  auto a = init_bundle(FeatureSpec{}, 33);
  auto b = init_bundle(FeatureSpec{}, 33);
  auto log_a = train_di(a, batch, batch, tp);
  auto log_b = train_di(b, batch, batch, tp);
  ASSERT_EQ(log_a.train_loss.size(), log_b.train_loss.size());
  for (std::size_t i = 0; i < log_a.train_loss.size(); ++i) {
    EXPECT_EQ(log_a.train_loss[i], log_b.train_loss[i]);
    EXPECT_EQ(log_a.val_loss[i], log_b.val_loss[i]);
  }
  EXPECT_EQ(a.di.head.w.value.data, b.di.head.w.value.data);
  EXPECT_EQ(a.di.encoder.wx.value.data, b.di.encoder.wx.value.data);
}

TEST(TrainMt, LeavesIntentionModelUntouched) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 34);
  bundle.norm = fit_norm_stats(batch, bundle.features);
  auto di_params = di_parameters(bundle);
  const auto before = detail::snapshot(di_params);
  TrainParams tp;
  tp.max_epochs = 2;
  auto log = train_mt(bundle, batch, batch, tp);
  EXPECT_EQ(log.train_loss.size(), 2u);
  const auto after = detail::snapshot(di_params);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].data, after[i].data);
}

TEST(Training, RejectsEmptySplits) {
  const auto& batch = overfit_batch();
  std::vector<EpisodeRecord> empty;
  auto bundle = init_bundle(FeatureSpec{}, 35);
  TrainParams tp;
  EXPECT_THROW(train_di(bundle, empty, batch, tp), std::invalid_argument);
  EXPECT_THROW(train_di(bundle, batch, empty, tp), std::invalid_argument);
  EXPECT_THROW(train_mt(bundle, empty, batch, tp), std::invalid_argument);
  auto ff = init_ff_bundle(FeatureSpec{}, 35);
  EXPECT_THROW(train_ff(ff, batch, empty, tp), std::invalid_argument);
  auto mtp = init_mtp_bundle(35);
  EXPECT_THROW(train_mtp(mtp, empty, batch, tp), std::invalid_argument);
}

TEST(TrainDi, MemorizesOneBatch) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 40);
  TrainParams tp;
  tp.lr = 0.01;
  tp.max_epochs = 300;  // one 32-record batch per epoch = one step per epoch
  tp.patience = 300;
  tp.seed = 2;
  tp.min_train_loss = 0.005;
  auto log = train_di(bundle, batch, batch, tp);
  EXPECT_LT(log.best_val, 0.01) << "epochs used: " << log.train_loss.size();
}

TEST(TrainMt, MemorizesOneBatch) {
  const auto& batch = overfit_batch();
  auto bundle = init_bundle(FeatureSpec{}, 41);
  bundle.norm = fit_norm_stats(batch, bundle.features);
  TrainParams tp;
  tp.lr = 0.02;       // aggressive on purpose: this memorizes one batch, nothing more
  tp.lr_decay = 0.998; // cools the step size so the loss settles instead of cycling
  tp.max_epochs = 600;
  tp.patience = 600;
  tp.seed = 3;
  tp.min_train_loss = 2.5e-4; // mean displacement is at most sqrt(2 * mse)
  auto log = train_mt(bundle, batch, batch, tp);

  double worst = 0.0, mean = 0.0;
  for (const auto& rec : batch) {
    auto w = make_feature_window(rec, bundle.features, bundle.norm);
    auto modes = predict_multimodal(w, rec.raster, bundle);
    const double d = ade(modes.trajectories[rec.label], rec.future);
    worst = std::max(worst, d);
    mean += d;
  }
  mean /= batch.size();
  EXPECT_LT(mean, 0.05) << "epochs used: " << log.train_loss.size()
                        << " best mse: " << log.best_val;
  EXPECT_LT(worst, 0.25);
}

TEST(Baselines, TrainingReducesLoss) {
  const auto& batch = overfit_batch();
  TrainParams tp;
  tp.lr = 0.01;
  tp.max_epochs = 15;
  tp.patience = 15;
  tp.seed = 4;

  auto ff = init_ff_bundle(FeatureSpec{}, 42);
  auto ff_log = train_ff(ff, batch, batch, tp);
  EXPECT_LT(ff_log.best_val, 0.6 * ff_log.val_loss.front());

  auto mtp = init_mtp_bundle(43);
  auto mtp_log = train_mtp(mtp, batch, batch, tp);
  EXPECT_LT(mtp_log.best_val, 0.6 * mtp_log.val_loss.front());
}

}  // namespace
}  // namespace gazerisk
