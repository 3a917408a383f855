#include "gazerisk/aoi.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <utility>
#include <vector>

#include "gazerisk/rng.hpp"

namespace gazerisk {
namespace {

std::vector<GazeSample> make_samples(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<GazeSample> out;
  double t = 0.0;
  for (auto [u, v] : pts) out.push_back({u, v, t += 0.011});
  return out;
}

// Independent two-pass mean/std/corr, the textbook way.
struct Moments {
  double mu, mv, su, sv, rho;
};
Moments oracle_moments(const std::vector<GazeSample>& s) {
  const double n = static_cast<double>(s.size());
  double mu = 0, mv = 0;
  for (const auto& g : s) {
    mu += g.u / n;
    mv += g.v / n;
  }
  double suu = 0, svv = 0, suv = 0;
  for (const auto& g : s) {
    suu += (g.u - mu) * (g.u - mu);
    svv += (g.v - mv) * (g.v - mv);
    suv += (g.u - mu) * (g.v - mv);
  }
  const double su = std::sqrt(suu / (n - 1));
  const double sv = std::sqrt(svv / (n - 1));
  return {mu, mv, su, sv, suv / (n - 1) / (su * sv)};
}

TEST(FitAoi, DegenerateAllIdentical) {
  std::vector<GazeSample> s;
  for (int i = 0; i < 9; ++i) s.push_back({100.0, 200.0, i * 0.011});
  const AoiGaussian g = fit_aoi(s);
  EXPECT_DOUBLE_EQ(g.mu_x, 100.0);
  EXPECT_DOUBLE_EQ(g.mu_y, 200.0);
  EXPECT_DOUBLE_EQ(g.sigma_x, kSigmaFloorPx);
  EXPECT_DOUBLE_EQ(g.sigma_y, kSigmaFloorPx);
  EXPECT_DOUBLE_EQ(g.rho, 0.0);
}

TEST(FitAoi, ClosedFormNineSampleCase) {
  auto s = make_samples({{0, 0}, {0, 0}, {0, 0}, {0, 0},
                         {2, 2}, {2, 2}, {2, 2}, {2, 2},
                         {1, 1}});
  const AoiGaussian g = fit_aoi(s);
  EXPECT_NEAR(g.mu_x, 1.0, 1e-15);
  EXPECT_NEAR(g.mu_y, 1.0, 1e-15);
  EXPECT_NEAR(g.sigma_x, 1.0, 1e-15);
  EXPECT_NEAR(g.sigma_y, 1.0, 1e-15);
  EXPECT_NEAR(g.rho, 1.0, 1e-15);
}

TEST(FitAoi, MatchesIndependentOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GazeSample> s;
    for (int i = 0; i < 9; ++i)
      s.push_back({rng.uniform(0, 1920), rng.uniform(0, 1080), i * 0.011});
    const AoiGaussian g = fit_aoi(s);
    const Moments m = oracle_moments(s);
    EXPECT_NEAR(g.mu_x, m.mu, 1e-12);
    EXPECT_NEAR(g.mu_y, m.mv, 1e-12);
    EXPECT_NEAR(g.sigma_x, m.su, 1e-12);
    EXPECT_NEAR(g.sigma_y, m.sv, 1e-12);
    EXPECT_NEAR(g.rho, m.rho, 1e-12);
  }
}

TEST(FitAoi, FewerThanTwoSamplesThrows) {
  std::vector<GazeSample> one{{10, 10, 0.0}};
  EXPECT_THROW(fit_aoi(one), std::invalid_argument);
  EXPECT_THROW(fit_aoi(std::span<const GazeSample>{}), std::invalid_argument);
}

TEST(FitAoi, TranslationEquivariant) {
  Rng rng(6);
  std::vector<GazeSample> s;
  for (int i = 0; i < 9; ++i)
    s.push_back({rng.uniform(0, 500), rng.uniform(0, 500), i * 0.011});
  const AoiGaussian g0 = fit_aoi(s);
  std::vector<GazeSample> shifted = s;
  for (auto& x : shifted) {
    x.u += 123.5;
    x.v -= 40.25;
  }
  const AoiGaussian g1 = fit_aoi(shifted);
  EXPECT_NEAR(g1.mu_x, g0.mu_x + 123.5, 1e-10);
  EXPECT_NEAR(g1.mu_y, g0.mu_y - 40.25, 1e-10);
  EXPECT_NEAR(g1.sigma_x, g0.sigma_x, 1e-10);
  EXPECT_NEAR(g1.sigma_y, g0.sigma_y, 1e-10);
  EXPECT_NEAR(g1.rho, g0.rho, 1e-10);
}

TEST(FitAoi, PermutationInvariant) {
  Rng rng(7);
  std::vector<GazeSample> s;
  for (int i = 0; i < 9; ++i)
    s.push_back({rng.uniform(0, 1920), rng.uniform(0, 1080), i * 0.011});
  const AoiGaussian g0 = fit_aoi(s);
  std::reverse(s.begin(), s.end());
  std::swap(s[2], s[6]);
  const AoiGaussian g1 = fit_aoi(s);
  EXPECT_NEAR(g1.mu_x, g0.mu_x, 1e-12);
  EXPECT_NEAR(g1.sigma_x, g0.sigma_x, 1e-12);
  EXPECT_NEAR(g1.rho, g0.rho, 1e-12);
}

TEST(FitAoiFrames, CarryForwardOnSparseFrame) {
  std::vector<GazeSample> gaze;
  for (int i = 0; i < 9; ++i) gaze.push_back({100.0 + i, 50.0 + i, 0.001 + i * 0.011});
  // frame 1 has a single sample: must carry frame 0's fit forward
  gaze.push_back({900.0, 900.0, 0.15});
  for (int i = 0; i < 9; ++i) gaze.push_back({300.0 + i, 60.0 + i, 0.201 + i * 0.011});
  const auto frames = fit_aoi_frames(gaze, 3);
  EXPECT_EQ(frames.size(), 3u);
  EXPECT_DOUBLE_EQ(frames[1].mu_x, frames[0].mu_x);
  EXPECT_DOUBLE_EQ(frames[1].sigma_y, frames[0].sigma_y);
  EXPECT_NEAR(frames[2].mu_x, 304.0, 1e-12);
}

TEST(DetectAoiOnset, ConstantSeriesHasNoOnset) {
  std::vector<double> mu(80, 960.0);
  EXPECT_FALSE(detect_aoi_onset(mu).has_value());
}

TEST(DetectAoiOnset, CleanStepDetectedAtStepTime) {
  // jittered baseline so sigma_base > 0, step at t = 5.0 s
  std::vector<double> mu;
  for (int i = 0; i < 50; ++i) mu.push_back(960.0 + ((i % 2 == 0) ? 5.0 : -5.0));
  for (int i = 0; i < 20; ++i) mu.push_back(1400.0);
  const auto onset = detect_aoi_onset(mu);
  ASSERT_TRUE(onset.has_value());
  EXPECT_NEAR(*onset, 5.0, 1e-12);
}

TEST(DetectAoiOnset, SingleSpikeDoesNotTrigger) {
  std::vector<double> mu;
  for (int i = 0; i < 40; ++i) mu.push_back(960.0 + ((i % 2 == 0) ? 5.0 : -5.0));
  mu[25] = 1400.0;  // one-frame glitch
  EXPECT_FALSE(detect_aoi_onset(mu).has_value());
}

TEST(DetectAoiOnset, SeriesTooShortThrows) {
  std::vector<double> mu(5, 960.0);
  EXPECT_THROW(detect_aoi_onset(mu), std::invalid_argument);
}

TEST(DetectAoiOnset, InvariantUnderConstantOffset) {
  Rng rng(11);
  std::vector<double> mu;
  for (int i = 0; i < 60; ++i) mu.push_back(960.0 + rng.normal(0.0, 8.0));
  for (int i = 60; i < 90; ++i) mu.push_back(1360.0 + rng.normal(0.0, 8.0));
  const auto base = detect_aoi_onset(mu);
  std::vector<double> shifted = mu;
  for (auto& x : shifted) x += 314.0;
  const auto moved = detect_aoi_onset(shifted);
  ASSERT_TRUE(base.has_value());
  ASSERT_TRUE(moved.has_value());
  EXPECT_DOUBLE_EQ(*base, *moved);
}

TEST(DetectSteerOnset, AllZeroAbsent) {
  std::vector<double> steer(50, 0.0);
  EXPECT_FALSE(detect_steer_onset(steer).has_value());
}

TEST(DetectSteerOnset, RampCrossingTime) {
  // zero for 6 s, then ramp at 0.1 rad/s: crosses 0.0873 rad at 6.9 s;
  // discrete samples cross strictly above between 6.8 and 6.9
  std::vector<double> steer(61, 0.0);
  for (int i = 61; i < 90; ++i) steer.push_back((i - 60) * 0.01);
  const auto onset = detect_steer_onset(steer);
  ASSERT_TRUE(onset.has_value());
  EXPECT_NEAR(*onset, 6.9, 1e-9);
}

TEST(DetectSteerOnset, RequiresQuietPeriodFirst) {
  // starts already above threshold: no onset until it settles and rises again
  std::vector<double> steer(5, 0.3);
  for (int i = 0; i < 15; ++i) steer.push_back(0.0);
  steer.push_back(0.3);
  const auto onset = detect_steer_onset(steer);
  ASSERT_TRUE(onset.has_value());
  EXPECT_NEAR(*onset, 2.0, 1e-9);
}

TEST(DetectSteerOnset, EmptySeriesThrows) {
  EXPECT_THROW(detect_steer_onset(std::span<const double>{}), std::invalid_argument);
}

TEST(LeadingTime, DefinitionAndExclusion) {
  OnsetReport a{5.0, 5.9, 0.9};
  OnsetReport b{std::nullopt, 4.0, std::nullopt};
  OnsetReport c{3.0, 4.5, 1.5};
  const OnsetReport reports[] = {a, b, c};
  const auto d = leading_time_distribution(reports);
  ASSERT_EQ(d.leads.size(), 2u);
  EXPECT_EQ(d.excluded, 1);
  EXPECT_NEAR(d.mean, 1.2, 1e-12);
  EXPECT_NEAR(d.min, 0.9, 1e-12);
  EXPECT_NEAR(d.max, 1.5, 1e-12);
  // 0.3 s bins: 0.9 falls in bin 3, 1.5 in bin 5
  ASSERT_GE(d.histogram.size(), 6u);
  EXPECT_EQ(d.histogram[3], 1);
  EXPECT_EQ(d.histogram[5], 1);
}

TEST(LeadingTime, ReportCombinesOnsets) {
  std::vector<double> mu;
  for (int i = 0; i < 50; ++i) mu.push_back(960.0 + ((i % 2 == 0) ? 4.0 : -4.0));
  for (int i = 0; i < 30; ++i) mu.push_back(1380.0);
  std::vector<double> steer(61, 0.0);
  for (int i = 61; i < 80; ++i) steer.push_back((i - 60) * 0.05);
  const auto r = make_onset_report(mu, steer);
  ASSERT_TRUE(r.leading_time.has_value());
  EXPECT_NEAR(*r.aoi_onset, 5.0, 1e-9);
  EXPECT_NEAR(*r.steer_onset, 6.2, 1e-9);
  EXPECT_NEAR(*r.leading_time, 1.2, 1e-9);
}

}  // namespace
}  // namespace gazerisk
