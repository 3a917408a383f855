#include "gazerisk/scenegen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gazerisk/aoi.hpp"

using namespace gazerisk;

namespace {

ScenarioConfig straight_config(std::uint64_t seed = 7, double duration = 8.0) {
  ScenarioConfig cfg;
  cfg.turn = 0;
  cfg.seed = seed;
  cfg.duration_s = duration;
  return cfg;
}

ScenarioConfig turn_config(int turn, double tau, std::uint64_t seed = 21) {
  ScenarioConfig cfg;
  cfg.turn = turn;
  cfg.gaze_lead_s = tau;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> mu_x_series(const Episode& ep) {
  auto fits = fit_aoi_frames(ep.gaze, ep.frame_count());
  std::vector<double> mu;
  mu.reserve(fits.size());
  for (const auto& f : fits) mu.push_back(f.mu_x);
  return mu;
}

void expect_identical(const Episode& a, const Episode& b) {
  ASSERT_EQ(a.frame_count(), b.frame_count());
  for (int k = 0; k < a.frame_count(); ++k) {
    EXPECT_EQ(a.states[k].pose.x, b.states[k].pose.x);
    EXPECT_EQ(a.states[k].pose.y, b.states[k].pose.y);
    EXPECT_EQ(a.states[k].pose.heading, b.states[k].pose.heading);
    EXPECT_EQ(a.states[k].vx, b.states[k].vx);
    EXPECT_EQ(a.states[k].vy, b.states[k].vy);
    EXPECT_EQ(a.steer[k], b.steer[k]);
    EXPECT_EQ(a.labels[k], b.labels[k]);
    EXPECT_EQ(a.rasters[k].cells, b.rasters[k].cells);
  }
  ASSERT_EQ(a.gaze.size(), b.gaze.size());
  for (std::size_t i = 0; i < a.gaze.size(); ++i) {
    EXPECT_EQ(a.gaze[i].u, b.gaze[i].u);
    EXPECT_EQ(a.gaze[i].v, b.gaze[i].v);
    EXPECT_EQ(a.gaze[i].t, b.gaze[i].t);
  }
}

}  // namespace

TEST(SteerProfile, QuarterTurnGainIsExact) {
  // Default 1.5 s ramp at 10 m/s: a zero-hold trapezoid at the radius-limited
  // peak would overshoot 90 degrees, so the solver shrinks the peak.
  auto tri = detail::solve_quarter_turn_profile(10.0, 2.7, 8.0, 1.5);
  EXPECT_NEAR(detail::profile_heading_gain(tri, 10.0, 2.7), kPi / 2.0, 1e-9);
  EXPECT_EQ(tri.hold, 0.0);
  EXPECT_LT(tri.peak, std::atan(2.7 / 8.0));
  EXPECT_GT(tri.peak, 0.2);

  // A shorter ramp leaves room for a hold phase at the full peak angle.
  auto trap = detail::solve_quarter_turn_profile(10.0, 2.7, 8.0, 0.8);
  EXPECT_NEAR(detail::profile_heading_gain(trap, 10.0, 2.7), kPi / 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(trap.peak, std::atan(2.7 / 8.0));
  EXPECT_GT(trap.hold, 0.0);
}

TEST(GenerateEpisode, StraightKeepsZeroSteerAndLabels) {
  Episode ep = generate_episode(straight_config());
  ASSERT_EQ(ep.frame_count(), 80);
  for (double s : ep.steer) EXPECT_EQ(s, 0.0);
  for (int l : ep.labels) EXPECT_EQ(l, 0);
  for (const auto& st : ep.states) {
    EXPECT_NEAR(st.pose.y, -2.0, 1e-9);
    EXPECT_NEAR(st.pose.heading, 0.0, 1e-12);
  }
  EXPECT_FALSE(ep.meta.steer_onset.has_value());
  EXPECT_FALSE(ep.meta.gaze_shift.has_value());

  // Gaze stays centered up to noise: the fitted AOI mean never strays far.
  for (double mu : mu_x_series(ep)) EXPECT_NEAR(mu, kScreenCenterX, 60.0);
}

TEST(GenerateEpisode, SameSeedIsBitIdentical) {
  ScenarioConfig cfg = turn_config(1, 1.2, 99);
  cfg.pedestrians.push_back({Pose2D{5.0, -10.0, 0.0}, Vec2{0.0, 1.0}, false});
  Episode a = generate_episode(cfg);
  Episode b = generate_episode(cfg);
  expect_identical(a, b);
}

TEST(GenerateEpisode, PedestriansDoNotPerturbEgoOrGaze) {
  ScenarioConfig plain = turn_config(2, 1.0, 5);
  ScenarioConfig with_ped = plain;
  with_ped.pedestrians.push_back({Pose2D{0.0, 10.0, 0.0}, Vec2{0.3, -0.4}, true});
  Episode a = generate_episode(plain);
  Episode b = generate_episode(with_ped);
  ASSERT_EQ(a.frame_count(), b.frame_count());
  for (int k = 0; k < a.frame_count(); ++k) {
    EXPECT_EQ(a.states[k].pose.x, b.states[k].pose.x);
    EXPECT_EQ(a.states[k].pose.y, b.states[k].pose.y);
    EXPECT_EQ(a.steer[k], b.steer[k]);
  }
  for (std::size_t i = 0; i < a.gaze.size(); ++i) EXPECT_EQ(a.gaze[i].u, b.gaze[i].u);
}

TEST(GenerateEpisode, NineGazeSamplesPerFrame) {
  Episode ep = generate_episode(turn_config(1, 0.8));
  ASSERT_EQ(ep.gaze.size(), static_cast<std::size_t>(ep.frame_count()) * 9);
  std::vector<int> per_frame(ep.frame_count(), 0);
  for (const auto& g : ep.gaze) {
    const int bin = static_cast<int>(std::floor(g.t * 10.0));
    ASSERT_GE(bin, 0);
    ASSERT_LT(bin, ep.frame_count());
    ++per_frame[bin];
  }
  for (int c : per_frame) EXPECT_EQ(c, 9);
}

TEST(GenerateEpisode, StoredVelocityMatchesPositionDifferences) {
  for (int turn : {0, 1, 2}) {
    Episode ep = generate_episode(turn_config(turn == 0 ? 0 : turn, 1.0, 3));
    for (int k = 0; k + 1 < ep.frame_count(); ++k) {
      const double fdx = (ep.states[k + 1].pose.x - ep.states[k].pose.x) / kFrameDt;
      const double fdy = (ep.states[k + 1].pose.y - ep.states[k].pose.y) / kFrameDt;
      EXPECT_NEAR(ep.states[k].vx, fdx, 1e-3);
      EXPECT_NEAR(ep.states[k].vy, fdy, 1e-3);
    }
  }
}

TEST(GenerateEpisode, RightTurnEndsHeadingSouth) {
  Episode ep = generate_episode(turn_config(1, 1.0));
  EXPECT_NEAR(ep.states.back().pose.heading, -kPi / 2.0, 1e-9);
  EXPECT_LT(ep.states.back().pose.y, -10.0);
  // Steering returns to zero and heading stays put after the turn completes.
  const int k_end = static_cast<int>(std::ceil(*ep.meta.turn_end / kFrameDt));
  for (int k = k_end; k < ep.frame_count(); ++k) EXPECT_EQ(ep.steer[k], 0.0);
}

TEST(GenerateEpisode, LeftTurnEndsHeadingNorth) {
  Episode ep = generate_episode(turn_config(2, 1.0));
  EXPECT_NEAR(ep.states.back().pose.heading, kPi / 2.0, 1e-9);
  EXPECT_GT(ep.states.back().pose.y, 6.0);
}

TEST(GenerateEpisode, AoiOnsetLeadsSteerOnsetByGazeLead) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Episode ep = generate_episode(turn_config(1, 1.0, seed));
    auto mu = mu_x_series(ep);
    OnsetReport rep = make_onset_report(mu, ep.steer);
    ASSERT_TRUE(rep.leading_time.has_value()) << "seed " << seed;
    EXPECT_NEAR(*rep.leading_time, 1.0, 0.2) << "seed " << seed;
  }
}

TEST(GenerateEpisode, LabelsSwitchAtGazeShiftBeforeSteerOnset) {
  Episode ep = generate_episode(turn_config(2, 0.5, 11));
  ASSERT_TRUE(ep.meta.gaze_shift.has_value());
  int first = -1, last = -1;
  for (int k = 0; k < ep.frame_count(); ++k)
    if (ep.labels[k] != 0) {
      if (first < 0) first = k;
      last = k;
      EXPECT_EQ(ep.labels[k], 2);
    }
  ASSERT_GE(first, 0);
  // First labeled frame is the first frame at or after the scripted shift.
  EXPECT_EQ(first, static_cast<int>(std::ceil(*ep.meta.gaze_shift / kFrameDt - 1e-9)));
  EXPECT_LT(first * kFrameDt, *ep.meta.steer_onset);
  EXPECT_LT(last * kFrameDt, *ep.meta.turn_end);
  // Detected steering onset also comes strictly after the label switch.
  OnsetParams params;
  auto steer_onset = detect_steer_onset(ep.steer, params);
  ASSERT_TRUE(steer_onset.has_value());
  EXPECT_LT(first * kFrameDt, *steer_onset);
}

TEST(GenerateEpisode, ScriptedPedestrianFollowsConstantVelocity) {
  ScenarioConfig cfg = straight_config(4);
  cfg.pedestrians.push_back({Pose2D{-30.0, 6.0, 0.0}, Vec2{0.5, -1.0}, true});
  Episode ep = generate_episode(cfg);
  ASSERT_EQ(ep.pedestrians.size(), 1u);
  ASSERT_EQ(ep.pedestrians[0].size(), static_cast<std::size_t>(ep.frame_count()));
  for (int k = 0; k < ep.frame_count(); ++k) {
    const double t = k * kFrameDt;
    EXPECT_NEAR(ep.pedestrians[0][k].x, -30.0 + 0.5 * t, 1e-12);
    EXPECT_NEAR(ep.pedestrians[0][k].y, 6.0 - 1.0 * t, 1e-12);
    EXPECT_NEAR(ep.pedestrians[0][k].heading, std::atan2(-1.0, 0.5), 1e-12);
  }
}

TEST(GenerateEpisode, RejectsInvalidConfigs) {
  EXPECT_THROW(generate_episode(turn_config(1, 0.2)), std::invalid_argument);
  EXPECT_THROW(generate_episode(turn_config(2, 2.5)), std::invalid_argument);
  ScenarioConfig bad_speed = straight_config();
  bad_speed.approach_speed = 0.0;
  EXPECT_THROW(generate_episode(bad_speed), std::invalid_argument);
  ScenarioConfig bad_turn = straight_config();
  bad_turn.turn = 3;
  EXPECT_THROW(generate_episode(bad_turn), std::invalid_argument);
  // The gaze lead is irrelevant for straight episodes.
  ScenarioConfig straight = straight_config();
  straight.gaze_lead_s = 0.1;
  EXPECT_NO_THROW(generate_episode(straight));
}

TEST(RenderRaster, RoadAndIntersectionChannels) {
  Episode ep = generate_episode(straight_config(2, 10.0));
  // Frame 0: ego at x = -50, far from the crossing; the cell just ahead on
  // the lane is drivable, the far corner is off-road, and no cell sees the
  // intersection box yet.
  const SceneRaster& r0 = ep.rasters[0];
  EXPECT_EQ(r0.at(0, 14, 14), 1.0f);
  EXPECT_EQ(r0.at(0, 0, 0), 0.0f);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) EXPECT_EQ(r0.at(1, i, j), 0.0f);
  // Frame 50 (t = 5 s): ego reaches x = 0 and the crossing surrounds it.
  const SceneRaster& r50 = ep.rasters[50];
  EXPECT_EQ(r50.at(1, 15, 14), 1.0f);
  EXPECT_EQ(r50.at(0, 15, 14), 1.0f);
}

TEST(RenderRaster, PedestrianMarksDynamicChannel) {
  ScenarioConfig cfg = straight_config(9);
  cfg.pedestrians.push_back({Pose2D{-40.0, -2.0, 0.0}, Vec2{0.0, 0.0}, false});
  Episode ep = generate_episode(cfg);
  // Frame 0: ego at (-50, -2) heading east; the pedestrian sits 10 m ahead,
  // on the boundary between columns 15 and 16 -> center stamp lands at row 9.
  const SceneRaster& r = ep.rasters[0];
  float total = 0.0f;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) total += r.at(2, i, j);
  EXPECT_GT(total, 0.0f);
  EXPECT_EQ(r.at(2, 9, 16), 1.0f);
  // Without pedestrians the dynamic channel is empty.
  Episode none = generate_episode(straight_config(9));
  for (const auto& raster : none.rasters)
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) EXPECT_EQ(raster.at(2, i, j), 0.0f);
}

TEST(FindContacts, ReportsFirstContactTime) {
  ScenarioConfig cfg = straight_config(12);
  cfg.pedestrians.push_back({Pose2D{-30.0, -2.0, 0.0}, Vec2{0.0, 0.0}, true});
  cfg.pedestrians.push_back({Pose2D{0.0, 30.0, 0.0}, Vec2{0.0, 0.0}, false});
  Episode ep = generate_episode(cfg);
  auto contacts = find_contacts(ep);
  ASSERT_EQ(contacts.size(), 1u);
  EXPECT_EQ(contacts[0].pedestrian, 0);
  // Rect half-lengths sum to 2.5 m; ego crosses x = -32.5 between frames 17
  // and 18, so first contact is at frame 18.
  EXPECT_NEAR(contacts[0].time, 1.8, 1e-9);
}

TEST(WindowDataset, RecordCountsMatchWindowArithmetic) {
  Episode five = generate_episode(straight_config(1, 5.0));
  Episode six = generate_episode(straight_config(1, 6.0));
  five.id = "five";
  six.id = "six";
  EXPECT_EQ(window_dataset(std::vector<Episode>{five}).size(), 1u);
  EXPECT_EQ(window_dataset(std::vector<Episode>{six}).size(), 11u);
  // Too short for a single 5 s window: no records rather than an error.
  Episode short_ep = generate_episode(straight_config(1, 4.9));
  EXPECT_TRUE(window_dataset(std::vector<Episode>{short_ep}).empty());
}

TEST(WindowDataset, RecordContentsAreEgoAnchored) {
  Episode ep = generate_episode(straight_config(8, 6.0));
  ep.id = "ep0";
  auto records = window_dataset(std::vector<Episode>{ep});
  ASSERT_EQ(records.size(), 11u);
  const EpisodeRecord& rec = records.front();
  EXPECT_EQ(rec.episode_id, "ep0");
  EXPECT_DOUBLE_EQ(rec.t0, 1.9);
  ASSERT_EQ(rec.obs.size(), 20u);
  ASSERT_EQ(rec.future.size(), 10u);
  ASSERT_EQ(rec.steer.size(), 20u);

  // Anchor frame: zero position and heading, forward speed ~10 m/s.
  EXPECT_NEAR(rec.obs[19][0], 0.0, 1e-12);
  EXPECT_NEAR(rec.obs[19][1], 0.0, 1e-12);
  EXPECT_NEAR(rec.obs[19][2], 10.0, 1e-6);
  EXPECT_NEAR(rec.obs[19][3], 0.0, 1e-9);
  EXPECT_NEAR(rec.obs[19][4], 0.0, 1e-12);
  // Earlier frames trail behind the anchor by 1 m per 0.1 s.
  EXPECT_NEAR(rec.obs[0][0], -19.0 * 1.0, 1e-6);
  // Future waypoints advance 3 m per 0.3 s step straight ahead.
  for (int j = 1; j <= 10; ++j) {
    EXPECT_NEAR(rec.future[j - 1].x, 3.0 * j, 1e-6);
    EXPECT_NEAR(rec.future[j - 1].y, 0.0, 1e-9);
  }
  // AOI columns reproduce the per-frame fits.
  auto fits = fit_aoi_frames(ep.gaze, ep.frame_count());
  for (int r = 0; r < 20; ++r) {
    EXPECT_EQ(rec.obs[r][5], fits[r].mu_x);
    EXPECT_EQ(rec.obs[r][6], fits[r].mu_y);
    EXPECT_EQ(rec.obs[r][7], fits[r].sigma_x);
    EXPECT_EQ(rec.obs[r][8], fits[r].sigma_y);
  }
  EXPECT_EQ(rec.raster.cells, ep.rasters[19].cells);
  EXPECT_EQ(rec.label, ep.labels[19]);
}

TEST(SplitDataset, ThreeOneOneByEpisode) {
  auto make_records = [](int n_episodes, int per_episode) {
    std::vector<EpisodeRecord> recs;
    for (int e = 0; e < n_episodes; ++e)
      for (int r = 0; r < per_episode; ++r) {
        EpisodeRecord rec;
        rec.episode_id = "ep" + std::to_string(e);
        recs.push_back(rec);
      }
    return recs;
  };

  auto count_episodes = [](const std::vector<EpisodeRecord>& recs) {
    std::set<std::string> ids;
    for (const auto& r : recs) ids.insert(r.episode_id);
    return ids;
  };

  SplitResult five = split_dataset(make_records(5, 3), 17);
  EXPECT_EQ(count_episodes(five.train).size(), 3u);
  EXPECT_EQ(count_episodes(five.val).size(), 1u);
  EXPECT_EQ(count_episodes(five.test).size(), 1u);
  EXPECT_EQ(five.train.size(), 9u);

  SplitResult ten = split_dataset(make_records(10, 2), 17);
  EXPECT_EQ(count_episodes(ten.train).size(), 6u);
  EXPECT_EQ(count_episodes(ten.val).size(), 2u);
  EXPECT_EQ(count_episodes(ten.test).size(), 2u);

  // No episode id straddles two splits.
  auto train_ids = count_episodes(ten.train);
  auto val_ids = count_episodes(ten.val);
  auto test_ids = count_episodes(ten.test);
  for (const auto& id : val_ids) {
    EXPECT_FALSE(train_ids.count(id));
    EXPECT_FALSE(test_ids.count(id));
  }
  for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id));

  // Deterministic in the seed.
  SplitResult again = split_dataset(make_records(10, 2), 17);
  EXPECT_EQ(count_episodes(again.train), train_ids);

  EXPECT_THROW(split_dataset(make_records(4, 2), 1), std::invalid_argument);
  EXPECT_THROW(split_dataset({}, 1), std::invalid_argument);
}
