#include "gazerisk/serialization.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gazerisk/scenegen.hpp"

using namespace gazerisk;
namespace fs = std::filesystem;

namespace {

class SerializationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gazerisk_ser_" + std::to_string(::testing::UnitTest::GetInstance()
                                                 ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

Episode sample_episode() {
  ScenarioConfig cfg;
  cfg.turn = 1;
  cfg.gaze_lead_s = 1.1;
  cfg.seed = 404;
  cfg.duration_s = 7.0;
  cfg.pedestrians.push_back({Pose2D{3.0, -12.0, 0.0}, Vec2{0.0, 0.8}, true});
  cfg.pedestrians.push_back({Pose2D{-20.0, 6.0, 1.0}, Vec2{0.0, 0.0}, false});
  Episode ep = generate_episode(cfg);
  ep.id = "sample-1";
  return ep;
}

}  // namespace

TEST(Fnv1a64, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST_F(SerializationTest, FileHashMatchesInMemoryHash) {
  const fs::path p = dir_ / "blob.bin";
  const std::string content = "the quick brown fox\njumps over\x01\x02";
  std::ofstream(p, std::ios::binary) << content;
  EXPECT_EQ(fnv1a64_file(p), fnv1a64(content));
  EXPECT_THROW(fnv1a64_file(dir_ / "missing.bin"), std::runtime_error);
}

TEST_F(SerializationTest, RecordRoundTripIsBitExact) {
  Episode ep = sample_episode();
  auto records = window_dataset(std::vector<Episode>{ep}, 0.5);
  ASSERT_GT(records.size(), 1u);

  const fs::path p = dir_ / "records.jsonl";
  write_records_jsonl(p, records);
  auto back = read_records_jsonl(p);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& a = records[r];
    const auto& b = back[r];
    EXPECT_EQ(a.episode_id, b.episode_id);
    EXPECT_EQ(a.t0, b.t0);
    ASSERT_EQ(b.obs.size(), 20u);
    for (int i = 0; i < 20; ++i)
      for (int c = 0; c < 9; ++c) EXPECT_EQ(a.obs[i][c], b.obs[i][c]);
    EXPECT_EQ(a.raster.cells, b.raster.cells);
    EXPECT_EQ(a.label, b.label);
    for (int i = 0; i < 10; ++i) {
      EXPECT_EQ(a.future[i].x, b.future[i].x);
      EXPECT_EQ(a.future[i].y, b.future[i].y);
    }
    // The steering side channel deliberately does not survive the disk.
    EXPECT_TRUE(b.steer.empty());
  }
}

TEST_F(SerializationTest, WriterOutputIsDeterministic) {
  Episode ep = sample_episode();
  auto records = window_dataset(std::vector<Episode>{ep}, 1.0);
  const fs::path p1 = dir_ / "a.jsonl", p2 = dir_ / "b.jsonl";
  write_records_jsonl(p1, records);
  write_records_jsonl(p2, records);
  EXPECT_EQ(fnv1a64_file(p1), fnv1a64_file(p2));

  const fs::path e1 = dir_ / "ea.jsonl", e2 = dir_ / "eb.jsonl";
  write_episodes_jsonl(e1, std::vector<Episode>{ep});
  write_episodes_jsonl(e2, std::vector<Episode>{ep});
  EXPECT_EQ(fnv1a64_file(e1), fnv1a64_file(e2));
}

TEST_F(SerializationTest, EpisodeRoundTripIsBitExact) {
  Episode ep = sample_episode();
  const fs::path p = dir_ / "episodes.jsonl";
  write_episodes_jsonl(p, std::vector<Episode>{ep});
  auto back = read_episodes_jsonl(p);
  ASSERT_EQ(back.size(), 1u);
  const Episode& b = back[0];

  EXPECT_EQ(b.id, ep.id);
  EXPECT_EQ(b.config.turn, ep.config.turn);
  EXPECT_EQ(b.config.seed, ep.config.seed);
  EXPECT_EQ(b.config.gaze_lead_s, ep.config.gaze_lead_s);
  ASSERT_EQ(b.config.pedestrians.size(), 2u);
  EXPECT_EQ(b.config.pedestrians[0].on_path, true);
  EXPECT_EQ(b.config.pedestrians[1].start.heading, 1.0);

  ASSERT_EQ(b.frame_count(), ep.frame_count());
  for (int k = 0; k < ep.frame_count(); ++k) {
    EXPECT_EQ(b.states[k].pose.x, ep.states[k].pose.x);
    EXPECT_EQ(b.states[k].pose.y, ep.states[k].pose.y);
    EXPECT_EQ(b.states[k].pose.heading, ep.states[k].pose.heading);
    EXPECT_EQ(b.states[k].vx, ep.states[k].vx);
    EXPECT_EQ(b.states[k].vy, ep.states[k].vy);
    EXPECT_EQ(b.steer[k], ep.steer[k]);
    EXPECT_EQ(b.labels[k], ep.labels[k]);
    // Rasters and pedestrian tracks are rebuilt, not stored; the rebuild
    // must reproduce the originals exactly.
    EXPECT_EQ(b.rasters[k].cells, ep.rasters[k].cells);
    for (std::size_t pd = 0; pd < ep.pedestrians.size(); ++pd) {
      EXPECT_EQ(b.pedestrians[pd][k].x, ep.pedestrians[pd][k].x);
      EXPECT_EQ(b.pedestrians[pd][k].y, ep.pedestrians[pd][k].y);
      EXPECT_EQ(b.pedestrians[pd][k].heading, ep.pedestrians[pd][k].heading);
    }
  }
  ASSERT_EQ(b.gaze.size(), ep.gaze.size());
  for (std::size_t i = 0; i < ep.gaze.size(); ++i) {
    EXPECT_EQ(b.gaze[i].u, ep.gaze[i].u);
    EXPECT_EQ(b.gaze[i].v, ep.gaze[i].v);
    EXPECT_EQ(b.gaze[i].t, ep.gaze[i].t);
  }
  ASSERT_TRUE(b.meta.steer_onset && b.meta.gaze_shift && b.meta.turn_end);
  EXPECT_EQ(*b.meta.steer_onset, *ep.meta.steer_onset);
  EXPECT_EQ(*b.meta.gaze_shift, *ep.meta.gaze_shift);
  EXPECT_EQ(*b.meta.turn_end, *ep.meta.turn_end);
  EXPECT_EQ(b.meta.steer_peak, ep.meta.steer_peak);
}

TEST_F(SerializationTest, StraightEpisodeMetaStaysAbsent) {
  ScenarioConfig cfg;
  cfg.turn = 0;
  cfg.seed = 3;
  cfg.duration_s = 5.0;
  Episode ep = generate_episode(cfg);
  ep.id = "straight";
  const fs::path p = dir_ / "straight.jsonl";
  write_episodes_jsonl(p, std::vector<Episode>{ep});
  auto back = read_episodes_jsonl(p);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_FALSE(back[0].meta.steer_onset.has_value());
  EXPECT_FALSE(back[0].meta.gaze_shift.has_value());
  EXPECT_FALSE(back[0].meta.turn_end.has_value());
}

TEST_F(SerializationTest, ReaderErrorsNameFileAndLine) {
  const fs::path p = dir_ / "bad.jsonl";
  std::ofstream(p) << "{\"episode_id\":\"x\"}\n";
  try {
    read_records_jsonl(p);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.jsonl"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("t0"), std::string::npos) << msg;
  }
  EXPECT_THROW(read_records_jsonl(dir_ / "absent.jsonl"), std::runtime_error);

  const fs::path q = dir_ / "notjson.jsonl";
  std::ofstream(q) << "this is not json\n";
  EXPECT_THROW(read_records_jsonl(q), std::runtime_error);
}

TEST_F(SerializationTest, RecordSchemaViolationsAreRejected) {
  Episode ep = sample_episode();
  auto records = window_dataset(std::vector<Episode>{ep}, 2.0);
  ASSERT_FALSE(records.empty());
  auto j = nlohmann::json::parse(record_to_json_line(records[0]));

  auto broken = j;
  broken["obs"].erase(0);
  EXPECT_THROW(record_from_json(broken), std::runtime_error);
  broken = j;
  broken["raster"].erase(0);
  EXPECT_THROW(record_from_json(broken), std::runtime_error);
  broken = j;
  broken["future"] = nlohmann::json::array();
  EXPECT_THROW(record_from_json(broken), std::runtime_error);
  broken = j;
  broken["label"] = 300;
  EXPECT_THROW(record_from_json(broken), std::runtime_error);
}

TEST_F(SerializationTest, CheckpointRoundTripIsExact) {
  std::vector<NamedTensor> tensors;
  Rng rng(31);
  Tensor w({3, 4});
  for (auto& v : w.data) v = rng.uniform(-5.0, 5.0);
  Tensor b({7});
  for (auto& v : b.data) v = rng.normal();
  Tensor scalar({1});
  scalar[0] = -0.123456789012345678;
  tensors.push_back({"di.lstm.wx", w});
  tensors.push_back({"mt.decoder.bias", b});
  tensors.push_back({"norm: obs mean", scalar});

  const fs::path p = dir_ / "model.ckpt";
  save_checkpoint(p, tensors);
  auto back = load_checkpoint(p);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.at("di.lstm.wx").shape, (std::vector<int>{3, 4}));
  EXPECT_EQ(back.at("di.lstm.wx").data, w.data);
  EXPECT_EQ(back.at("mt.decoder.bias").data, b.data);
  EXPECT_EQ(back.at("norm: obs mean").data, scalar.data);
}

TEST_F(SerializationTest, CheckpointRejectsCorruption) {
  const fs::path good = dir_ / "good.ckpt";
  Tensor t({2, 2});
  t.data = {1.0, 2.0, 3.0, 4.0};
  std::vector<NamedTensor> tensors{{"t", t}};
  save_checkpoint(good, tensors);

  const fs::path bad_magic = dir_ / "bad_magic.ckpt";
  std::ofstream(bad_magic, std::ios::binary) << "NOPE then some bytes";
  EXPECT_THROW(load_checkpoint(bad_magic), std::runtime_error);

  // Truncate the valid file just past the header.
  std::string bytes;
  {
    std::ifstream in(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const fs::path truncated = dir_ / "truncated.ckpt";
  std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 8);
  EXPECT_THROW(load_checkpoint(truncated), std::runtime_error);

  EXPECT_THROW(load_checkpoint(dir_ / "nope.ckpt"), std::runtime_error);
}
