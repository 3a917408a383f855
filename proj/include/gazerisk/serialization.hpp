#pragma once

// On-disk formats: JSON-lines files for episodes and training records, a
// small binary container for model checkpoints, and FNV-1a content hashing
// for run manifests.
//
// Writers emit canonical compact JSON with floats printed via %.17g (f64)
// and %.9g (f32), so identical in-memory data always produces identical
// bytes and every value round-trips exactly. Readers accept any valid JSON
// with the expected schema. Raw episode lines store the config and the
// generated streams; pedestrian tracks and rasters are recomputed on load
// through the same deterministic code the generator uses, which keeps the
// files small without losing information.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gazerisk/scenegen.hpp"
#include "gazerisk/tensor.hpp"

namespace gazerisk {

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a, 64-bit)
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path.string());
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  return h;
}

// ---------------------------------------------------------------------------
// Canonical JSON emission
// ---------------------------------------------------------------------------

namespace detail {

inline void append_f64(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void append_f32(std::string& out, float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  out += buf;
}

inline void append_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

template <typename Seq, typename Fn>
inline void append_array(std::string& out, const Seq& seq, Fn&& item) {
  out += '[';
  bool first = true;
  for (const auto& v : seq) {
    if (!first) out += ',';
    first = false;
    item(out, v);
  }
  out += ']';
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::runtime_error(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training records
// ---------------------------------------------------------------------------

inline std::string record_to_json_line(const EpisodeRecord& rec) {
  std::string out;
  out.reserve(1 << 14);
  out += "{\"episode_id\":";
  detail::append_json_string(out, rec.episode_id);
  out += ",\"t0\":";
  detail::append_f64(out, rec.t0);
  out += ",\"obs\":";
  detail::append_array(out, rec.obs, [](std::string& o, const std::array<double, 9>& row) {
    detail::append_array(o, row, [](std::string& o2, double v) { detail::append_f64(o2, v); });
  });
  out += ",\"raster\":";
  detail::append_array(out, rec.raster.cells,
                       [](std::string& o, float v) { detail::append_f32(o, v); });
  out += ",\"label\":";
  out += std::to_string(rec.label);
  out += ",\"future\":";
  detail::append_array(out, rec.future, [](std::string& o, const Vec2& p) {
    o += '[';
    detail::append_f64(o, p.x);
    o += ',';
    detail::append_f64(o, p.y);
    o += ']';
  });
  out += '}';
  return out;
}

inline EpisodeRecord record_from_json(const nlohmann::json& j) {
  const char* what = "record_from_json";
  EpisodeRecord rec;
  rec.episode_id = detail::require(j, "episode_id", what).get<std::string>();
  rec.t0 = detail::require(j, "t0", what).get<double>();
  const auto& obs = detail::require(j, "obs", what);
  if (obs.size() != kObsFrames)
    throw std::runtime_error(std::string(what) + ": expected 20 observation rows, got " +
                             std::to_string(obs.size()));
  rec.obs.resize(kObsFrames);
  for (int r = 0; r < kObsFrames; ++r) {
    if (obs[r].size() != 9)
      throw std::runtime_error(std::string(what) + ": observation row needs 9 values");
    for (int c = 0; c < 9; ++c) rec.obs[r][c] = obs[r][c].get<double>();
  }
  const auto& raster = detail::require(j, "raster", what);
  if (raster.size() != SceneRaster::kCells)
    throw std::runtime_error(std::string(what) + ": expected 3072 raster cells, got " +
                             std::to_string(raster.size()));
  for (int i = 0; i < SceneRaster::kCells; ++i)
    rec.raster.cells[i] = static_cast<float>(raster[i].get<double>());
  rec.label = detail::require(j, "label", what).get<int>();
  if (rec.label < 0 || rec.label > 255)
    throw std::runtime_error(std::string(what) + ": label out of byte range");
  const auto& fut = detail::require(j, "future", what);
  if (fut.size() != kFutureSteps)
    throw std::runtime_error(std::string(what) + ": expected 10 future points, got " +
                             std::to_string(fut.size()));
  rec.future.resize(kFutureSteps);
  for (int i = 0; i < kFutureSteps; ++i) {
    if (fut[i].size() != 2)
      throw std::runtime_error(std::string(what) + ": future point needs 2 values");
    rec.future[i] = {fut[i][0].get<double>(), fut[i][1].get<double>()};
  }
  return rec;
}

inline void write_records_jsonl(const std::filesystem::path& path,
                                std::span<const EpisodeRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_records_jsonl: cannot open " + path.string());
  for (const auto& rec : records) out << record_to_json_line(rec) << '\n';
  if (!out) throw std::runtime_error("write_records_jsonl: write failed for " + path.string());
}

inline std::vector<EpisodeRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_records_jsonl: cannot open " + path.string());
  std::vector<EpisodeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_records_jsonl: " + path.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Raw episodes
// ---------------------------------------------------------------------------

inline std::string episode_to_json_line(const Episode& ep) {
  std::string out;
  out.reserve(1 << 15);
  const ScenarioConfig& c = ep.config;
  out += "{\"id\":";
  detail::append_json_string(out, ep.id);
  out += ",\"config\":{\"approach_speed\":";
  detail::append_f64(out, c.approach_speed);
  out += ",\"turn\":" + std::to_string(c.turn);
  out += ",\"gaze_lead\":";
  detail::append_f64(out, c.gaze_lead_s);
  out += ",\"gaze_shift_px\":";
  detail::append_f64(out, c.gaze_shift_px);
  out += ",\"gaze_noise_px\":";
  detail::append_f64(out, c.gaze_noise_px);
  out += ",\"seed\":" + std::to_string(c.seed);
  out += ",\"duration\":";
  detail::append_f64(out, c.duration_s);
  out += ",\"ramp_start\":";
  detail::append_f64(out, c.ramp_start_s);
  out += ",\"ramp_duration\":";
  detail::append_f64(out, c.ramp_duration_s);
  out += ",\"turn_radius\":";
  detail::append_f64(out, c.turn_radius_m);
  out += ",\"wheelbase\":";
  detail::append_f64(out, c.wheelbase_m);
  out += ",\"road_half_width\":";
  detail::append_f64(out, c.road_half_width_m);
  out += ",\"turn_entry_x\":";
  detail::append_f64(out, c.turn_entry_x_m);
  out += ",\"lane_offset\":";
  detail::append_f64(out, c.lane_offset_m);
  out += ",\"pedestrians\":";
  detail::append_array(out, c.pedestrians, [](std::string& o, const PedestrianScript& p) {
    o += "{\"x\":";
    detail::append_f64(o, p.start.x);
    o += ",\"y\":";
    detail::append_f64(o, p.start.y);
    o += ",\"heading\":";
    detail::append_f64(o, p.start.heading);
    o += ",\"vx\":";
    detail::append_f64(o, p.velocity.x);
    o += ",\"vy\":";
    detail::append_f64(o, p.velocity.y);
    o += ",\"on_path\":";
    o += p.on_path ? "true" : "false";
    o += '}';
  });
  out += "},\"states\":";
  detail::append_array(out, ep.states, [](std::string& o, const VehicleState& s) {
    o += '[';
    detail::append_f64(o, s.pose.x);
    o += ',';
    detail::append_f64(o, s.pose.y);
    o += ',';
    detail::append_f64(o, s.pose.heading);
    o += ',';
    detail::append_f64(o, s.vx);
    o += ',';
    detail::append_f64(o, s.vy);
    o += ']';
  });
  out += ",\"steer\":";
  detail::append_array(out, ep.steer,
                       [](std::string& o, double v) { detail::append_f64(o, v); });
  out += ",\"gaze\":";
  detail::append_array(out, ep.gaze, [](std::string& o, const GazeSample& g) {
    o += '[';
    detail::append_f64(o, g.u);
    o += ',';
    detail::append_f64(o, g.v);
    o += ',';
    detail::append_f64(o, g.t);
    o += ']';
  });
  out += ",\"labels\":";
  detail::append_array(out, ep.labels,
                       [](std::string& o, int v) { o += std::to_string(v); });
  out += ",\"meta\":{\"turn\":" + std::to_string(ep.meta.turn);
  out += ",\"ramp_start\":";
  detail::append_f64(out, ep.meta.ramp_start);
  auto opt_field = [&out](const char* name, const std::optional<double>& v) {
    out += ",\"";
    out += name;
    out += "\":";
    if (v)
      detail::append_f64(out, *v);
    else
      out += "null";
  };
  opt_field("steer_onset", ep.meta.steer_onset);
  opt_field("gaze_shift", ep.meta.gaze_shift);
  opt_field("turn_end", ep.meta.turn_end);
  out += ",\"steer_peak\":";
  detail::append_f64(out, ep.meta.steer_peak);
  out += "}}";
  return out;
}

inline Episode episode_from_json(const nlohmann::json& j) {
  const char* what = "episode_from_json";
  Episode ep;
  ep.id = detail::require(j, "id", what).get<std::string>();
  const auto& jc = detail::require(j, "config", what);
  ScenarioConfig& c = ep.config;
  c.approach_speed = detail::require(jc, "approach_speed", what).get<double>();
  c.turn = detail::require(jc, "turn", what).get<int>();
  c.gaze_lead_s = detail::require(jc, "gaze_lead", what).get<double>();
  c.gaze_shift_px = detail::require(jc, "gaze_shift_px", what).get<double>();
  c.gaze_noise_px = detail::require(jc, "gaze_noise_px", what).get<double>();
  c.seed = detail::require(jc, "seed", what).get<std::uint64_t>();
  c.duration_s = detail::require(jc, "duration", what).get<double>();
  c.ramp_start_s = detail::require(jc, "ramp_start", what).get<double>();
  c.ramp_duration_s = detail::require(jc, "ramp_duration", what).get<double>();
  c.turn_radius_m = detail::require(jc, "turn_radius", what).get<double>();
  c.wheelbase_m = detail::require(jc, "wheelbase", what).get<double>();
  c.road_half_width_m = detail::require(jc, "road_half_width", what).get<double>();
  c.turn_entry_x_m = detail::require(jc, "turn_entry_x", what).get<double>();
  c.lane_offset_m = detail::require(jc, "lane_offset", what).get<double>();
  for (const auto& jp : detail::require(jc, "pedestrians", what)) {
    PedestrianScript p;
    p.start = Pose2D{detail::require(jp, "x", what).get<double>(),
                     detail::require(jp, "y", what).get<double>(),
                     detail::require(jp, "heading", what).get<double>()};
    p.velocity = {detail::require(jp, "vx", what).get<double>(),
                  detail::require(jp, "vy", what).get<double>()};
    p.on_path = detail::require(jp, "on_path", what).get<bool>();
    c.pedestrians.push_back(p);
  }
  ep.layout = RoadLayout{c.road_half_width_m};

  for (const auto& js : detail::require(j, "states", what)) {
    if (js.size() != 5)
      throw std::runtime_error(std::string(what) + ": state row needs 5 values");
    VehicleState s;
    s.pose = Pose2D{js[0].get<double>(), js[1].get<double>(), js[2].get<double>()};
    s.vx = js[3].get<double>();
    s.vy = js[4].get<double>();
    ep.states.push_back(s);
  }
  for (const auto& v : detail::require(j, "steer", what)) ep.steer.push_back(v.get<double>());
  for (const auto& jg : detail::require(j, "gaze", what)) {
    if (jg.size() != 3)
      throw std::runtime_error(std::string(what) + ": gaze row needs 3 values");
    ep.gaze.push_back({jg[0].get<double>(), jg[1].get<double>(), jg[2].get<double>()});
  }
  for (const auto& v : detail::require(j, "labels", what)) ep.labels.push_back(v.get<int>());
  const auto& jm = detail::require(j, "meta", what);
  ep.meta.turn = detail::require(jm, "turn", what).get<int>();
  ep.meta.ramp_start = detail::require(jm, "ramp_start", what).get<double>();
  auto opt_field = [&](const char* name) -> std::optional<double> {
    const auto& v = detail::require(jm, name, what);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  ep.meta.steer_onset = opt_field("steer_onset");
  ep.meta.gaze_shift = opt_field("gaze_shift");
  ep.meta.turn_end = opt_field("turn_end");
  ep.meta.steer_peak = detail::require(jm, "steer_peak", what).get<double>();

  if (ep.steer.size() != ep.states.size() || ep.labels.size() != ep.states.size())
    throw std::runtime_error(std::string(what) + ": stream lengths disagree");
  if (ep.gaze.size() != ep.states.size() * kGazePerFrame)
    throw std::runtime_error(std::string(what) + ": expected 9 gaze samples per frame");

  ep.pedestrians = compute_pedestrian_tracks(c, ep.frame_count());
  ep.rasters = compute_rasters(ep.layout, ep.states, ep.pedestrians);
  return ep;
}

inline void write_episodes_jsonl(const std::filesystem::path& path,
                                 std::span<const Episode> episodes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_episodes_jsonl: cannot open " + path.string());
  for (const auto& ep : episodes) out << episode_to_json_line(ep) << '\n';
  if (!out)
    throw std::runtime_error("write_episodes_jsonl: write failed for " + path.string());
}

inline std::vector<Episode> read_episodes_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_episodes_jsonl: cannot open " + path.string());
  std::vector<Episode> episodes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      episodes.push_back(episode_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_episodes_jsonl: " + path.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return episodes;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Layout (all integers little-endian): magic "GRCK", u32 version, u32 tensor
// count, then per tensor: u32 name length, name bytes, u32 rank, i32 dims,
// f64 values. Model weights, normalization statistics and feature masks all
// travel as named tensors in one file.

inline constexpr char kCheckpointMagic[4] = {'G', 'R', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline void save_checkpoint(const std::filesystem::path& path,
                            std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  auto put_u32 = [&out](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  out.write(kCheckpointMagic, 4);
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    put_u32(static_cast<std::uint32_t>(nt.name.size()));
    out.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    put_u32(static_cast<std::uint32_t>(nt.tensor.shape.size()));
    for (int d : nt.tensor.shape) {
      const std::int32_t dim = d;
      out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    }
    out.write(reinterpret_cast<const char*>(nt.tensor.data.data()),
              static_cast<std::streamsize>(nt.tensor.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

inline std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  auto fail = [&path](const std::string& why) -> std::runtime_error {
    return std::runtime_error("load_checkpoint: " + path.string() + ": " + why);
  };
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw fail("not a checkpoint file (bad magic)");
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw fail("truncated file");
    return v;
  };
  const std::uint32_t version = get_u32();
  if (version != kCheckpointVersion)
    throw fail("unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32();
  std::map<std::string, Tensor> out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = get_u32();
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw fail("truncated file");
    const std::uint32_t rank = get_u32();
    std::vector<int> shape(rank);
    for (auto& d : shape) {
      std::int32_t dim = 0;
      if (!in.read(reinterpret_cast<char*>(&dim), sizeof dim)) throw fail("truncated file");
      if (dim <= 0) throw fail("invalid dimension in tensor '" + name + "'");
      d = dim;
    }
    Tensor tensor(shape);
    if (!in.read(reinterpret_cast<char*>(tensor.data.data()),
                 static_cast<std::streamsize>(tensor.data.size() * sizeof(double))))
      throw fail("truncated tensor data for '" + name + "'");
    if (!out.emplace(std::move(name), std::move(tensor)).second)
      throw fail("duplicate tensor name");
  }
  return out;
}

}  // namespace gazerisk
