#pragma once

// Deterministic synthetic intersection episodes: ego vehicle kinematics,
// simulated driver gaze, scripted pedestrians, occupancy rasters, intention
// labels, and the sliding-window training records built from them.
//
// World frame: +x east, +y north, headings counterclockwise from +x. The ego
// approaches the intersection (two perpendicular road strips crossing at the
// origin) driving east and optionally performs a 90 degree turn: right toward
// -y, left toward +y. Screen coordinates for gaze are 1920x1080 with x
// growing to the driver's right, so a right turn shifts gaze by +delta and a
// left turn by -delta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gazerisk/aoi.hpp"
#include "gazerisk/geometry.hpp"
#include "gazerisk/rng.hpp"

namespace gazerisk {

inline constexpr double kScreenCenterX = 960.0;
inline constexpr double kScreenCenterY = 540.0;
inline constexpr double kFrameDt = 0.1;        // 10 Hz state/label/raster rate
inline constexpr double kIntegrationDt = 0.01; // kinematics substep
inline constexpr int kGazePerFrame = 9;        // 90 Hz gaze vs 10 Hz frames
inline constexpr double kGazeTransition = 0.2; // smoothstep duration, seconds

struct PedestrianScript {
  Pose2D start;
  Vec2 velocity;        // m/s, constant for the whole episode
  bool on_path = false; // true when scripted to cross the ego's planned path
};

struct ScenarioConfig {
  double approach_speed = 10.0; // m/s, held constant
  int turn = 0;                 // 0 straight, 1 right, 2 left
  double gaze_lead_s = 1.35;    // gaze shift precedes steering by this much
  double gaze_shift_px = 400.0;
  double gaze_noise_px = 30.0;
  std::vector<PedestrianScript> pedestrians;
  std::uint64_t seed = 0;

  double duration_s = 12.0;
  double ramp_start_s = 4.0;     // steering ramp begins here for turns
  double ramp_duration_s = 1.5;  // ramp from zero to peak steering angle
  double turn_radius_m = 8.0;    // bounds the peak steering angle
  double wheelbase_m = 2.7;
  double road_half_width_m = 4.0;
  double turn_entry_x_m = -10.0; // ego x when the ramp begins
  double lane_offset_m = -2.0;   // approach lane center y
};

struct RoadLayout {
  double half_width = 4.0; // both road strips, centered on the axes
};

/// Ego-centered, ego-aligned occupancy grid. Cell (i, j) covers the point
/// (forward, left) = ((15.5 - i) * 1.5, (15.5 - j) * 1.5) in the ego frame,
/// so row 0 is far ahead and column 0 is far left. Channels: 0 drivable
/// road, 1 intersection box, 2 other agents. Flat layout is channel-major:
/// c * 1024 + i * 32 + j.
struct SceneRaster {
  static constexpr int kGrid = 32;
  static constexpr int kChannels = 3;
  static constexpr double kCellSize = 1.5;
  static constexpr int kCells = kGrid * kGrid * kChannels;

  std::vector<float> cells = std::vector<float>(kCells, 0.0f);

  float& at(int c, int i, int j) { return cells[(c * kGrid + i) * kGrid + j]; }
  float at(int c, int i, int j) const { return cells[(c * kGrid + i) * kGrid + j]; }
};

struct EpisodeMeta {
  int turn = 0;
  double ramp_start = 0.0;                 // scripted turn-start time
  std::optional<double> steer_onset;       // steering crosses 5 deg
  std::optional<double> gaze_shift;        // scripted gaze-shift time
  std::optional<double> turn_end;          // steering profile finished
  double steer_peak = 0.0;                 // signed peak steering angle
};

struct Episode {
  std::string id;
  ScenarioConfig config;
  RoadLayout layout;
  std::vector<VehicleState> states;          // 10 Hz, world frame
  std::vector<double> steer;                 // 10 Hz, radians
  std::vector<GazeSample> gaze;              // 90 Hz
  std::vector<SceneRaster> rasters;          // 10 Hz
  std::vector<std::vector<Pose2D>> pedestrians; // [ped][frame]
  std::vector<int> labels;                   // 10 Hz, 0 straight / 1 right / 2 left
  EpisodeMeta meta;

  int frame_count() const { return static_cast<int>(states.size()); }
};

/// One sliding-window training record. `obs` rows are
/// (px, py, vx, vy, theta, mu_x, mu_y, sigma_x, sigma_y): the vehicle state
/// in the ego frame anchored at t0 plus the per-frame gaze AOI fit. `steer`
/// carries the matching steering angles for ablation studies; it is not part
/// of the on-disk record schema and is rebuilt from raw episodes when needed.
struct EpisodeRecord {
  std::string episode_id;
  double t0 = 0.0;
  std::vector<std::array<double, 9>> obs; // 20 rows
  SceneRaster raster;                     // at t0
  int label = 0;
  std::vector<Vec2> future;               // 10 ego-frame waypoints, 0.3 s apart
  std::vector<double> steer;              // 20, in-memory side channel
};

inline constexpr int kObsFrames = 20;   // 2 s at 0.1 s
inline constexpr int kFutureSteps = 10; // 3 s at 0.3 s
inline constexpr int kFutureStride = 3; // 10 Hz frames per future step

namespace detail {

inline double smoothstep01(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

/// Trapezoidal steering-angle profile: ramp up over `ramp`, hold `hold`,
/// ramp down over `ramp`. Zero outside [0, 2*ramp + hold].
struct SteerProfile {
  double peak = 0.0;
  double ramp = 1.5;
  double hold = 0.0;

  double duration() const { return 2.0 * ramp + hold; }
  double value(double t) const {
    if (t <= 0.0 || t >= duration()) return 0.0;
    if (t < ramp) return peak * t / ramp;
    if (t <= ramp + hold) return peak;
    return peak * (duration() - t) / ramp;
  }
};

/// Discrete heading change accumulated by the bicycle model over the profile,
/// using the same left-point Euler sum as the generator's integrator.
inline double profile_heading_gain(const SteerProfile& sp, double speed, double wheelbase) {
  const int n = static_cast<int>(std::ceil(sp.duration() / kIntegrationDt)) + 1;
  double gain = 0.0;
  for (int k = 0; k < n; ++k)
    gain += speed * std::tan(sp.value(k * kIntegrationDt)) / wheelbase * kIntegrationDt;
  return gain;
}

/// Solves a profile whose discrete heading gain is pi/2. Prefers the full
/// trapezoid at the radius-limited peak angle; when even a zero-hold
/// trapezoid overshoots, shrinks the peak instead (triangular profile).
inline SteerProfile solve_quarter_turn_profile(double speed, double wheelbase,
                                               double turn_radius, double ramp_duration) {
  const double target = kPi / 2.0;
  const double peak_max = std::atan(wheelbase / turn_radius);
  SteerProfile sp{peak_max, ramp_duration, 0.0};
  if (profile_heading_gain(sp, speed, wheelbase) <= target) {
    double lo = 0.0, hi = 1.0;
    while (profile_heading_gain({peak_max, ramp_duration, hi}, speed, wheelbase) < target)
      hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (profile_heading_gain({peak_max, ramp_duration, mid}, speed, wheelbase) < target)
        lo = mid;
      else
        hi = mid;
    }
    sp.hold = 0.5 * (lo + hi);
    return sp;
  }
  double lo = 0.0, hi = peak_max;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (profile_heading_gain({mid, ramp_duration, 0.0}, speed, wheelbase) < target)
      lo = mid;
    else
      hi = mid;
  }
  sp.peak = 0.5 * (lo + hi);
  sp.hold = 0.0;
  return sp;
}

inline bool point_in_rect(Vec2 p, const OrientedRect& r) {
  const Vec2 d = (p - r.center).rotated(-r.heading);
  return std::abs(d.x) <= 0.5 * r.length && std::abs(d.y) <= 0.5 * r.width;
}

}  // namespace detail

/// Pedestrian footprint used for rasters and ground-truth contact checks.
inline constexpr double kPedFootprint = 0.5;
/// Ego footprint used for ground-truth contact checks.
inline constexpr double kEgoLength = 4.5;
inline constexpr double kEgoWidth = 1.8;

/// Renders one occupancy raster around the given ego state. Values are the
/// fraction of 2x2 supersample points per cell that hit each layer.
inline SceneRaster render_raster(const RoadLayout& layout, const VehicleState& ego,
                                 std::span<const Pose2D> ped_poses) {
  SceneRaster raster;
  std::vector<OrientedRect> peds;
  peds.reserve(ped_poses.size());
  for (const auto& p : ped_poses)
    peds.push_back({p.position(), p.heading, kPedFootprint, kPedFootprint});

  constexpr double kSub[2] = {-0.25 * SceneRaster::kCellSize, 0.25 * SceneRaster::kCellSize};
  const double hw = layout.half_width;
  for (int i = 0; i < SceneRaster::kGrid; ++i)
    for (int j = 0; j < SceneRaster::kGrid; ++j) {
      const double fwd = (15.5 - i) * SceneRaster::kCellSize;
      const double left = (15.5 - j) * SceneRaster::kCellSize;
      int road = 0, box = 0, agent = 0;
      for (double df : kSub)
        for (double dl : kSub) {
          const Vec2 w = point_to_world_frame({fwd + df, left + dl}, ego);
          const bool in_x = std::abs(w.x) <= hw, in_y = std::abs(w.y) <= hw;
          road += (in_x || in_y);
          box += (in_x && in_y);
          for (const auto& r : peds)
            if (detail::point_in_rect(w, r)) {
              ++agent;
              break;
            }
        }
      raster.at(0, i, j) = static_cast<float>(road) / 4.0f;
      raster.at(1, i, j) = static_cast<float>(box) / 4.0f;
      raster.at(2, i, j) = static_cast<float>(agent) / 4.0f;
    }
  // A footprint smaller than the supersample spacing can fall between probe
  // points; force the cell under each pedestrian center to fully occupied.
  for (const auto& p : ped_poses) {
    const Vec2 e = point_to_ego_frame(p.position(), ego);
    const int i = static_cast<int>(std::lround(15.5 - e.x / SceneRaster::kCellSize));
    const int j = static_cast<int>(std::lround(15.5 - e.y / SceneRaster::kCellSize));
    if (i >= 0 && i < SceneRaster::kGrid && j >= 0 && j < SceneRaster::kGrid)
      raster.at(2, i, j) = 1.0f;
  }
  return raster;
}

/// Constant-velocity pedestrian tracks on the 10 Hz grid.
inline std::vector<std::vector<Pose2D>> compute_pedestrian_tracks(
    const ScenarioConfig& cfg, int n_frames) {
  std::vector<std::vector<Pose2D>> tracks(cfg.pedestrians.size());
  for (std::size_t p = 0; p < cfg.pedestrians.size(); ++p) {
    const auto& script = cfg.pedestrians[p];
    const double sp = script.velocity.norm();
    const double ped_heading =
        sp > 1e-12 ? std::atan2(script.velocity.y, script.velocity.x) : script.start.heading;
    tracks[p].reserve(n_frames);
    for (int k = 0; k < n_frames; ++k) {
      const double t = k * kFrameDt;
      tracks[p].push_back(Pose2D{script.start.x + script.velocity.x * t,
                                 script.start.y + script.velocity.y * t, ped_heading});
    }
  }
  return tracks;
}

/// Rasters for a whole state stream; pedestrians indexed [ped][frame].
inline std::vector<SceneRaster> compute_rasters(
    const RoadLayout& layout, std::span<const VehicleState> states,
    const std::vector<std::vector<Pose2D>>& pedestrians) {
  std::vector<SceneRaster> rasters;
  rasters.reserve(states.size());
  std::vector<Pose2D> frame_peds(pedestrians.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    for (std::size_t p = 0; p < pedestrians.size(); ++p) frame_peds[p] = pedestrians[p][k];
    rasters.push_back(render_raster(layout, states[k], frame_peds));
  }
  return rasters;
}

/// Generates one episode. Deterministic in the full config (including seed):
/// kinematics, steering and pedestrians are scripted; only the gaze samples
/// draw randomness, from a stream derived from config.seed. Adding or
/// removing pedestrians therefore never changes the ego or gaze streams.
inline Episode generate_episode(const ScenarioConfig& cfg) {
  if (cfg.approach_speed <= 0.0)
    throw std::invalid_argument("generate_episode: approach_speed must be > 0");
  if (cfg.turn < 0 || cfg.turn > 2)
    throw std::invalid_argument("generate_episode: turn must be 0, 1 or 2");
  if (cfg.turn != 0 && (cfg.gaze_lead_s < 0.3 || cfg.gaze_lead_s > 2.4))
    throw std::invalid_argument("generate_episode: gaze lead outside [0.3, 2.4] s");
  if (cfg.duration_s < kFrameDt)
    throw std::invalid_argument("generate_episode: duration too short");

  Episode ep;
  ep.config = cfg;
  ep.layout = RoadLayout{cfg.road_half_width_m};
  ep.meta.turn = cfg.turn;
  ep.meta.ramp_start = cfg.ramp_start_s;

  const int n_frames = static_cast<int>(std::llround(cfg.duration_s / kFrameDt));
  const double steer_sign = cfg.turn == 1 ? -1.0 : 1.0; // right turn = clockwise

  detail::SteerProfile profile;
  OnsetParams onset_defaults;
  if (cfg.turn != 0) {
    profile = detail::solve_quarter_turn_profile(cfg.approach_speed, cfg.wheelbase_m,
                                                 cfg.turn_radius_m, cfg.ramp_duration_s);
    const double ramp_rate = profile.peak / profile.ramp;
    ep.meta.steer_onset = cfg.ramp_start_s + onset_defaults.steer_threshold / ramp_rate;
    ep.meta.gaze_shift = *ep.meta.steer_onset - cfg.gaze_lead_s;
    ep.meta.turn_end = cfg.ramp_start_s + profile.duration();
    ep.meta.steer_peak = steer_sign * profile.peak;
  }
  auto steer_at = [&](double t) {
    if (cfg.turn == 0) return 0.0;
    return steer_sign * profile.value(t - cfg.ramp_start_s);
  };

  // Kinematics: explicit Euler at the substep rate, sampled every 10th step.
  const double x0 = cfg.turn_entry_x_m - cfg.approach_speed * cfg.ramp_start_s;
  double x = x0, y = cfg.lane_offset_m, heading = 0.0;
  const int substeps_per_frame = static_cast<int>(std::llround(kFrameDt / kIntegrationDt));
  ep.states.reserve(n_frames);
  ep.steer.reserve(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    const double tk = k * kFrameDt;
    ep.states.push_back({Pose2D{x, y, heading}, 0.0, 0.0});
    ep.steer.push_back(steer_at(tk));
    for (int s = 0; s < substeps_per_frame; ++s) {
      const double t = tk + s * kIntegrationDt;
      x += cfg.approach_speed * std::cos(heading) * kIntegrationDt;
      y += cfg.approach_speed * std::sin(heading) * kIntegrationDt;
      heading += cfg.approach_speed * std::tan(steer_at(t)) / cfg.wheelbase_m * kIntegrationDt;
    }
  }
  // Stored velocity is the mean velocity across the frame — the forward
  // difference of consecutive sampled positions — so positions and
  // velocities stay exactly finite-difference consistent at 10 Hz.
  for (int k = 0; k < n_frames; ++k) {
    const Vec2 a = ep.states[k].pose.position();
    const Vec2 b = k + 1 < n_frames ? ep.states[k + 1].pose.position() : Vec2{x, y};
    ep.states[k].vx = (b.x - a.x) / kFrameDt;
    ep.states[k].vy = (b.y - a.y) / kFrameDt;
  }

  // Gaze: 9 samples per frame around a center that shifts toward the turn
  // side during the maneuver. Right turn looks right (+x on screen).
  const double gaze_dir = cfg.turn == 1 ? 1.0 : (cfg.turn == 2 ? -1.0 : 0.0);
  auto gaze_mu_x = [&](double t) {
    if (cfg.turn == 0) return kScreenCenterX;
    const double on = detail::smoothstep01((t - *ep.meta.gaze_shift) / kGazeTransition);
    const double off = detail::smoothstep01((t - *ep.meta.turn_end) / kGazeTransition);
    return kScreenCenterX + gaze_dir * cfg.gaze_shift_px * (on - off);
  };
  Rng gaze_rng(derive_seed(cfg.seed, 1));
  ep.gaze.reserve(static_cast<std::size_t>(n_frames) * kGazePerFrame);
  for (int k = 0; k < n_frames; ++k)
    for (int j = 0; j < kGazePerFrame; ++j) {
      const double t = k * kFrameDt + (j + 0.5) / (kGazePerFrame / kFrameDt);
      GazeSample g;
      g.t = t;
      g.u = gaze_mu_x(t) + gaze_rng.normal(0.0, cfg.gaze_noise_px);
      g.v = kScreenCenterY + gaze_rng.normal(0.0, cfg.gaze_noise_px);
      ep.gaze.push_back(g);
    }

  ep.pedestrians = compute_pedestrian_tracks(cfg, n_frames);

  // Labels: turn class between the scripted gaze shift and turn completion.
  ep.labels.assign(n_frames, 0);
  if (cfg.turn != 0)
    for (int k = 0; k < n_frames; ++k) {
      const double t = k * kFrameDt;
      if (t >= *ep.meta.gaze_shift && t < *ep.meta.turn_end) ep.labels[k] = cfg.turn;
    }

  ep.rasters = compute_rasters(ep.layout, ep.states, ep.pedestrians);
  return ep;
}

/// First ego/pedestrian contact per pedestrian, on the 10 Hz grid.
struct ContactEvent {
  int pedestrian = 0;
  double time = 0.0;
};

inline std::vector<ContactEvent> find_contacts(const Episode& ep) {
  std::vector<ContactEvent> out;
  for (std::size_t p = 0; p < ep.pedestrians.size(); ++p)
    for (int k = 0; k < ep.frame_count(); ++k) {
      const auto& ego = ep.states[k];
      const auto& ped = ep.pedestrians[p][k];
      if (obb_intersect({ego.pose.position(), ego.pose.heading, kEgoLength, kEgoWidth},
                        {ped.position(), ped.heading, kPedFootprint, kPedFootprint})) {
        out.push_back({static_cast<int>(p), k * kFrameDt});
        break;
      }
    }
  return out;
}

/// Slides a 5 s window (2 s observation + 3 s prediction) over each episode.
/// Episodes shorter than one window contribute nothing.
inline std::vector<EpisodeRecord> window_dataset(std::span<const Episode> episodes,
                                                 double stride_s = 0.1) {
  if (stride_s <= 0.0) throw std::invalid_argument("window_dataset: stride must be > 0");
  const int k_step = std::max(1, static_cast<int>(std::llround(stride_s / kFrameDt)));
  std::vector<EpisodeRecord> records;
  for (const Episode& ep : episodes) {
    const int n = ep.frame_count();
    const int k_last = n - 1 - kFutureSteps * kFutureStride;
    std::vector<AoiGaussian> aoi = fit_aoi_frames(ep.gaze, n);
    for (int k0 = kObsFrames - 1; k0 <= k_last; k0 += k_step) {
      EpisodeRecord rec;
      rec.episode_id = ep.id;
      rec.t0 = k0 * kFrameDt;
      const VehicleState& anchor = ep.states[k0];
      const auto ego_obs = to_ego_frame(
          std::span<const VehicleState>(ep.states).subspan(k0 - kObsFrames + 1, kObsFrames),
          anchor);
      rec.obs.resize(kObsFrames);
      rec.steer.resize(kObsFrames);
      for (int r = 0; r < kObsFrames; ++r) {
        const int k = k0 - kObsFrames + 1 + r;
        const auto& s = ego_obs[r];
        const auto& a = aoi[k];
        rec.obs[r] = {s.pose.x,  s.pose.y,  s.vx,      s.vy,      s.pose.heading,
                      a.mu_x,    a.mu_y,    a.sigma_x, a.sigma_y};
        rec.steer[r] = ep.steer[k];
      }
      rec.raster = ep.rasters[k0];
      rec.label = ep.labels[k0];
      rec.future.resize(kFutureSteps);
      for (int j = 1; j <= kFutureSteps; ++j)
        rec.future[j - 1] =
            point_to_ego_frame(ep.states[k0 + j * kFutureStride].pose.position(), anchor);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

struct SplitResult {
  std::vector<EpisodeRecord> train, val, test;
};

/// 3:1:1 split by episode id (never by record) so no window leaks across
/// splits. Ids are shuffled deterministically from the seed.
inline SplitResult split_dataset(std::vector<EpisodeRecord> records, std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("split_dataset: no records");
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.episode_id).second) ids.push_back(r.episode_id);
  const int n = static_cast<int>(ids.size());
  if (n < 5)
    throw std::invalid_argument("split_dataset: need at least 5 episodes, got " +
                                std::to_string(n));
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const int n_val = static_cast<int>(std::llround(n / 5.0));
  const int n_test = n_val;
  const int n_train = n - n_val - n_test;
  std::unordered_map<std::string, int> bucket; // 0 train, 1 val, 2 test
  for (int i = 0; i < n; ++i) bucket[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  SplitResult out;
  for (auto& r : records) {
    switch (bucket[r.episode_id]) {
      case 0: out.train.push_back(std::move(r)); break;
      case 1: out.val.push_back(std::move(r)); break;
      default: out.test.push_back(std::move(r)); break;
    }
  }
  return out;
}

}  // namespace gazerisk
