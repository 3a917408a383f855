#pragma once

// Probabilistic collision assessment. Prediction uncertainty at each step is
// represented by the fitted per-step error model; particles drawn from it
// displace the ego footprint along the predicted trajectory and the collision
// probability is the fraction of displaced footprints that overlap any
// obstacle. A running alarm turns consecutive threshold exceedances into
// discrete warning events.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazerisk/geometry.hpp"
#include "gazerisk/riskstats.hpp"
#include "gazerisk/rng.hpp"

namespace gazerisk {

/// Tunables for the collision assessment pipeline.
struct RiskConfig {
  int n_particles = 2000;     ///< Monte Carlo particles per step.
  double threshold = 0.40;    ///< Alarm threshold on the collision probability.
  int consecutive = 3;        ///< Exceedances in a row required to fire.
  double assess_dt = 0.1;     ///< Seconds between assessment ticks.
  double risk_horizon = 2.1;  ///< Seconds of the prediction inspected for risk.
  double ego_length = 4.5;
  double ego_width = 1.8;
  double ped_length = 0.5;
  double ped_width = 0.5;

  void validate() const {
    if (n_particles < 100) throw std::invalid_argument("RiskConfig: need at least 100 particles");
    if (!(threshold > 0.0) || !(threshold < 1.0))
      throw std::invalid_argument("RiskConfig: threshold must be in (0, 1)");
    if (consecutive < 1) throw std::invalid_argument("RiskConfig: consecutive must be positive");
    if (!(assess_dt > 0.0) || !(risk_horizon > 0.0))
      throw std::invalid_argument("RiskConfig: time settings must be positive");
    if (!(ego_length > 0.0) || !(ego_width > 0.0) || !(ped_length > 0.0) || !(ped_width > 0.0))
      throw std::invalid_argument("RiskConfig: footprint dimensions must be positive");
  }
};

/// An obstacle observed at the assessment instant, extrapolated forward at
/// constant velocity. Position and velocity are expressed in the same frame
/// as the trajectory under assessment.
struct ObstacleTrack {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  double length = 0.5;
  double width = 0.5;

  OrientedRect rect_at(double dt) const {
    OrientedRect r;
    r.center = position + velocity * dt;
    r.heading = velocity.norm() > 1e-9 ? std::atan2(velocity.y, velocity.x) : 0.0;
    r.length = length;
    r.width = width;
    return r;
  }
};

/// Draws particles from the step error model, rejecting any that fall outside
/// the `level` confidence ellipse so a single wild draw cannot move the
/// footprint arbitrarily far. Deterministic for a given seed. Throws when the
/// covariance is singular or when rejection exceeds 100 draws per particle.
inline std::vector<Vec2> sample_particles(const StepErrorModel& m, int n, std::uint64_t seed,
                                          double level = 0.95) {
  if (n < 1) throw std::invalid_argument("sample_particles: need at least one particle");
  const double det = m.det();
  if (!(det > 0.0)) throw std::runtime_error("sample_particles: singular covariance");
  const double bound = confidence_boundary(level);
  // Cholesky factor of the covariance; det > 0 guarantees both pivots.
  const double lxx = std::sqrt(m.s_xx);
  const double lyx = m.s_xy / lxx;
  const double lyy = std::sqrt(m.s_yy - lyx * lyx);
  Rng rng(seed);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  const long max_draws = 100L * n;
  long draws = 0;
  while (out.size() < static_cast<std::size_t>(n)) {
    if (draws++ >= max_draws)
      throw std::runtime_error("sample_particles: rejection cap exceeded");
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double x = m.mean_x + lxx * z1;
    const double y = m.mean_y + lyx * z1 + lyy * z2;
    if (m.mahalanobis2(x, y) <= bound) out.push_back({x, y});
  }
  return out;
}

/// Collision probability for one prediction step: the fraction of particles
/// whose displaced ego footprint overlaps at least one obstacle rectangle.
/// `heading` orients both the footprint and the error frame (particle e_x
/// runs along the direction of travel). `hit_counts`, when given, receives
/// the per-obstacle hit tally for attribution.
inline double collision_probability(const Vec2& waypoint, double heading, const StepErrorModel& m,
                                    std::span<const OrientedRect> obstacles,
                                    const RiskConfig& cfg, std::uint64_t seed,
                                    std::vector<long>* hit_counts = nullptr) {
  cfg.validate();
  if (hit_counts) hit_counts->assign(obstacles.size(), 0);
  if (obstacles.empty()) return 0.0;
  const std::vector<Vec2> particles = sample_particles(m, cfg.n_particles, seed);
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  long hits = 0;
  for (const Vec2& p : particles) {
    OrientedRect ego;
    ego.center = {waypoint.x + c * p.x - s * p.y, waypoint.y + s * p.x + c * p.y};
    ego.heading = heading;
    ego.length = cfg.ego_length;
    ego.width = cfg.ego_width;
    bool hit = false;
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      if (obb_intersect(ego, obstacles[i])) {
        if (hit_counts) ++(*hit_counts)[i];
        hit = true;
        if (!hit_counts) break;
      }
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(cfg.n_particles);
}

/// Per-step collision probability along a trajectory.
struct StepRisk {
  int step = 0;
  double p = 0.0;
  int obstacle_id = -1;  ///< Obstacle with the most particle hits, -1 if none.
};

/// Maximum collision probability over the risk horizon.
struct HorizonRisk {
  double p_max = 0.0;
  int argmax_step = 0;    ///< Step attaining p_max; 0 when every step is zero.
  int obstacle_id = -1;   ///< Contributing obstacle at the argmax step.
  std::vector<StepRisk> per_step;
};

/// Evaluates the collision probability at every step of the trajectory that
/// lies inside the risk horizon and returns the maximum. Steps beyond the
/// horizon are never inspected. Obstacles are extrapolated at constant
/// velocity to the matching instant. Particle seeds are derived per step from
/// the tick seed, so the assessment is reproducible and steps are decoupled.
inline HorizonRisk horizon_risk(const Trajectory& traj, std::span<const StepErrorModel> models,
                                std::span<const ObstacleTrack> obstacles, const RiskConfig& cfg,
                                std::uint64_t tick_seed) {
  cfg.validate();
  if (!(traj.step > 0.0)) throw std::invalid_argument("horizon_risk: trajectory step must be positive");
  const int in_horizon = static_cast<int>(std::floor(cfg.risk_horizon / traj.step + 1e-9));
  const int steps = std::min<int>(static_cast<int>(traj.waypoints.size()), in_horizon);
  if (steps < 1) throw std::invalid_argument("horizon_risk: no trajectory steps inside the horizon");
  if (models.size() < static_cast<std::size_t>(steps))
    throw std::invalid_argument("horizon_risk: missing error models for horizon steps");

  HorizonRisk out;
  out.per_step.reserve(static_cast<std::size_t>(steps));
  Vec2 prev{0.0, 0.0};
  double heading = 0.0;
  std::vector<long> hit_counts;
  std::vector<OrientedRect> rects(obstacles.size());
  for (int k = 1; k <= steps; ++k) {
    const Vec2& wp = traj.waypoints[static_cast<std::size_t>(k - 1)];
    const Vec2 chord = wp - prev;
    if (chord.norm() > 1e-9) heading = std::atan2(chord.y, chord.x);
    prev = wp;
    const StepErrorModel& m = models[static_cast<std::size_t>(k - 1)];
    if (m.step != k)
      throw std::invalid_argument("horizon_risk: error models must be ordered by step");
    const double dt = k * traj.step;
    for (std::size_t i = 0; i < obstacles.size(); ++i) rects[i] = obstacles[i].rect_at(dt);
    StepRisk sr;
    sr.step = k;
    sr.p = collision_probability(wp, heading, m, rects, cfg, derive_seed(tick_seed, k),
                                 &hit_counts);
    if (!hit_counts.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < hit_counts.size(); ++i)
        if (hit_counts[i] > hit_counts[best]) best = i;
      if (hit_counts[best] > 0) sr.obstacle_id = obstacles[best].id;
    }
    out.per_step.push_back(sr);
    if (sr.p > out.p_max) {
      out.p_max = sr.p;
      out.argmax_step = k;
      out.obstacle_id = sr.obstacle_id;
    }
  }
  return out;
}

/// Deterministic reachability check used by the constant-turn baseline: true
/// when the undisturbed ego footprint along the trajectory overlaps any
/// extrapolated obstacle inside the risk horizon. No particles involved.
inline bool footprint_conflict(const Trajectory& traj, std::span<const ObstacleTrack> obstacles,
                               const RiskConfig& cfg) {
  cfg.validate();
  if (!(traj.step > 0.0))
    throw std::invalid_argument("footprint_conflict: trajectory step must be positive");
  const int in_horizon = static_cast<int>(std::floor(cfg.risk_horizon / traj.step + 1e-9));
  const int steps = std::min<int>(static_cast<int>(traj.waypoints.size()), in_horizon);
  if (steps < 1)
    throw std::invalid_argument("footprint_conflict: no trajectory steps inside the horizon");
  Vec2 prev{0.0, 0.0};
  double heading = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const Vec2& wp = traj.waypoints[static_cast<std::size_t>(k - 1)];
    const Vec2 chord = wp - prev;
    if (chord.norm() > 1e-9) heading = std::atan2(chord.y, chord.x);
    prev = wp;
    OrientedRect ego;
    ego.center = wp;
    ego.heading = heading;
    ego.length = cfg.ego_length;
    ego.width = cfg.ego_width;
    const double dt = k * traj.step;
    for (const ObstacleTrack& ob : obstacles)
      if (obb_intersect(ego, ob.rect_at(dt))) return true;
  }
  return false;
}

/// Probability-weighted risk over a set of candidate trajectories: the sum of
/// each mode's horizon maximum weighted by its probability. Mode seeds are
/// derived from the tick seed so modes stay decoupled.
inline double weighted_mode_risk(std::span<const Trajectory> modes, std::span<const double> probs,
                                 std::span<const StepErrorModel> models,
                                 std::span<const ObstacleTrack> obstacles, const RiskConfig& cfg,
                                 std::uint64_t tick_seed) {
  if (modes.size() != probs.size())
    throw std::invalid_argument("weighted_mode_risk: modes and probabilities must align");
  double risk = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::uint64_t mode_seed = derive_seed(tick_seed, 0x4D0 + i);
    risk += probs[i] * horizon_risk(modes[i], models, obstacles, cfg, mode_seed).p_max;
  }
  return risk;
}

/// A fired alarm: the sample index and time of the tick that completed the
/// consecutive-exceedance run.
struct AlarmEvent {
  int index = 0;
  double t = 0.0;
};

/// Turns a collision-probability series into discrete alarms. An alarm fires
/// on the tick completing `consecutive` exceedances of the threshold in a
/// row; the counter resets only when the probability drops to the threshold
/// or below, so each exceedance episode fires at most once.
inline std::vector<AlarmEvent> alarm_stream(std::span<const double> p, const RiskConfig& cfg,
                                            double t0 = 0.0) {
  cfg.validate();
  std::vector<AlarmEvent> events;
  int run = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > cfg.threshold) {
      if (++run == cfg.consecutive)
        events.push_back({static_cast<int>(i), t0 + static_cast<double>(i) * cfg.assess_dt});
    } else {
      run = 0;
    }
  }
  return events;
}

/// One assessed tick of a scenario run.
struct RiskTick {
  double t = 0.0;
  double p_c = 0.0;
  int argmax_step = 0;
  int obstacle_id = -1;
  bool alarm = false;
};

inline void write_risk_trace_csv(const std::filesystem::path& path,
                                 std::span<const RiskTick> trace) {
  std::string out = "t,p_c,argmax_step,obstacle_id,alarm\n";
  for (const RiskTick& tick : trace) {
    detail::append_f64(out, tick.t);
    out += ',';
    detail::append_f64(out, tick.p_c);
    out += ',';
    out += std::to_string(tick.argmax_step);
    out += ',';
    out += std::to_string(tick.obstacle_id);
    out += ',';
    out += tick.alarm ? '1' : '0';
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_risk_trace_csv: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_risk_trace_csv: write failed for " + path.string());
}

inline std::vector<RiskTick> read_risk_trace_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_risk_trace_csv: cannot open " + path.string());
  std::vector<RiskTick> trace;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      throw std::runtime_error("read_risk_trace_csv: malformed row in " + path.string());
    RiskTick tick;
    tick.t = std::strtod(fields[0].c_str(), nullptr);
    tick.p_c = std::strtod(fields[1].c_str(), nullptr);
    tick.argmax_step = std::stoi(fields[2]);
    tick.obstacle_id = std::stoi(fields[3]);
    tick.alarm = fields[4] == "1";
    trace.push_back(tick);
  }
  return trace;
}

}  // namespace gazerisk
