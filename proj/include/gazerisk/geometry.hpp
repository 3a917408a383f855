#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace gazerisk {

inline constexpr double kPi = 3.14159265358979323846;

/// Normalizes an angle into (-pi, pi].
inline double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;  // already normalized: exact no-op
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  /// Rotation by `angle` radians (counterclockwise).
  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

/// Planar pose; heading is kept normalized into (-pi, pi] on construction.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2D() = default;
  Pose2D(double px, double py, double h) : x(px), y(py), heading(wrap_angle(h)) {}

  Vec2 position() const { return {x, y}; }
};

struct VehicleState {
  Pose2D pose;
  double vx = 0.0;
  double vy = 0.0;

  double speed() const { return std::hypot(vx, vy); }
};

/// Sequence of planar waypoints at a fixed time step.
struct Trajectory {
  std::vector<Vec2> waypoints;
  double step = 0.3;
};

/// Rectangle with arbitrary orientation, used for vehicle/obstacle outlines.
struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double length = 1.0;  // extent along the heading axis
  double width = 1.0;   // extent perpendicular to it

  OrientedRect() = default;
  OrientedRect(Vec2 c, double h, double len, double wid)
      : center(c), heading(wrap_angle(h)), length(len), width(wid) {
    if (!(len > 0.0) || !(wid > 0.0))
      throw std::invalid_argument("OrientedRect: extents must be positive");
  }

  double area() const { return length * width; }

  std::array<Vec2, 4> corners() const {
    const Vec2 ax = Vec2{1.0, 0.0}.rotated(heading) * (0.5 * length);
    const Vec2 ay = Vec2{0.0, 1.0}.rotated(heading) * (0.5 * width);
    return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
  }
};

/// Transforms world-frame states into the frame anchored at `anchor`:
/// the anchor maps to pose (0, 0, 0) and velocities rotate with it.
inline std::vector<VehicleState> to_ego_frame(std::span<const VehicleState> states,
                                              const VehicleState& anchor) {
  std::vector<VehicleState> out;
  out.reserve(states.size());
  const double rot = -anchor.pose.heading;
  for (const auto& s : states) {
    const Vec2 p = (s.pose.position() - anchor.pose.position()).rotated(rot);
    const Vec2 v = Vec2{s.vx, s.vy}.rotated(rot);
    out.push_back({Pose2D{p.x, p.y, s.pose.heading - anchor.pose.heading}, v.x, v.y});
  }
  return out;
}

/// Inverse of to_ego_frame for a single state.
inline VehicleState to_world_frame(const VehicleState& ego, const VehicleState& anchor) {
  const double rot = anchor.pose.heading;
  const Vec2 p = ego.pose.position().rotated(rot) + anchor.pose.position();
  const Vec2 v = Vec2{ego.vx, ego.vy}.rotated(rot);
  return {Pose2D{p.x, p.y, ego.pose.heading + anchor.pose.heading}, v.x, v.y};
}

inline Vec2 point_to_ego_frame(Vec2 world, const VehicleState& anchor) {
  return (world - anchor.pose.position()).rotated(-anchor.pose.heading);
}

inline Vec2 point_to_world_frame(Vec2 ego, const VehicleState& anchor) {
  return ego.rotated(anchor.pose.heading) + anchor.pose.position();
}

/// Separating-axis overlap test for two oriented rectangles. Touching
/// rectangles (zero-area overlap) count as intersecting.
inline bool obb_intersect(const OrientedRect& a, const OrientedRect& b) {
  const Vec2 axes[4] = {
      Vec2{1.0, 0.0}.rotated(a.heading), Vec2{0.0, 1.0}.rotated(a.heading),
      Vec2{1.0, 0.0}.rotated(b.heading), Vec2{0.0, 1.0}.rotated(b.heading)};
  const Vec2 a_x = Vec2{1.0, 0.0}.rotated(a.heading) * (0.5 * a.length);
  const Vec2 a_y = Vec2{0.0, 1.0}.rotated(a.heading) * (0.5 * a.width);
  const Vec2 b_x = Vec2{1.0, 0.0}.rotated(b.heading) * (0.5 * b.length);
  const Vec2 b_y = Vec2{0.0, 1.0}.rotated(b.heading) * (0.5 * b.width);
  const Vec2 d = b.center - a.center;
  for (const Vec2& axis : axes) {
    const double ra = std::abs(a_x.dot(axis)) + std::abs(a_y.dot(axis));
    const double rb = std::abs(b_x.dot(axis)) + std::abs(b_y.dot(axis));
    if (std::abs(d.dot(axis)) > ra + rb) return false;
  }
  return true;
}

}  // namespace gazerisk
