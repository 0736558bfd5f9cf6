#pragma once

#include <vector>

#include "jointplan/geometry.hpp"

namespace jointplan {

struct Waypoint {
  Pose2 pose;
  double speed = 0.0;
};

// One timed motion of one actor. Waypoint k sits at start_time + k * dt;
// waypoint 0 is the actor's current state and the rest are the future.
struct Trajectory {
  double start_time = 0.0;
  double dt = 0.1;
  std::vector<Waypoint> waypoints;

  std::size_t size() const { return waypoints.size(); }
  bool empty() const { return waypoints.empty(); }
  Vec2 position(std::size_t k) const { return waypoints[k].pose.position(); }
  const Waypoint& back() const { return waypoints.back(); }
  // Index of the first future waypoint.
  std::size_t future_begin() const { return waypoints.size() > 1 ? 1 : 0; }
};

struct KinematicState {
  Pose2 pose;
  double speed = 0.0;
};

// Throws HorizonMismatch unless both trajectories share length and dt.
void require_same_horizon(const Trajectory& a, const Trajectory& b);

// Sum over waypoints of squared positional distance.
double squared_l2_distance(const Trajectory& a, const Trajectory& b);

// Checks finiteness, nonnegative speed and the per-step displacement bound
// |p[k+1] - p[k]| <= max_speed * dt + tol.
bool satisfies_motion_limits(const Trajectory& t, double max_speed, double tol = 1e-6);

// Pose and speed at time offset tau from start_time, linearly interpolated
// between waypoints and held at the ends.
Waypoint interpolate(const Trajectory& t, double tau);

}  // namespace jointplan
