#include "jointplan/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "jointplan/errors.hpp"

namespace jointplan {

void require_same_horizon(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || std::abs(a.dt - b.dt) > 1e-12) {
    throw HorizonMismatch("trajectories differ in length or time step");
  }
}

double squared_l2_distance(const Trajectory& a, const Trajectory& b) {
  require_same_horizon(a, b);
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sum += (a.position(k) - b.position(k)).squared_norm();
  }
  return sum;
}

bool satisfies_motion_limits(const Trajectory& t, double max_speed, double tol) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    const Waypoint& w = t.waypoints[k];
    if (!std::isfinite(w.pose.x) || !std::isfinite(w.pose.y) || !std::isfinite(w.pose.heading) ||
        !std::isfinite(w.speed) || w.speed < 0.0) {
      return false;
    }
    if (k > 0 && (t.position(k) - t.position(k - 1)).norm() > max_speed * t.dt + tol) {
      return false;
    }
  }
  return true;
}

Waypoint interpolate(const Trajectory& t, double tau) {
  if (t.empty()) throw InvalidArgument("interpolate: empty trajectory");
  if (tau <= 0.0 || t.size() == 1) return t.waypoints.front();
  const double u = tau / t.dt;
  const auto k = static_cast<std::size_t>(std::floor(u));
  if (k + 1 >= t.size()) return t.waypoints.back();
  const double f = u - static_cast<double>(k);
  const Waypoint& a = t.waypoints[k];
  const Waypoint& b = t.waypoints[k + 1];
  const double dh = normalize_angle(b.pose.heading - a.pose.heading);
  return {Pose2(a.pose.x + f * (b.pose.x - a.pose.x), a.pose.y + f * (b.pose.y - a.pose.y),
                a.pose.heading + f * dh),
          a.speed + f * (b.speed - a.speed)};
}

}  // namespace jointplan
