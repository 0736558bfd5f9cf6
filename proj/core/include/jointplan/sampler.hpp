#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "jointplan/trajectory.hpp"

namespace jointplan {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SamplerConfig {
  std::size_t num_candidates = 12;
  std::size_t horizon_steps = 21;  // waypoints per candidate, including t = 0
  double dt = 0.2;
  // Probabilities of the line, circle and spiral modes.
  std::array<double, 3> mode_probs = {0.3, 0.2, 0.5};
  Interval accel = {-4.0, 3.0};          // m/s^2
  Interval curvature = {-0.2, 0.2};      // 1/m
  Interval spiral_rate = {-0.1, 0.1};    // 1/m^2
  double max_speed = 15.0;
  // Candidate 0 brakes straight ahead at this rate until it halts.
  // 0 holds the current pose from the first step.
  double stop_decel = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class MotionMode { Stationary, Line, Circle, Spiral };

// Control parameters for one candidate. Heading follows
// theta(s) = theta0 + curvature * s + 0.5 * curvature_rate * s^2.
struct MotionParams {
  MotionMode mode = MotionMode::Stationary;
  double accel = 0.0;
  double curvature = 0.0;
  double curvature_rate = 0.0;
};

// Pose is the last past pose; speed is the mean of the last min(3, n-1)
// step lengths divided by dt. Throws InsufficientHistory below two waypoints.
KinematicState estimate_state(const Trajectory& past);

// Control parameters of candidate `index` (index >= 1). Each index draws
// from its own stream, so candidates are stable under changes of K.
MotionParams draw_motion(const SamplerConfig& cfg, std::size_t index);

// Integrates a constant-acceleration speed profile, clamped to
// [0, max_speed], along the mode's heading law (10 midpoint substeps per dt).
Trajectory rollout(const KinematicState& state, const MotionParams& motion,
                   std::size_t steps, double dt, double max_speed);

Trajectory stationary_trajectory(const KinematicState& state, std::size_t steps, double dt);

// K candidates; candidate 0 is always the stationary trajectory.
std::vector<Trajectory> sample_candidates(const KinematicState& state, const SamplerConfig& cfg);

// Candidate with the smallest summed squared waypoint distance to target;
// lowest index on ties.
std::size_t closest_candidate(std::span<const Trajectory> candidates, const Trajectory& target);

}  // namespace jointplan
