#include "jointplan/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "jointplan/errors.hpp"
#include "jointplan/random.hpp"

namespace jointplan {

void SamplerConfig::validate() const {
  if (num_candidates < 1) throw InvalidArgument("sampler: num_candidates must be >= 1");
  if (horizon_steps < 1) throw InvalidArgument("sampler: horizon_steps must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("sampler: dt must be positive");
  if (!(max_speed > 0.0)) throw InvalidArgument("sampler: max_speed must be positive");
  if (!(stop_decel >= 0.0)) throw InvalidArgument("sampler: stop_decel must be nonnegative");
  double total = 0.0;
  for (double p : mode_probs) {
    if (!(p >= 0.0)) throw InvalidArgument("sampler: mode probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("sampler: mode probabilities must sum to 1");
  for (const Interval* iv : {&accel, &curvature, &spiral_rate}) {
    if (!(iv->lo <= iv->hi)) throw InvalidArgument("sampler: empty control interval");
  }
}

KinematicState estimate_state(const Trajectory& past) {
  if (past.size() < 2) throw InsufficientHistory("estimate_state: need at least two past waypoints");
  const std::size_t n = past.size();
  const std::size_t m = std::min<std::size_t>(3, n - 1);
  double sum = 0.0;
  for (std::size_t k = n - m; k < n; ++k) {
    sum += (past.position(k) - past.position(k - 1)).norm();
  }
  return {past.back().pose, sum / static_cast<double>(m) / past.dt};
}

MotionParams draw_motion(const SamplerConfig& cfg, std::size_t index) {
  std::mt19937_64 rng(mix_seed({cfg.seed, static_cast<std::uint64_t>(index)}));
  const double u = unit_uniform(rng);
  MotionParams m;
  if (u < cfg.mode_probs[0]) {
    m.mode = MotionMode::Line;
  } else if (u < cfg.mode_probs[0] + cfg.mode_probs[1]) {
    m.mode = MotionMode::Circle;
  } else {
    m.mode = MotionMode::Spiral;
  }
  // Fixed draw order regardless of mode keeps streams aligned.
  const double accel = uniform_in(rng, cfg.accel.lo, cfg.accel.hi);
  const double curvature = uniform_in(rng, cfg.curvature.lo, cfg.curvature.hi);
  const double rate = uniform_in(rng, cfg.spiral_rate.lo, cfg.spiral_rate.hi);
  m.accel = accel;
  if (m.mode != MotionMode::Line) m.curvature = curvature;
  if (m.mode == MotionMode::Spiral) m.curvature_rate = rate;
  return m;
}

namespace {

// Speed law v(t) = clamp(v0 + a t, 0, vmax) and its exact integral.
struct SpeedProfile {
  double v0;
  double a;
  double vmax;

  double speed(double t) const { return std::clamp(v0 + a * t, 0.0, vmax); }

  double distance(double t) const {
    // Breakpoints where the unclamped line crosses 0 or vmax; between
    // consecutive breakpoints the clamped speed is linear, so the
    // trapezoid rule is exact.
    double knots[4] = {0.0, t, t, t};
    int n = 2;
    if (a != 0.0) {
      for (double level : {0.0, vmax}) {
        const double tk = (level - v0) / a;
        if (tk > 0.0 && tk < t) knots[n++] = tk;
      }
    }
    std::sort(knots, knots + n);
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      s += 0.5 * (speed(knots[i]) + speed(knots[i + 1])) * (knots[i + 1] - knots[i]);
    }
    return s;
  }
};

constexpr int kSubsteps = 10;

}  // namespace

Trajectory stationary_trajectory(const KinematicState& state, std::size_t steps, double dt) {
  Trajectory t;
  t.dt = dt;
  t.waypoints.assign(steps, Waypoint{state.pose, 0.0});
  return t;
}

Trajectory rollout(const KinematicState& state, const MotionParams& motion, std::size_t steps,
                   double dt, double max_speed) {
  if (motion.mode == MotionMode::Stationary) return stationary_trajectory(state, steps, dt);
  const SpeedProfile profile{state.speed, motion.accel, max_speed};
  const double theta0 = state.pose.heading;
  auto heading_at = [&](double s) {
    return theta0 + motion.curvature * s + 0.5 * motion.curvature_rate * s * s;
  };

  Trajectory t;
  t.dt = dt;
  t.waypoints.reserve(steps);
  double x = state.pose.x;
  double y = state.pose.y;
  double s_prev = 0.0;
  t.waypoints.push_back({state.pose, profile.speed(0.0)});
  for (std::size_t k = 1; k < steps; ++k) {
    for (int j = 1; j <= kSubsteps; ++j) {
      const double tj = dt * (static_cast<double>(k - 1) + static_cast<double>(j) / kSubsteps);
      const double sj = profile.distance(tj);
      const double mid = heading_at(0.5 * (s_prev + sj));
      x += (sj - s_prev) * std::cos(mid);
      y += (sj - s_prev) * std::sin(mid);
      s_prev = sj;
    }
    t.waypoints.push_back({Pose2(x, y, heading_at(s_prev)), profile.speed(dt * static_cast<double>(k))});
  }
  return t;
}

std::vector<Trajectory> sample_candidates(const KinematicState& state, const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<Trajectory> out;
  out.reserve(cfg.num_candidates);
  if (cfg.stop_decel > 0.0 && state.speed > 0.0) {
    out.push_back(rollout(state, {MotionMode::Line, -cfg.stop_decel, 0.0, 0.0}, cfg.horizon_steps, cfg.dt,
                          cfg.max_speed));
  } else {
    out.push_back(stationary_trajectory(state, cfg.horizon_steps, cfg.dt));
  }
  for (std::size_t i = 1; i < cfg.num_candidates; ++i) {
    out.push_back(rollout(state, draw_motion(cfg, i), cfg.horizon_steps, cfg.dt, cfg.max_speed));
  }
  return out;
}

std::size_t closest_candidate(std::span<const Trajectory> candidates, const Trajectory& target) {
  if (candidates.empty()) throw InvalidArgument("closest_candidate: no candidates");
  std::size_t best = 0;
  double best_d = squared_l2_distance(candidates[0], target);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = squared_l2_distance(candidates[i], target);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace jointplan
