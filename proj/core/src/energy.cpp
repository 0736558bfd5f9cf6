#include "jointplan/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jointplan/errors.hpp"

namespace jointplan {

void EnergyParams::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("energy: gamma must be positive");
  if (!(d_safe > 0.0)) throw InvalidArgument("energy: d_safe must be positive");
  if (!(lambda_b >= 0.0) || !(lambda_c >= 0.0) || !(w_goal >= 0.0)) {
    throw InvalidArgument("energy: planning weights must be nonnegative");
  }
  for (const auto* w : {&w_ego, &w_actor}) {
    for (double v : *w) {
      if (!std::isfinite(v)) throw InvalidArgument("energy: weights must be finite");
    }
  }
}

void EnergyTables::validate() const {
  if (num_actors == 0 || num_candidates == 0) throw InvalidArgument("tables: empty");
  if (unary.size() != num_actors * num_candidates || goal.size() != num_candidates ||
      pairwise.size() != num_actors * num_actors * num_candidates * num_candidates) {
    throw DimensionMismatch("tables: storage does not match shape");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(unary) || !finite(pairwise) || !finite(goal)) {
    throw NumericalFailure("tables: non-finite energy");
  }
}

FeatureVector extract_features(const Trajectory& traj, const Polyline& lane, double ref_speed) {
  FeatureVector f{};
  if (traj.empty()) return f;
  const std::size_t first = traj.future_begin();
  const std::size_t n = traj.size() - first;

  const PolylineProjection start = project_to_polyline(traj.position(0), lane);
  double lateral = 0.0;
  double misalign = 0.0;
  double end_arclength = start.arclength;
  for (std::size_t k = first; k < traj.size(); ++k) {
    const PolylineProjection pr = project_to_polyline(traj.position(k), lane);
    lateral += pr.distance;
    misalign += std::abs(normalize_angle(traj.waypoints[k].pose.heading - lane.heading_at(pr.arclength)));
    end_arclength = pr.arclength;
  }
  f[kProgress] = end_arclength - start.arclength;
  f[kLateralOffset] = lateral / static_cast<double>(n);
  f[kHeadingMisalignment] = misalign / static_cast<double>(n);

  if (traj.size() > 1) {
    double acc2 = 0.0;
    double curv2 = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
      const double acc = (traj.waypoints[k].speed - traj.waypoints[k - 1].speed) / traj.dt;
      acc2 += acc * acc;
      const double ds = (traj.position(k) - traj.position(k - 1)).norm();
      if (ds > 1e-6) {
        const double kappa =
            normalize_angle(traj.waypoints[k].pose.heading - traj.waypoints[k - 1].pose.heading) / ds;
        curv2 += kappa * kappa;
      }
    }
    const double steps = static_cast<double>(traj.size() - 1);
    f[kSquaredAccel] = acc2 / steps;
    f[kSquaredCurvature] = curv2 / steps;
  }
  f[kSpeedDeviation] = std::abs(traj.back().speed - ref_speed);
  return f;
}

double unary_energy(std::span<const double> features, const EnergyParams& params, bool is_ego) {
  const std::vector<double>& w = is_ego ? params.w_ego : params.w_actor;
  if (w.size() != features.size()) throw DimensionMismatch("unary_energy: feature/weight length mismatch");
  double e = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) e += w[k] * features[k];
  return e;
}

double collision_energy(const Trajectory& ti, const BoxDims& box_i, const Trajectory& tj,
                        const BoxDims& box_j, double gamma) {
  require_same_horizon(ti, tj);
  for (std::size_t k = ti.future_begin(); k < ti.size(); ++k) {
    if (boxes_overlap(OrientedBox(ti.waypoints[k].pose, box_i), OrientedBox(tj.waypoints[k].pose, box_j))) {
      return gamma;
    }
  }
  return 0.0;
}

double safety_energy(const Trajectory& ti, const Trajectory& tj, const BoxDims& box_j, double d_safe) {
  require_same_horizon(ti, tj);
  double e = 0.0;
  for (std::size_t k = ti.future_begin(); k < ti.size(); ++k) {
    const double v = ti.waypoints[k].speed;
    if (v <= 0.0) continue;
    const double d = point_to_box_distance(ti.position(k), OrientedBox(tj.waypoints[k].pose, box_j));
    const double violation = std::max(0.0, d_safe - d);
    e += v * violation * violation;
  }
  return e;
}

double goal_energy(const Trajectory& traj, const Goal& goal) {
  if (traj.empty()) throw InvalidArgument("goal_energy: empty trajectory");
  if (const Vec2* point = std::get_if<Vec2>(&goal)) {
    return (traj.back().pose.position() - *point).norm();
  }
  const Polyline& lane = std::get<Polyline>(goal);
  double sum = 0.0;
  for (std::size_t k = traj.future_begin(); k < traj.size(); ++k) {
    sum += project_to_polyline(traj.position(k), lane).distance;
  }
  return sum / static_cast<double>(traj.size() - traj.future_begin());
}

namespace {

void check_scene(std::span<const ActorContext> actors) {
  if (actors.empty()) throw InvalidArgument("scene: need at least the ego");
  const std::size_t k = actors[0].candidates.size();
  if (k == 0) throw InvalidArgument("scene: actors need candidates");
  const Trajectory& ref = actors[0].candidates[0];
  for (const ActorContext& a : actors) {
    if (a.candidates.size() != k) throw DimensionMismatch("scene: actors have different candidate counts");
    for (const Trajectory& t : a.candidates) require_same_horizon(ref, t);
  }
}

// Axis-aligned bounds of a trajectory's future centers.
struct Bounds {
  double xmin, ymin, xmax, ymax;

  static Bounds of(const Trajectory& t) {
    Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t k = t.future_begin(); k < t.size(); ++k) {
      b.xmin = std::min(b.xmin, t.waypoints[k].pose.x);
      b.xmax = std::max(b.xmax, t.waypoints[k].pose.x);
      b.ymin = std::min(b.ymin, t.waypoints[k].pose.y);
      b.ymax = std::max(b.ymax, t.waypoints[k].pose.y);
    }
    return b;
  }

  double gap(const Bounds& o) const {
    const double dx = std::max({0.0, o.xmin - xmax, xmin - o.xmax});
    const double dy = std::max({0.0, o.ymin - ymax, ymin - o.ymax});
    return std::hypot(dx, dy);
  }
};

double radius(const BoxDims& d) { return 0.5 * std::hypot(d.length, d.width); }

}  // namespace

std::vector<FeatureVector> extract_scene_features(std::span<const ActorContext> actors) {
  check_scene(actors);
  const std::size_t k = actors[0].candidates.size();
  std::vector<FeatureVector> out;
  out.reserve(actors.size() * k);
  for (const ActorContext& a : actors) {
    for (const Trajectory& t : a.candidates) out.push_back(extract_features(t, a.lane, a.ref_speed));
  }
  return out;
}

std::vector<double> build_pairwise(std::span<const ActorContext> actors, const EnergyParams& params) {
  check_scene(actors);
  const std::size_t n = actors.size();
  const std::size_t k = actors[0].candidates.size();
  EnergyTables t(n, k);

  std::vector<Bounds> bounds;
  bounds.reserve(n * k);
  for (const ActorContext& a : actors) {
    for (const Trajectory& c : a.candidates) bounds.push_back(Bounds::of(c));
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double reach = radius(actors[i].dims) + radius(actors[j].dims) + params.d_safe;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          if (bounds[i * k + a].gap(bounds[j * k + b]) > reach) continue;
          const Trajectory& ta = actors[i].candidates[a];
          const Trajectory& tb = actors[j].candidates[b];
          const double c = collision_energy(ta, actors[i].dims, tb, actors[j].dims, params.gamma);
          t.p(i, j, a, b) = c + safety_energy(ta, tb, actors[j].dims, params.d_safe);
          t.p(j, i, b, a) = c + safety_energy(tb, ta, actors[i].dims, params.d_safe);
        }
      }
    }
  }
  return std::move(t.pairwise);
}

EnergyTables build_tables(std::span<const ActorContext> actors, const Goal& goal, const EnergyParams& params) {
  params.validate();
  const std::vector<FeatureVector> features = extract_scene_features(actors);
  const std::size_t n = actors.size();
  const std::size_t k = actors[0].candidates.size();
  EnergyTables t(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) t.u(i, a) = unary_energy(features[i * k + a], params, i == 0);
  }
  t.pairwise = build_pairwise(actors, params);
  for (std::size_t a = 0; a < k; ++a) t.goal[a] = goal_energy(actors[0].candidates[a], goal);
  t.validate();
  return t;
}

}  // namespace jointplan
