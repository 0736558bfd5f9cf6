#include "jointplan/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "jointplan/errors.hpp"
#include "jointplan/random.hpp"

namespace jointplan {

void CarFollowingParams::validate() const {
  if (!(desired_speed >= 0.0) || !(max_accel > 0.0) || !(comfortable_decel > 0.0) || !(min_gap > 0.0) ||
      !(corridor_margin >= 0.0)) {
    throw InvalidScenario("car-following magnitudes must be positive");
  }
  if (!(hazard_lookahead > min_gap)) throw InvalidScenario("hazard_lookahead must exceed min_gap");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::GoalReached:
      return "goal_reached";
    case Outcome::TimerExpired:
      return "timer_expired";
    case Outcome::Collision:
      return "collision";
  }
  return "unknown";
}

CostWeights cost_weights(const EnergyParams& params) {
  return {params.lambda_b, params.lambda_c, params.w_goal};
}

Pose2 pose_on_route(const Polyline& route, double arclength) {
  const Vec2 p = route.point_at(arclength);
  return {p.x, p.y, route.heading_at(arclength)};
}

namespace {

const Polyline& lane_or_throw(const Scenario& s, const std::string& name) {
  auto it = s.lanes.find(name);
  if (it == s.lanes.end()) throw InvalidScenario("unknown lane '" + name + "'");
  return it->second;
}

double initial_arclength(const Scenario& s, const ActorSpec& a) {
  return project_to_polyline(a.initial.pose.position(), lane_or_throw(s, a.route)).arclength;
}

}  // namespace

void Scenario::validate() const {
  if (!(timer > 0.0)) throw InvalidScenario("timer must be positive");
  if (!(dt > 0.0)) throw InvalidScenario("dt must be positive");
  if (settings.replan_interval < 1) throw InvalidScenario("replan_interval must be >= 1");
  if (!(position_sigma >= 0.0) || !(speed_sigma >= 0.0)) throw InvalidScenario("perturbation sigmas must be >= 0");
  try {
    sampler.validate();
    if (ego.sampler) ego.sampler->validate();
  } catch (const InvalidArgument& e) {
    throw InvalidScenario(e.what());
  }
  if (ego.sampler && (ego.sampler->num_candidates != sampler.num_candidates ||
                      ego.sampler->horizon_steps != sampler.horizon_steps || ego.sampler->dt != sampler.dt)) {
    throw InvalidScenario("ego sampler must match the scenario's candidate count, horizon and dt");
  }
  if (const auto* lane = std::get_if<std::string>(&ego.goal)) lane_or_throw(*this, *lane);
  if (!(ego.initial.speed >= 0.0)) throw InvalidScenario("ego speed must be >= 0");
  std::vector<OrientedBox> boxes{OrientedBox(ego.initial.pose, ego.dims)};
  for (const ActorSpec& a : actors) {
    a.behavior.validate();
    if (!(a.initial.speed >= 0.0)) throw InvalidScenario("actor speed must be >= 0");
    const Polyline& route = lane_or_throw(*this, a.route);
    boxes.emplace_back(pose_on_route(route, initial_arclength(*this, a)), a.dims);
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (boxes_overlap(boxes[i], boxes[j])) throw InvalidScenario("vehicles overlap at t = 0");
    }
  }
}

Hazard detect_hazard(const ActorState& state, const Polyline& route, const BoxDims& dims,
                     std::span<const OrientedBox> others, const CarFollowingParams& params) {
  const double front = state.arclength + 0.5 * dims.length;
  const double half_width = 0.5 * (dims.width + params.corridor_margin);
  double nearest = std::numeric_limits<double>::infinity();
  for (const OrientedBox& box : others) {
    // Skip vehicles that cannot reach the corridor.
    const Vec2 ahead = route.point_at(front + 0.5 * params.hazard_lookahead);
    if ((box.center.position() - ahead).norm() >
        0.5 * params.hazard_lookahead + half_width + box.bounding_radius() + 1.0) {
      continue;
    }
    auto probe = [&](const Vec2& p) {
      const PolylineProjection pr = project_to_polyline(p, route);
      const double gap = pr.arclength - front;
      if (gap > 0.0 && gap <= params.hazard_lookahead && pr.distance <= half_width) {
        nearest = std::min(nearest, gap);
      }
    };
    probe(box.center.position());
    for (const Vec2& c : box.corners()) probe(c);
  }
  if (!std::isfinite(nearest)) return Hazard::None;
  return nearest <= params.min_gap ? Hazard::WithinMinGap : Hazard::Ahead;
}

ActorState actor_policy_step(const ActorState& state, const Polyline& route, const BoxDims& dims,
                             std::span<const OrientedBox> others, const CarFollowingParams& params, double dt) {
  double accel = 0.0;
  switch (detect_hazard(state, route, dims, others, params)) {
    case Hazard::WithinMinGap:
      accel = -2.0 * params.comfortable_decel;
      break;
    case Hazard::Ahead:
      accel = -params.comfortable_decel;
      break;
    case Hazard::None:
      accel = std::clamp((params.desired_speed - state.speed) / dt, -params.max_accel, params.max_accel);
      break;
  }
  ActorState next;
  next.speed = std::max(0.0, state.speed + accel * dt);
  next.accel = (next.speed - state.speed) / dt;
  next.arclength = state.arclength + 0.5 * (state.speed + next.speed) * dt;
  return next;
}

namespace {

// Lane whose centerline is nearest to p; map order breaks ties.
const Polyline& nearest_lane(const Scenario& s, const Vec2& p) {
  const Polyline* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [name, lane] : s.lanes) {
    const double d = project_to_polyline(p, lane).distance;
    if (d < best_d) {
      best_d = d;
      best = &lane;
    }
  }
  if (!best) throw InvalidScenario("scenario has no lanes");
  return *best;
}

double goal_distance(const Goal& goal, const Vec2& p) {
  if (const Vec2* g = std::get_if<Vec2>(&goal)) return (p - *g).norm();
  return project_to_polyline(p, std::get<Polyline>(goal)).distance;
}

}  // namespace

Goal scenario_goal(const Scenario& s) {
  if (const Vec2* p = std::get_if<Vec2>(&s.ego.goal)) return *p;
  return lane_or_throw(s, std::get<std::string>(s.ego.goal));
}

std::vector<ActorContext> replan_scene(const Scenario& s, const KinematicState& ego,
                                       std::span<const KinematicState> actors, std::uint64_t seed,
                                       std::size_t step) {
  if (actors.size() != s.actors.size()) throw DimensionMismatch("replan_scene: actor count mismatch");
  std::vector<ActorContext> scene;
  scene.reserve(actors.size() + 1);
  SamplerConfig ego_sampler = s.ego_sampler();
  ego_sampler.seed = mix_seed({seed, static_cast<std::uint64_t>(step), 0});
  scene.push_back({sample_candidates(ego, ego_sampler), s.ego.dims, nearest_lane(s, ego.pose.position()),
                   s.ego.ref_speed});
  SamplerConfig sampler = s.sampler;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const ActorSpec& a = s.actors[i];
    sampler.seed = mix_seed({seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i + 1)});
    scene.push_back({sample_candidates(actors[i], sampler), a.dims, lane_or_throw(s, a.route),
                     a.behavior.desired_speed});
  }
  return scene;
}

std::vector<ActorContext> initial_scene(const Scenario& s, std::uint64_t seed) {
  s.validate();
  std::vector<KinematicState> actors;
  for (const ActorSpec& a : s.actors) {
    actors.push_back({pose_on_route(lane_or_throw(s, a.route), initial_arclength(s, a)), a.initial.speed});
  }
  return replan_scene(s, s.ego.initial, actors, seed, 0);
}

EpisodeResult step_episode(const Scenario& scenario, const PlannerConfig& planner, const EnergyParams& params,
                           std::uint64_t seed, const EpisodeOptions& options) {
  scenario.validate();
  planner.validate(scenario.sampler.num_candidates);
  const Goal goal = scenario_goal(scenario);
  const SimSettings& cfg = scenario.settings;
  const std::size_t n = scenario.actors.size();

  std::vector<const Polyline*> routes;
  std::vector<ActorState> actors;
  for (const ActorSpec& a : scenario.actors) {
    routes.push_back(&lane_or_throw(scenario, a.route));
    actors.push_back({initial_arclength(scenario, a), a.initial.speed, 0.0});
  }
  std::vector<bool> braking(n, false);

  EpisodeResult result;
  result.scenario = scenario.name;
  result.seed = seed;

  Waypoint ego{scenario.ego.initial.pose, scenario.ego.initial.speed};
  Trajectory committed;
  double committed_at = 0.0;
  std::size_t held = 0;
  double time = 0.0;
  const auto max_steps = static_cast<std::size_t>(std::ceil(scenario.timer / scenario.dt - 1e-9));

  std::vector<OrientedBox> boxes(n + 1);
  auto refresh_boxes = [&] {
    boxes[0] = OrientedBox(ego.pose, scenario.ego.dims);
    for (std::size_t i = 0; i < n; ++i) {
      boxes[i + 1] = OrientedBox(pose_on_route(*routes[i], actors[i].arclength), scenario.actors[i].dims);
    }
  };
  refresh_boxes();

  for (std::size_t step = 0; step < max_steps; ++step) {
    std::optional<PlanSummary> summary;
    if (step % cfg.replan_interval == 0) {
      std::vector<KinematicState> actor_states;
      for (std::size_t i = 0; i < n; ++i) actor_states.push_back({boxes[i + 1].center, actors[i].speed});
      std::vector<ActorContext> scene =
          replan_scene(scenario, {ego.pose, ego.speed}, actor_states, seed, step);
      const EnergyTables tables = build_tables(scene, goal, params);
      PlanResult plan_result = plan(scene[0].candidates, tables, planner);
      committed = std::move(scene[0].candidates[plan_result.chosen]);
      committed_at = time;
      ++result.replans;
      if (!plan_result.converged) ++result.unconverged_replans;
      if (options.record_trace) {
        summary = PlanSummary{plan_result.chosen, std::move(plan_result.objective_values),
                              std::move(plan_result.breakdown), plan_result.converged};
      }
    }

    // Actors react to the world as it was at the start of the step.
    std::vector<OrientedBox> others;
    others.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      others.clear();
      for (std::size_t j = 0; j <= n; ++j) {
        if (j != i + 1) others.push_back(boxes[j]);
      }
      actors[i] = actor_policy_step(actors[i], *routes[i], scenario.actors[i].dims, others,
                                    scenario.actors[i].behavior, scenario.dt);
      const bool now_braking = actors[i].accel < cfg.brake_threshold;
      if (now_braking && !braking[i]) ++result.brake_events;
      braking[i] = now_braking;
    }
    time = static_cast<double>(step + 1) * scenario.dt;
    ego = interpolate(committed, time - committed_at);
    refresh_boxes();

    if (options.record_trace) {
      StepRecord rec;
      rec.time = time;
      rec.ego_pose = ego.pose;
      rec.ego_speed = ego.speed;
      for (std::size_t i = 0; i < n; ++i) {
        rec.actor_poses.push_back(boxes[i + 1].center);
        rec.actor_speeds.push_back(actors[i].speed);
      }
      rec.plan = std::move(summary);
      result.trace.push_back(std::move(rec));
    }

    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        if (boxes_overlap(boxes[i], boxes[j])) ++result.actor_collisions;
      }
    }
    bool hit = false;
    for (std::size_t i = 1; i <= n && !hit; ++i) hit = boxes_overlap(boxes[0], boxes[i]);
    if (hit) {
      result.outcome = Outcome::Collision;
      result.collision = true;
      break;
    }

    bool reached = false;
    if (const Vec2* g = std::get_if<Vec2>(&goal)) {
      reached = (ego.pose.position() - *g).norm() <= cfg.goal_radius;
    } else {
      const double offset = project_to_polyline(ego.pose.position(), std::get<Polyline>(goal)).distance;
      held = offset < 0.5 * cfg.lane_width ? held + 1 : 0;
      reached = held >= cfg.hold_steps;
    }
    if (reached) {
      result.outcome = Outcome::GoalReached;
      result.success = true;
      result.ttc = time;
      break;
    }
  }
  result.goal_distance = goal_distance(goal, ego.pose.position());
  return result;
}

std::uint64_t episode_seed(std::uint64_t suite_seed, std::size_t template_id, std::size_t variant_id) {
  return mix_seed({suite_seed, static_cast<std::uint64_t>(template_id), static_cast<std::uint64_t>(variant_id)});
}

Scenario perturb_scenario(const Scenario& base, std::uint64_t seed) {
  base.validate();
  if (base.position_sigma == 0.0 && base.speed_sigma == 0.0) return base;
  std::mt19937_64 rng(mix_seed({seed, 0x7065727475726bULL}));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Scenario s = base;
    for (ActorSpec& a : s.actors) {
      const Polyline& route = lane_or_throw(s, a.route);
      const double arc = initial_arclength(base, a) + base.position_sigma * standard_normal(rng);
      a.initial.pose = pose_on_route(route, arc);
      a.initial.speed = std::max(0.0, a.initial.speed + base.speed_sigma * standard_normal(rng));
    }
    try {
      s.validate();
      return s;
    } catch (const InvalidScenario&) {
    }
  }
  throw InfeasiblePerturbation("could not draw a non-overlapping perturbation of '" + base.name + "'");
}

SuiteAggregates aggregate(std::span<const EpisodeResult> episodes) {
  SuiteAggregates agg;
  agg.episodes = episodes.size();
  if (episodes.empty()) {
    agg.mean_ttc = std::numeric_limits<double>::quiet_NaN();
    return agg;
  }
  std::size_t successes = 0;
  std::size_t collisions = 0;
  double ttc = 0.0;
  double goal = 0.0;
  double brakes = 0.0;
  for (const EpisodeResult& e : episodes) {
    if (e.success) {
      ++successes;
      ttc += e.ttc;
    }
    if (e.collision) ++collisions;
    goal += e.goal_distance;
    brakes += static_cast<double>(e.brake_events);
  }
  const double count = static_cast<double>(episodes.size());
  agg.success_rate = 100.0 * static_cast<double>(successes) / count;
  agg.mean_ttc = successes ? ttc / static_cast<double>(successes) : std::numeric_limits<double>::quiet_NaN();
  agg.mean_goal_distance = goal / count;
  agg.collision_rate = 100.0 * static_cast<double>(collisions) / count;
  agg.mean_brake_events = brakes / count;
  return agg;
}

std::vector<EpisodeResult> SuiteResult::episodes() const {
  std::vector<EpisodeResult> out;
  out.reserve(entries.size());
  for (const SuiteEntry& e : entries) out.push_back(e.result);
  return out;
}

SuiteResult run_suite(std::span<const Scenario> templates, std::size_t n_variants, const PlannerConfig& planner,
                      const EnergyParams& params, std::uint64_t seed, const SuiteOptions& options) {
  if (n_variants < 1) throw InvalidArgument("run_suite: n_variants must be >= 1");
  const std::size_t jobs = templates.size() * n_variants;
  std::vector<std::optional<EpisodeResult>> results(jobs);
  std::vector<std::string> skip_reason(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t t = job / n_variants;
      const std::size_t v = job % n_variants;
      const std::uint64_t ep_seed = episode_seed(seed, t, v);
      try {
        const Scenario s = perturb_scenario(templates[t], ep_seed);
        results[job] = step_episode(s, planner, params, ep_seed, {options.record_trace});
      } catch (const InfeasiblePerturbation& e) {
        skip_reason[job] = e.what();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, jobs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SuiteResult suite;
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t t = job / n_variants;
    const std::size_t v = job % n_variants;
    if (results[job]) {
      suite.entries.push_back({t, v, std::move(*results[job])});
    } else {
      suite.skipped.push_back({t, v, skip_reason[job]});
    }
  }
  const std::vector<EpisodeResult> eps = suite.episodes();
  suite.aggregates = aggregate(eps);
  return suite;
}

}  // namespace jointplan
