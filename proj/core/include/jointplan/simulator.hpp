#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jointplan/energy.hpp"
#include "jointplan/planner.hpp"
#include "jointplan/sampler.hpp"

namespace jointplan {

struct CarFollowingParams {
  double desired_speed = 10.0;
  double max_accel = 2.0;
  double comfortable_decel = 3.0;
  double hazard_lookahead = 15.0;  // m ahead of the front bumper
  double min_gap = 5.0;            // m; braking doubles inside this gap
  double corridor_margin = 0.5;    // corridor width = own width + margin

  void validate() const;
};

struct ActorSpec {
  std::string name;
  KinematicState initial;
  BoxDims dims;
  std::string route;  // lane name; the actor is snapped onto it
  CarFollowingParams behavior;
};

// A target point or the name of a target lane.
using GoalSpec = std::variant<Vec2, std::string>;

struct EgoSpec {
  KinematicState initial;
  BoxDims dims;
  GoalSpec goal;
  double ref_speed = 10.0;
  // Motion ranges for the ego's own candidates. Count, horizon and dt must
  // match the scenario sampler; unset means the scenario sampler.
  std::optional<SamplerConfig> sampler;
};

struct SimSettings {
  double goal_radius = 2.0;     // point goals
  double lane_width = 3.5;      // lane goals: |offset| < lane_width / 2 ...
  std::size_t hold_steps = 10;  // ... for this many consecutive steps
  std::size_t replan_interval = 3;
  double brake_threshold = -2.0;  // m/s^2
};

struct Scenario {
  std::string name;
  std::map<std::string, Polyline> lanes;
  std::vector<ActorSpec> actors;
  EgoSpec ego;
  double timer = 15.0;
  double dt = 0.1;
  double position_sigma = 0.0;  // m, along each actor's route
  double speed_sigma = 0.0;     // m/s
  SimSettings settings;
  SamplerConfig sampler;

  const SamplerConfig& ego_sampler() const { return ego.sampler ? *ego.sampler : sampler; }

  // Lanes, routes and goal exist; timer and dt positive; no initial
  // overlaps. Throws InvalidScenario.
  void validate() const;
};

// Longitudinal state of a route-following actor.
struct ActorState {
  double arclength = 0.0;
  double speed = 0.0;
  double accel = 0.0;  // applied over the last step
};

Pose2 pose_on_route(const Polyline& route, double arclength);

enum class Hazard { None, Ahead, WithinMinGap };

// Looks for any corner or center of `others` inside the corridor that runs
// along the route from the front bumper for hazard_lookahead meters, with
// half-width (width + margin) / 2. Within min_gap of the bumper the hazard
// is WithinMinGap.
Hazard detect_hazard(const ActorState& state, const Polyline& route, const BoxDims& dims,
                     std::span<const OrientedBox> others, const CarFollowingParams& params);

// Tracks desired_speed at up to max_accel; brakes at comfortable_decel for a
// hazard ahead and twice that within min_gap. Never reverses.
ActorState actor_policy_step(const ActorState& state, const Polyline& route, const BoxDims& dims,
                             std::span<const OrientedBox> others, const CarFollowingParams& params, double dt);

// Goal energy target of the scenario: the point, or the named lane.
Goal scenario_goal(const Scenario& s);

// Candidate sets for every vehicle as drawn at a replan: the ego keeps its
// nearest lane, actors their route at desired_speed. Candidate seeds derive
// from (seed, step, vehicle index).
std::vector<ActorContext> replan_scene(const Scenario& s, const KinematicState& ego,
                                       std::span<const KinematicState> actors, std::uint64_t seed,
                                       std::size_t step);

// replan_scene at t = 0 with actors snapped onto their routes.
std::vector<ActorContext> initial_scene(const Scenario& s, std::uint64_t seed);

enum class Outcome { GoalReached, TimerExpired, Collision };
std::string to_string(Outcome o);

struct PlanSummary {
  std::size_t chosen = 0;
  std::vector<double> objective_values;
  std::vector<ObjectiveTerms> breakdown;
  bool converged = true;
};

struct StepRecord {
  double time = 0.0;
  Pose2 ego_pose;
  double ego_speed = 0.0;
  std::vector<Pose2> actor_poses;
  std::vector<double> actor_speeds;
  std::optional<PlanSummary> plan;  // set on replanning steps
};

struct EpisodeResult {
  std::string scenario;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::TimerExpired;
  bool success = false;
  double ttc = 0.0;  // meaningful only when success
  double goal_distance = 0.0;
  bool collision = false;
  std::size_t brake_events = 0;
  std::size_t actor_collisions = 0;  // actor-actor overlap steps; never terminal
  std::size_t replans = 0;
  std::size_t unconverged_replans = 0;
  std::vector<StepRecord> trace;
};

struct EpisodeOptions {
  bool record_trace = true;
};

// Closed-loop rollout: the ego replans every replan_interval steps and
// tracks the chosen candidate exactly in between; actors run the
// car-following policy. Ends on ego collision, goal or timer.
EpisodeResult step_episode(const Scenario& scenario, const PlannerConfig& planner, const EnergyParams& params,
                           std::uint64_t seed, const EpisodeOptions& options = {});

// Variant `variant` of a template with Gaussian perturbation of every
// actor's route position and speed, redrawn until nothing overlaps.
// Throws InfeasiblePerturbation after 100 failed draws.
Scenario perturb_scenario(const Scenario& base, std::uint64_t seed);

std::uint64_t episode_seed(std::uint64_t suite_seed, std::size_t template_id, std::size_t variant_id);

struct SuiteAggregates {
  std::size_t episodes = 0;
  double success_rate = 0.0;    // percent
  double mean_ttc = 0.0;        // over successes; NaN when none
  double mean_goal_distance = 0.0;
  double collision_rate = 0.0;  // percent
  double mean_brake_events = 0.0;
};

SuiteAggregates aggregate(std::span<const EpisodeResult> episodes);

struct SkippedEpisode {
  std::size_t template_id = 0;
  std::size_t variant_id = 0;
  std::string reason;
};

struct SuiteEntry {
  std::size_t template_id = 0;
  std::size_t variant_id = 0;
  EpisodeResult result;
};

struct SuiteResult {
  std::vector<SuiteEntry> entries;
  std::vector<SkippedEpisode> skipped;
  SuiteAggregates aggregates;

  std::vector<EpisodeResult> episodes() const;
};

struct SuiteOptions {
  std::size_t workers = 1;
  bool record_trace = false;
};

SuiteResult run_suite(std::span<const Scenario> templates, std::size_t n_variants, const PlannerConfig& planner,
                      const EnergyParams& params, std::uint64_t seed, const SuiteOptions& options = {});

// Planning weights carried by EnergyParams.
CostWeights cost_weights(const EnergyParams& params);

}  // namespace jointplan
