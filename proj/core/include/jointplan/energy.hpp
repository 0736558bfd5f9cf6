#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "jointplan/geometry.hpp"
#include "jointplan/trajectory.hpp"

namespace jointplan {

// Hand-crafted trajectory features scored by the linear unary model.
enum Feature : std::size_t {
  kProgress = 0,         // arclength gained along the lane, m
  kLateralOffset,        // mean |distance| to the lane centerline, m
  kSquaredAccel,         // mean squared longitudinal acceleration, m^2/s^4
  kSquaredCurvature,     // mean squared heading change per meter, 1/m^2
  kSpeedDeviation,       // |terminal speed - reference speed|, m/s
  kHeadingMisalignment,  // mean |heading - lane heading|, rad
  kNumFeatures
};

using FeatureVector = std::array<double, kNumFeatures>;

struct EnergyParams {
  std::vector<double> w_ego = std::vector<double>(kNumFeatures, 0.0);
  std::vector<double> w_actor = std::vector<double>(kNumFeatures, 0.0);
  double gamma = 100.0;   // collision energy
  double d_safe = 4.0;    // safety distance, m
  double lambda_b = 1.0;  // ego/actor interaction weight in the planning cost
  double lambda_c = 0.1;  // actor unary weight in the planning cost
  double w_goal = 1.0;

  void validate() const;
};

// A goal is either a target point or a lane centerline.
using Goal = std::variant<Vec2, Polyline>;

FeatureVector extract_features(const Trajectory& traj, const Polyline& lane, double ref_speed);

// Dot product with w_ego or w_actor; DimensionMismatch on length mismatch.
double unary_energy(std::span<const double> features, const EnergyParams& params, bool is_ego);

// gamma if the footprints overlap at any future waypoint, else 0.
double collision_energy(const Trajectory& ti, const BoxDims& box_i, const Trajectory& tj,
                        const BoxDims& box_j, double gamma);

// Sum over future waypoints of speed_i * max(0, d_safe - dist(center_i, box_j))^2.
// Not symmetric in (i, j).
double safety_energy(const Trajectory& ti, const Trajectory& tj, const BoxDims& box_j, double d_safe);

// Point goal: distance from the final waypoint. Lane goal: mean projected
// distance of the future waypoints.
double goal_energy(const Trajectory& traj, const Goal& goal);

// Everything the energy model needs to know about one actor (index 0 = ego).
struct ActorContext {
  std::vector<Trajectory> candidates;
  BoxDims dims;
  Polyline lane;
  double ref_speed = 10.0;
};

// unary is (N+1) x K, pairwise (N+1) x (N+1) x K x K, goal K; all row-major.
struct EnergyTables {
  std::size_t num_actors = 0;
  std::size_t num_candidates = 0;
  std::vector<double> unary;
  std::vector<double> pairwise;
  std::vector<double> goal;

  EnergyTables() = default;
  EnergyTables(std::size_t actors, std::size_t candidates)
      : num_actors(actors),
        num_candidates(candidates),
        unary(actors * candidates, 0.0),
        pairwise(actors * actors * candidates * candidates, 0.0),
        goal(candidates, 0.0) {}

  double& u(std::size_t i, std::size_t a) { return unary[i * num_candidates + a]; }
  double u(std::size_t i, std::size_t a) const { return unary[i * num_candidates + a]; }
  std::size_t pair_offset(std::size_t i, std::size_t j) const {
    return (i * num_actors + j) * num_candidates * num_candidates;
  }
  double& p(std::size_t i, std::size_t j, std::size_t a, std::size_t b) {
    return pairwise[pair_offset(i, j) + a * num_candidates + b];
  }
  double p(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return pairwise[pair_offset(i, j) + a * num_candidates + b];
  }
  // Edge energy of the unordered pair {i, j}: both ordered interaction terms.
  double edge(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return p(i, j, a, b) + p(j, i, b, a);
  }

  // Shape and finiteness checks.
  void validate() const;
};

// Features for every (actor, candidate), row-major (N+1) x K.
std::vector<FeatureVector> extract_scene_features(std::span<const ActorContext> actors);

// Interaction energies only; the same layout as EnergyTables::pairwise.
std::vector<double> build_pairwise(std::span<const ActorContext> actors, const EnergyParams& params);

EnergyTables build_tables(std::span<const ActorContext> actors, const Goal& goal, const EnergyParams& params);

}  // namespace jointplan
