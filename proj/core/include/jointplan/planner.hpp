#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "jointplan/energy.hpp"
#include "jointplan/inference.hpp"

namespace jointplan {

enum class PlannerVariant { Reactive, NonReactive, Interpolated };

std::string to_string(PlannerVariant v);
PlannerVariant parse_variant(const std::string& s);

struct CostWeights {
  double lambda_b = 1.0;  // ego/actor interaction
  double lambda_c = 0.1;  // actor unary
  double w_goal = 1.0;
};

struct PlannerConfig {
  PlannerVariant variant = PlannerVariant::Reactive;
  std::size_t set_size = 1;  // conditioning set size for Interpolated
  CostWeights weights;
  LbpConfig lbp;
  // Minimum ego mass for conditioning. Conditionals are formed from
  // log-domain beliefs, so 0 keeps every candidate plannable.
  double condition_eps = 0.0;

  void validate(std::size_t num_candidates) const;
};

// Additive decomposition of one candidate's planning cost. Each term
// already carries its weight.
struct ObjectiveTerms {
  double ego_unary = 0.0;
  double interaction = 0.0;
  double actor_unary = 0.0;
  double goal = 0.0;

  double total() const { return ego_unary + interaction + actor_unary + goal; }
};

struct PlanResult {
  std::size_t chosen = 0;
  std::vector<double> objective_values;
  std::vector<ObjectiveTerms> breakdown;
  bool converged = true;
  std::size_t lbp_iters = 0;
};

// Planning cost of ego candidate a0 given actor distributions `actor_probs`
// (N x K). The actor-actor interaction term is excluded.
ObjectiveTerms objective_terms(const EnergyTables& tables, std::span<const double> actor_probs,
                               std::size_t a0, const CostWeights& w, bool include_actor_unary);

// unary[0][a0] + lambda_b E[sum_i C_inter(a0, y_i) | a0]
//   + lambda_c E[sum_i C_traj(y_i) | a0] + w_goal goal[a0]
ObjectiveTerms reactive_terms(const EnergyTables& tables, const MarginalSet& ms, std::size_t a0,
                              const CostWeights& w, double eps = 1e-12);
double reactive_objective(const EnergyTables& tables, const MarginalSet& ms, std::size_t a0,
                          const CostWeights& w, double eps = 1e-12);

// unary[0][a0] + lambda_b E_{p(y_i)}[sum_i C_inter(a0, y_i)] + w_goal goal[a0]
ObjectiveTerms nonreactive_terms(const EnergyTables& tables, const MarginalSet& ms, std::size_t a0,
                                 const CostWeights& w);
double nonreactive_objective(const EnergyTables& tables, const MarginalSet& ms, std::size_t a0,
                             const CostWeights& w);

// The k ego candidates nearest a0 by trajectory L2 distance; a0 first,
// then by distance, ties by index.
std::vector<std::size_t> conditioning_set(std::span<const Trajectory> ego_candidates, std::size_t a0,
                                          std::size_t k);

// Reactive objective with predictions conditioned on the set of k nearest
// ego candidates. At k = K the actor unary term is dropped.
ObjectiveTerms interpolated_terms(const EnergyTables& tables, const MarginalSet& ms,
                                  std::span<const Trajectory> ego_candidates, std::size_t a0,
                                  std::size_t k, const CostWeights& w, double eps = 1e-12);
double interpolated_objective(const EnergyTables& tables, const MarginalSet& ms,
                              std::span<const Trajectory> ego_candidates, std::size_t a0, std::size_t k,
                              const CostWeights& w, double eps = 1e-12);

// Evaluates a configured objective for every ego candidate from given beliefs.
PlanResult evaluate_objectives(std::span<const Trajectory> ego_candidates, const EnergyTables& tables,
                               const MarginalSet& ms, const PlannerConfig& cfg);

// One LBP pass, then the configured objective over all K ego candidates;
// argmin with ties to the lowest index.
PlanResult plan(std::span<const Trajectory> ego_candidates, const EnergyTables& tables,
                const PlannerConfig& cfg);

}  // namespace jointplan
