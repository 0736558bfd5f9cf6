#include "jointplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jointplan/errors.hpp"

namespace jointplan {

std::string to_string(PlannerVariant v) {
  switch (v) {
    case PlannerVariant::Reactive:
      return "reactive";
    case PlannerVariant::NonReactive:
      return "nonreactive";
    case PlannerVariant::Interpolated:
      return "interpolated";
  }
  return "unknown";
}

PlannerVariant parse_variant(const std::string& s) {
  if (s == "reactive") return PlannerVariant::Reactive;
  if (s == "nonreactive" || s == "non-reactive") return PlannerVariant::NonReactive;
  if (s == "interpolated") return PlannerVariant::Interpolated;
  throw InvalidArgument("unknown planner variant: " + s);
}

void PlannerConfig::validate(std::size_t num_candidates) const {
  lbp.validate();
  if (variant == PlannerVariant::Interpolated && (set_size < 1 || set_size > num_candidates)) {
    throw InvalidSetSize("interpolated set size must be in [1, K]");
  }
  if (!(weights.lambda_b >= 0.0) || !(weights.lambda_c >= 0.0) || !(weights.w_goal >= 0.0)) {
    throw InvalidArgument("planner weights must be nonnegative");
  }
}

ObjectiveTerms objective_terms(const EnergyTables& t, std::span<const double> actor_probs, std::size_t a0,
                               const CostWeights& w, bool include_actor_unary) {
  const std::size_t n = t.num_actors;
  const std::size_t k = t.num_candidates;
  if (a0 >= k) throw InvalidArgument("ego candidate out of range");
  if (actor_probs.size() != (n - 1) * k) throw DimensionMismatch("actor distribution shape mismatch");
  double inter = 0.0;
  double unary = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t b = 0; b < k; ++b) {
      const double p = actor_probs[(i - 1) * k + b];
      inter += p * t.p(0, i, a0, b);
      unary += p * t.u(i, b);
    }
  }
  ObjectiveTerms terms;
  terms.ego_unary = t.u(0, a0);
  terms.interaction = w.lambda_b * inter;
  terms.actor_unary = include_actor_unary ? w.lambda_c * unary : 0.0;
  terms.goal = w.w_goal * t.goal[a0];
  return terms;
}

ObjectiveTerms reactive_terms(const EnergyTables& t, const MarginalSet& ms, std::size_t a0,
                              const CostWeights& w, double eps) {
  return objective_terms(t, conditional_marginals(ms, a0, eps), a0, w, true);
}

double reactive_objective(const EnergyTables& t, const MarginalSet& ms, std::size_t a0, const CostWeights& w,
                          double eps) {
  return reactive_terms(t, ms, a0, w, eps).total();
}

ObjectiveTerms nonreactive_terms(const EnergyTables& t, const MarginalSet& ms, std::size_t a0,
                                 const CostWeights& w) {
  return objective_terms(t, actor_marginals(ms), a0, w, false);
}

double nonreactive_objective(const EnergyTables& t, const MarginalSet& ms, std::size_t a0, const CostWeights& w) {
  return nonreactive_terms(t, ms, a0, w).total();
}

std::vector<std::size_t> conditioning_set(std::span<const Trajectory> ego_candidates, std::size_t a0,
                                          std::size_t k) {
  const std::size_t total = ego_candidates.size();
  if (k < 1 || k > total) throw InvalidSetSize("conditioning set size must be in [1, K]");
  if (a0 >= total) throw InvalidArgument("ego candidate out of range");
  std::vector<std::pair<double, std::size_t>> others;
  others.reserve(total - 1);
  for (std::size_t c = 0; c < total; ++c) {
    if (c != a0) others.emplace_back(squared_l2_distance(ego_candidates[a0], ego_candidates[c]), c);
  }
  std::sort(others.begin(), others.end());
  std::vector<std::size_t> set{a0};
  for (std::size_t m = 0; m + 1 < k; ++m) set.push_back(others[m].second);
  return set;
}

ObjectiveTerms interpolated_terms(const EnergyTables& t, const MarginalSet& ms,
                                  std::span<const Trajectory> ego_candidates, std::size_t a0, std::size_t k,
                                  const CostWeights& w, double eps) {
  if (ego_candidates.size() != t.num_candidates) throw DimensionMismatch("ego candidates do not match tables");
  const std::vector<std::size_t> set = conditioning_set(ego_candidates, a0, k);
  const bool full = k == t.num_candidates;
  return objective_terms(t, set_conditional_marginals(ms, set, eps), a0, w, !full);
}

double interpolated_objective(const EnergyTables& t, const MarginalSet& ms,
                              std::span<const Trajectory> ego_candidates, std::size_t a0, std::size_t k,
                              const CostWeights& w, double eps) {
  return interpolated_terms(t, ms, ego_candidates, a0, k, w, eps).total();
}

PlanResult evaluate_objectives(std::span<const Trajectory> ego_candidates, const EnergyTables& tables,
                               const MarginalSet& ms, const PlannerConfig& cfg) {
  const std::size_t k = tables.num_candidates;
  cfg.validate(k);
  PlanResult result;
  result.converged = ms.converged;
  result.lbp_iters = ms.iters_used;
  result.breakdown.reserve(k);
  for (std::size_t a = 0; a < k; ++a) {
    switch (cfg.variant) {
      case PlannerVariant::Reactive:
        result.breakdown.push_back(reactive_terms(tables, ms, a, cfg.weights, cfg.condition_eps));
        break;
      case PlannerVariant::NonReactive:
        result.breakdown.push_back(nonreactive_terms(tables, ms, a, cfg.weights));
        break;
      case PlannerVariant::Interpolated:
        result.breakdown.push_back(
            interpolated_terms(tables, ms, ego_candidates, a, cfg.set_size, cfg.weights, cfg.condition_eps));
        break;
    }
    result.objective_values.push_back(result.breakdown.back().total());
  }
  result.chosen = static_cast<std::size_t>(
      std::min_element(result.objective_values.begin(), result.objective_values.end()) -
      result.objective_values.begin());
  return result;
}

PlanResult plan(std::span<const Trajectory> ego_candidates, const EnergyTables& tables, const PlannerConfig& cfg) {
  if (ego_candidates.size() != tables.num_candidates) {
    throw DimensionMismatch("plan: ego candidates do not match tables");
  }
  cfg.validate(tables.num_candidates);
  const MarginalSet ms = lbp(tables, cfg.lbp);
  return evaluate_objectives(ego_candidates, tables, ms, cfg);
}

}  // namespace jointplan
