#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "jointplan/errors.hpp"
#include "jointplan/planner.hpp"
#include "jointplan/sampler.hpp"
#include "support/oracles.hpp"

using namespace jointplan;

namespace {

std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

// Ego candidates spread out so the nearest-neighbour sets are distinct.
std::vector<Trajectory> ego_candidates(std::size_t k, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.num_candidates = k;
  cfg.horizon_steps = 6;
  cfg.seed = seed;
  return sample_candidates({Pose2(), 8.0}, cfg);
}

// Ego candidate 0 keeps its lane, 1 merges; the actor cruises (0) or yields (1).
// Merging next to a cruising actor collides.
EnergyTables merge_micro_scene() {
  EnergyTables t(2, 5);
  for (std::size_t a = 2; a < 5; ++a) t.u(0, a) = t.u(1, a) = 10.0;
  t.u(1, 1) = 1.0;
  t.p(0, 1, 1, 0) = t.p(1, 0, 0, 1) = 100.0;
  t.goal = {5.0, 0.0, 8.0, 8.0, 8.0};
  return t;
}

}  // namespace

TEST(Objectives, NoActors) {
  EnergyTables t(1, 3);
  t.unary = {1.0, 2.0, 3.0};
  t.goal = {0.5, 0.25, 0.0};
  const auto ms = lbp(t, {});
  const CostWeights w{1.0, 0.1, 2.0};
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(reactive_objective(t, ms, a, w), t.unary[a] + 2.0 * t.goal[a]);
    EXPECT_DOUBLE_EQ(nonreactive_objective(t, ms, a, w), t.unary[a] + 2.0 * t.goal[a]);
  }
}

TEST(Objectives, CoincideWithoutEgoInteraction) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 20; ++n) {
    auto t = oracle::random_tables(rng, {.actors = 4, .candidates = 5});
    for (std::size_t i = 1; i < 4; ++i) {
      for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) t.p(0, i, a, b) = t.p(i, 0, b, a) = 0.0;
      }
    }
    const auto ms = lbp(t, {});
    const CostWeights w{1.0, 0.0, 1.0};
    for (std::size_t a = 0; a < 5; ++a) {
      EXPECT_NEAR(reactive_objective(t, ms, a, w), nonreactive_objective(t, ms, a, w), 1e-9);
    }
  }
}

TEST(Objectives, UniformMarginalsIdenticalRows) {
  EnergyTables t(2, 3);
  t.unary = {0.3, 0.1, 0.2, 0.0, 0.0, 0.0};
  // pairwise[0][1][a][.] identical for every a; the reverse direction is zero.
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) t.p(0, 1, a, b) = 1.0;
  }
  const auto ms = lbp(t, {});
  const CostWeights w{1.0, 0.1, 0.0};
  std::vector<double> vals;
  for (std::size_t a = 0; a < 3; ++a) {
    vals.push_back(nonreactive_objective(t, ms, a, w));
    EXPECT_NEAR(nonreactive_terms(t, ms, a, w).interaction, 1.0, 1e-12);
  }
  EXPECT_EQ(argmin(vals), 1u);
}

TEST(Objectives, ReactiveEqualsBruteForceExpectation) {
  std::mt19937_64 rng(2);
  for (int n = 0; n < 20; ++n) {
    const auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 3});
    const auto ms = exact_marginals(t);
    const auto joint = oracle::enumerate(t);
    const CostWeights w{1.3, 0.4, 0.7};
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t set[] = {a};
      EXPECT_NEAR(reactive_objective(t, ms, a, w), oracle::brute_force_objective(t, joint, a, set, w, true), 1e-9);
    }
  }
}

TEST(Objectives, NonReactiveArgminMatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 20; ++n) {
    const auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 4});
    const auto ms = exact_marginals(t);
    const auto joint = oracle::enumerate(t);
    const CostWeights w{1.0, 0.1, 1.0};
    std::vector<double> ours, brute;
    for (std::size_t a = 0; a < 4; ++a) {
      ours.push_back(nonreactive_objective(t, ms, a, w));
      brute.push_back(oracle::brute_force_nonreactive(t, joint, a, w));
    }
    EXPECT_EQ(argmin(ours), argmin(brute));
    // Differences are the a0-independent actor-unary expectation.
    for (std::size_t a = 1; a < 4; ++a) EXPECT_NEAR(brute[a] - ours[a], brute[0] - ours[0], 1e-9);
  }
}

TEST(Interpolated, SetOfTwoMatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int n = 0; n < 10; ++n) {
    const auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 4});
    const auto cands = ego_candidates(4, rng());
    const auto ms = exact_marginals(t);
    const auto joint = oracle::enumerate(t);
    const CostWeights w{1.0, 0.2, 0.5};
    for (std::size_t a = 0; a < 4; ++a) {
      const auto set = conditioning_set(cands, a, 2);
      EXPECT_EQ(set.front(), a);
      EXPECT_NEAR(interpolated_objective(t, ms, cands, a, 2, w),
                  oracle::brute_force_objective(t, joint, a, set, w, true), 1e-9);
    }
  }
}

TEST(Interpolated, Endpoints) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 30; ++n) {
    const auto t = oracle::random_tables(rng, {.actors = 4, .candidates = 6, .collision_fraction = 0.1});
    const auto cands = ego_candidates(6, rng());
    const auto ms = lbp(t, {});
    const CostWeights w{1.0, 0.1, 1.0};
    std::vector<double> full, nonreactive;
    for (std::size_t a = 0; a < 6; ++a) {
      EXPECT_EQ(interpolated_objective(t, ms, cands, a, 1, w, 0.0), reactive_objective(t, ms, a, w, 0.0));
      full.push_back(interpolated_objective(t, ms, cands, a, 6, w, 0.0));
      nonreactive.push_back(nonreactive_objective(t, ms, a, w));
    }
    EXPECT_EQ(argmin(full), argmin(nonreactive));
  }
}

TEST(Interpolated, InvalidSetSize) {
  const auto cands = ego_candidates(4, 1);
  EXPECT_THROW(conditioning_set(cands, 0, 0), InvalidSetSize);
  EXPECT_THROW(conditioning_set(cands, 0, 5), InvalidSetSize);
  PlannerConfig cfg;
  cfg.variant = PlannerVariant::Interpolated;
  cfg.set_size = 9;
  EXPECT_THROW(cfg.validate(4), InvalidSetSize);
}

TEST(Plan, SingleCandidate) {
  EnergyTables t(3, 1);
  const std::vector<Trajectory> cands = ego_candidates(1, 3);
  for (auto v : {PlannerVariant::Reactive, PlannerVariant::NonReactive, PlannerVariant::Interpolated}) {
    PlannerConfig cfg;
    cfg.variant = v;
    EXPECT_EQ(plan(cands, t, cfg).chosen, 0u);
  }
}

TEST(Plan, DominantGoalWeight) {
  std::mt19937_64 rng(6);
  auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 5});
  t.goal = {4.0, 3.0, 0.5, 2.0, 1.0};
  PlannerConfig cfg;
  cfg.weights.w_goal = 1e6;
  EXPECT_EQ(plan(ego_candidates(5, 2), t, cfg).chosen, 2u);
}

TEST(Plan, BreakdownSumsAndTieBreak) {
  EnergyTables t(2, 4);
  PlannerConfig cfg;
  const auto r = plan(ego_candidates(4, 7), t, cfg);
  EXPECT_EQ(r.chosen, 0u);
  for (std::size_t a = 0; a < 4; ++a) {
    const auto& b = r.breakdown[a];
    EXPECT_NEAR(b.ego_unary + b.interaction + b.actor_unary + b.goal, r.objective_values[a], 1e-9);
  }
}

TEST(Plan, ShiftInvariance) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 20; ++n) {
    auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 5, .nonnegative_pairwise = true});
    const auto cands = ego_candidates(5, rng());
    PlannerConfig cfg;
    const auto base = plan(cands, t, cfg);
    for (std::size_t a = 0; a < 5; ++a) EXPECT_GE(base.breakdown[a].interaction, 0.0);
    for (std::size_t a = 0; a < 5; ++a) t.u(0, a) += 2.5;
    const auto shifted = plan(cands, t, cfg);
    EXPECT_EQ(shifted.chosen, base.chosen);
    for (std::size_t a = 0; a < 5; ++a) {
      EXPECT_NEAR(shifted.objective_values[a] - base.objective_values[a], 2.5, 1e-9);
    }
  }
}

TEST(Plan, MergeMicroScene) {
  const auto t = merge_micro_scene();
  const auto cands = ego_candidates(5, 11);
  PlannerConfig reactive;
  PlannerConfig nonreactive;
  nonreactive.variant = PlannerVariant::NonReactive;
  EXPECT_EQ(plan(cands, t, reactive).chosen, 1u);
  EXPECT_EQ(plan(cands, t, nonreactive).chosen, 0u);

  const auto joint = oracle::enumerate(t);
  std::vector<double> r, nr;
  for (std::size_t a = 0; a < 5; ++a) {
    const std::size_t set[] = {a};
    r.push_back(oracle::brute_force_objective(t, joint, a, set, reactive.weights, true));
    nr.push_back(oracle::brute_force_nonreactive(t, joint, a, reactive.weights));
  }
  EXPECT_EQ(argmin(r), 1u);
  EXPECT_EQ(argmin(nr), 0u);
}

TEST(Variant, ParseAndPrint) {
  EXPECT_EQ(parse_variant("non-reactive"), PlannerVariant::NonReactive);
  EXPECT_EQ(to_string(parse_variant("interpolated")), "interpolated");
  EXPECT_THROW(parse_variant("bogus"), InvalidArgument);
}
