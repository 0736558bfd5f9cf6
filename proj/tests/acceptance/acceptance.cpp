// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance --data DIR [--workers N] [--expect-fail 2,...] [--artifacts DIR]
//
// Exits nonzero when a criterion outside the --expect-fail list fails.
// --artifacts keeps the files behind criteria 5-7 for schema validation.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jointplan/io.hpp"
#include "jointplan/learning.hpp"
#include "jointplan/planner.hpp"
#include "jointplan/sampler.hpp"
#include "jointplan/simulator.hpp"
#include "support/oracles.hpp"

using namespace jointplan;

namespace {

std::filesystem::path artifacts;

void keep(const std::filesystem::path& rel, const std::string& content) {
  if (!artifacts.empty()) io::write_file(artifacts / rel, content);
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

// Largest TV over all marginals and, where edges say so, pair beliefs.
double worst_tv(const MarginalSet& ms, const oracle::Joint& joint, const EnergyTables* edges_of,
                bool pairs = true) {
  const std::size_t n = ms.num_actors;
  const std::size_t k = ms.num_candidates;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(k), q(k);
    for (std::size_t a = 0; a < k; ++a) {
      p[a] = ms.marginal(i, a);
      q[a] = joint.marginal(i, a);
    }
    worst = std::max(worst, oracle::total_variation(p, q));
    for (std::size_t j = i + 1; pairs && j < n; ++j) {
      if (edges_of) {
        bool edge = false;
        for (std::size_t a = 0; a < k && !edge; ++a) {
          for (std::size_t b = 0; b < k && !edge; ++b) edge = edges_of->p(i, j, a, b) != 0.0 || edges_of->p(j, i, b, a) != 0.0;
        }
        if (!edge) continue;
      }
      std::vector<double> pp, qq;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          pp.push_back(ms.pair(i, j, a, b));
          qq.push_back(joint.pair(i, j, a, b));
        }
      }
      worst = std::max(worst, oracle::total_variation(pp, qq));
    }
  }
  return worst;
}

Verdict tree_exactness() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> actors(2, 5);
  std::uniform_int_distribution<std::size_t> cands(2, 6);
  const LbpConfig tight{1000, 0.5, 1e-15, false};
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const auto t = oracle::random_tree_tables(rng, {.actors = actors(rng), .candidates = cands(rng), .collision_fraction = 0.1});
    worst = std::max(worst, worst_tv(lbp(t, tight), oracle::enumerate(t), &t));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-9 && secs < 10.0, fmt("50 trees, worst TV %.2e (edges only for pairs), %.2f s", worst, secs)};
}

Verdict loopy_quality() {
  std::mt19937_64 rng(1002);
  int converged = 0;
  int accurate = 0;
  double worst = 0.0;
  double sum = 0.0;
  double pair_sum = 0.0;
  for (int c = 0; c < 50; ++c) {
    const auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 4, .collision_fraction = 0.1});
    const auto ms = lbp(t, {});
    if (!ms.converged || ms.iters_used > 50) continue;
    ++converged;
    const auto joint = oracle::enumerate(t);
    const double tv = worst_tv(ms, joint, nullptr, false);
    worst = std::max(worst, tv);
    sum += tv;
    pair_sum += worst_tv(ms, joint, nullptr);
    accurate += tv <= 2e-2 ? 1 : 0;
  }
  const double m = std::max(converged, 1);
  const bool pass = converged >= 45 && accurate == converged;
  return {pass, fmt("converged %d/50; marginals within 2e-2 TV %d/%d, mean %.3f, worst %.3f (with pair beliefs: "
                    "mean %.3f)",
                    converged, accurate, converged, sum / m, worst, pair_sum / m)};
}

Verdict objective_equivalence() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  double worst = 0.0;
  int argmin_miss = 0;
  for (int c = 0; c < 50; ++c) {
    const auto t = oracle::random_tables(rng, {.actors = 3, .candidates = 4, .collision_fraction = 0.1});
    const auto ms = exact_marginals(t);
    const auto joint = oracle::enumerate(t);
    const CostWeights w{weight(rng), weight(rng), weight(rng)};
    std::vector<double> ours, brute;
    for (std::size_t a = 0; a < 4; ++a) {
      const std::size_t set[] = {a};
      worst = std::max(worst, std::abs(reactive_objective(t, ms, a, w, 0.0) -
                                       oracle::brute_force_objective(t, joint, a, set, w, true)));
      ours.push_back(nonreactive_objective(t, ms, a, w));
      brute.push_back(oracle::brute_force_nonreactive(t, joint, a, w));
    }
    argmin_miss += argmin(ours) != argmin(brute) ? 1 : 0;
  }
  return {worst <= 1e-9 && argmin_miss == 0,
          fmt("50 instances, reactive max |diff| %.2e, non-reactive argmin mismatches %d", worst, argmin_miss)};
}

Verdict interpolation_endpoints() {
  std::mt19937_64 rng(1004);
  int failures = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t k = 6;
    const auto t = oracle::random_tables(rng, {.actors = 4, .candidates = k, .collision_fraction = 0.1});
    SamplerConfig sc;
    sc.num_candidates = k;
    sc.horizon_steps = 6;
    sc.seed = rng();
    const auto cands = sample_candidates({Pose2(), 8.0}, sc);
    PlannerConfig p;
    p.weights = {1.0, 0.1, 1.0};
    const auto reactive = plan(cands, t, p);
    p.variant = PlannerVariant::Interpolated;
    p.set_size = 1;
    const auto one = plan(cands, t, p);
    p.set_size = k;
    const auto all = plan(cands, t, p);
    p.variant = PlannerVariant::NonReactive;
    const auto nonreactive = plan(cands, t, p);
    if (one.objective_values != reactive.objective_values) ++failures;
    if (argmin(all.objective_values) != argmin(nonreactive.objective_values)) ++failures;
  }
  return {failures == 0, fmt("100 instances, %d failures", failures)};
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0;
  for (double x : b) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) worst = std::max(worst, std::abs(a[q] - b[q]) / std::max(scale, 1e-8));
  return worst;
}

std::vector<PreparedExample> prepared(std::size_t count, std::uint64_t seed, const SamplerConfig& sampler) {
  SyntheticDatasetOptions opt;
  opt.num_examples = count;
  opt.seed = seed;
  opt.horizon_steps = sampler.horizon_steps;
  std::vector<PreparedExample> out;
  for (const auto& ex : synthesize_dataset(opt)) out.push_back(prepare_example(ex, sampler, EnergyParams{}, 2));
  return out;
}

double held_out_top1(const EnergyParams& params, const std::vector<PreparedExample>& data, const LbpConfig& cfg) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& ex : data) {
    const auto ms = lbp(ex.tables(params), cfg);
    for (std::size_t i = 0; i < ex.num_actors; ++i) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < ex.num_candidates; ++a) {
        if (ms.marginal(i, a) > ms.marginal(i, best)) best = a;
      }
      hits += best == ex.labels.gt[i] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

Verdict training() {
  SamplerConfig small;
  small.num_candidates = 6;
  small.horizon_steps = 11;
  std::mt19937_64 rng(1005);
  std::normal_distribution<double> g(0.0, 0.3);
  const LbpConfig unrolled{10, 0.5, 1e-6, true};
  double fd_worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto one = prepared(1, 500 + c, small);
    EnergyParams p;
    for (double& w : p.w_ego) w = g(rng);
    for (double& w : p.w_actor) w = g(rng);
    fd_worst = std::max(fd_worst, relative_error(gradient(p, one, unrolled), oracle::fd_gradient(p, one, unrolled, {})));
  }

  const SamplerConfig sampler;
  const auto train_set = prepared(200, 7, sampler);
  const auto held_out = prepared(100, 8, sampler);
  const TrainOptions opt;
  const auto r = train(EnergyParams{}, train_set, opt);
  keep("train/params.json", io::energy_params_to_json(r.params));
  keep("train/loss.csv", io::loss_curve_csv(r.loss_curve));
  const double reduction = 1.0 - r.loss_curve.back() / r.loss_curve.front();
  const double top1 = held_out_top1(r.params, held_out, opt.lbp);
  const double chance3 = 3.0 / static_cast<double>(sampler.num_candidates);
  return {fd_worst < 1e-4 && reduction >= 0.5 && top1 > chance3,
          fmt("FD rel err %.1e over 20; loss %.3f -> %.3f (%.0f%% reduction); held-out top-1 %.3f vs 3/K %.3f",
              fd_worst, r.loss_curve.front(), r.loss_curve.back(), 100.0 * reduction, top1, chance3)};
}

struct SuiteRun {
  std::vector<Scenario> templates;
  io::RunConfig cfg;
};

SuiteResult run(const SuiteRun& s, PlannerVariant v, double lambda_b, std::size_t n_variants, bool traces) {
  io::VariantSpec spec;
  spec.variant = v;
  EnergyParams energy = s.cfg.energy;
  energy.lambda_b = lambda_b;
  PlannerConfig p = s.cfg.planner(spec);
  p.weights = cost_weights(energy);
  SuiteOptions opt;
  opt.workers = s.cfg.workers;
  opt.record_trace = traces;
  return run_suite(s.templates, n_variants, p, energy, s.cfg.seed, opt);
}

SuiteAggregates run(const SuiteRun& s, PlannerVariant v, double lambda_b) {
  const SuiteResult r = run(s, v, lambda_b, s.cfg.n_variants, false);
  const std::string label = to_string(v) + fmt("_lambda%.2f", lambda_b);
  keep("suite" / std::filesystem::path(label) / "aggregates.json", io::aggregates_json(r, label));
  keep("suite" / std::filesystem::path(label) / "episodes.csv", io::episodes_csv(r, s.templates));
  return r.aggregates;
}

std::array<Verdict, 2> closed_loop(const std::filesystem::path& data, std::size_t workers) {
  SuiteRun s;
  s.cfg = io::load_run_config(data / "configs" / "suite.json");
  s.cfg.workers = workers;
  s.templates = io::load_scenarios(s.cfg.scenario_dir, s.cfg.sampler);
  const double lambda = s.cfg.energy.lambda_b;

  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(s, PlannerVariant::Reactive, lambda);
  const auto nr = run(s, PlannerVariant::NonReactive, lambda);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::vector<std::pair<std::string, SuiteAggregates>> rows{{"reactive", r}, {"nonreactive", nr}};
  keep("suite/aggregates.csv", io::aggregates_csv(rows));
  keep("suite/comparison.csv", io::comparison_csv(rows));
  if (!artifacts.empty()) {
    // one traced variant per template keeps the trace files small
    const SuiteResult traced = run(s, PlannerVariant::Reactive, lambda, 1, true);
    for (const SuiteEntry& e : traced.entries) {
      keep("suite/traces" / std::filesystem::path(s.templates[e.template_id].name + ".jsonl"), io::trace_jsonl(e.result));
    }
  }
  Verdict six;
  six.pass = r.success_rate >= nr.success_rate + 10.0 && r.mean_ttc < nr.mean_ttc &&
             r.collision_rate <= nr.collision_rate + 1.0 && secs < 600.0;
  six.detail = fmt(
      "%zu templates x %zu variants; success %.1f vs %.1f; TTC %.2f vs %.2f; CR %.1f vs %.1f (reactive vs "
      "non-reactive, %.0f s)",
      s.templates.size(), s.cfg.n_variants, r.success_rate, nr.success_rate, r.mean_ttc, nr.mean_ttc,
      r.collision_rate, nr.collision_rate, secs);

  const auto half = run(s, PlannerVariant::Reactive, lambda / 2.0);
  const auto quarter = run(s, PlannerVariant::Reactive, lambda / 4.0);
  Verdict seven;
  seven.pass = r.collision_rate <= half.collision_rate && half.collision_rate <= quarter.collision_rate &&
               quarter.collision_rate > r.collision_rate;
  seven.detail = fmt("reactive CR at lambda_b %.2f, %.2f, %.2f: %.1f, %.1f, %.1f", lambda, lambda / 2.0,
                     lambda / 4.0, r.collision_rate, half.collision_rate, quarter.collision_rate);
  return {six, seven};
}

Verdict sampler_and_properties() {
  std::string failures;
  SamplerConfig cfg;
  cfg.seed = 1006;
  constexpr std::size_t kDraws = 100000;
  std::array<std::size_t, 3> counts{};
  for (std::size_t i = 1; i <= kDraws; ++i) {
    switch (draw_motion(cfg, i).mode) {
      case MotionMode::Line:
        ++counts[0];
        break;
      case MotionMode::Circle:
        ++counts[1];
        break;
      case MotionMode::Spiral:
        ++counts[2];
        break;
      case MotionMode::Stationary:
        break;
    }
  }
  std::string freq;
  bool modes_ok = true;
  for (std::size_t m = 0; m < 3; ++m) {
    const double p = cfg.mode_probs[m];
    const double se = std::sqrt(p * (1.0 - p) / kDraws);
    const double f = static_cast<double>(counts[m]) / kDraws;
    modes_ok = modes_ok && std::abs(f - p) <= 3.0 * se;
    freq += fmt("%s%.4f", m ? "/" : "", f);
  }

  std::mt19937_64 rng(1007);
  std::uniform_int_distribution<std::size_t> actors(1, 5);
  std::uniform_int_distribution<std::size_t> cands(1, 6);
  std::uniform_real_distribution<double> frac(0.0, 0.2);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  int bad[4] = {};
  constexpr int kCases = 1000;
  for (int c = 0; c < kCases; ++c) {
    oracle::RandomTableOptions shape{.actors = actors(rng), .candidates = cands(rng), .collision_fraction = frac(rng)};
    shape.nonnegative_pairwise = true;
    auto t = oracle::random_tables(rng, shape);
    const auto ms = lbp(t, {});
    const std::size_t n = ms.num_actors;
    const std::size_t k = ms.num_candidates;
    bool norm = true;
    bool sym = true;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t a = 0; a < k; ++a) row += ms.marginal(i, a);
      norm = norm && std::abs(row - 1.0) < 1e-9;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double total = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = 0; b < k; ++b) {
            sym = sym && ms.pair(i, j, a, b) == ms.pair(j, i, b, a);
            total += ms.pair(i, j, a, b);
          }
        }
        norm = norm && std::abs(total - 1.0) < 1e-9;
      }
    }
    if (n > 1) {
      const auto cond = conditional_marginals(ms, static_cast<std::size_t>(c) % k, 0.0);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        norm = norm && std::abs(std::accumulate(cond.begin() + i * k, cond.begin() + (i + 1) * k, 0.0) - 1.0) < 1e-9;
      }
    }
    bad[0] += norm ? 0 : 1;
    bad[1] += sym ? 0 : 1;

    SamplerConfig sc;
    sc.num_candidates = k;
    sc.horizon_steps = 4;
    sc.seed = rng();
    const auto ego = sample_candidates({Pose2(), 6.0}, sc);
    PlannerConfig p;
    p.variant = static_cast<PlannerVariant>(c % 3);
    p.set_size = 1 + static_cast<std::size_t>(c) % k;
    const auto first = plan(ego, t, p);
    const auto again = plan(ego, t, p);
    bad[2] += first.chosen == again.chosen && first.objective_values == again.objective_values ? 0 : 1;
    const double d = shift(rng);
    for (std::size_t a = 0; a < k; ++a) t.u(0, a) += d;
    bad[3] += plan(ego, t, p).chosen == first.chosen ? 0 : 1;
  }
  const bool props_ok = bad[0] == 0 && bad[1] == 0 && bad[2] == 0 && bad[3] == 0;
  return {modes_ok && props_ok,
          fmt("mode frequencies %s over 1e5 draws; %d cases, failures: normalization %d, symmetry %d, determinism "
              "%d, shift invariance %d",
              freq.c_str(), kCases, bad[0], bad[1], bad[2], bad[3])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string data;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<int> expect_fail;
  app.add_option("--data", data, "Shipped data directory")->required()->check(CLI::ExistingDirectory);
  app.add_option("--workers", workers, "Parallel episodes for the closed-loop suite");
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail")->delimiter(',');
  std::string artifact_dir;
  app.add_option("--artifacts", artifact_dir, "Keep generated files here");
  CLI11_PARSE(app, argc, argv);
  artifacts = artifact_dir;
  if (!artifacts.empty()) std::filesystem::remove_all(artifacts);

  std::vector<std::pair<int, std::function<Verdict()>>> checks{
      {1, tree_exactness},
      {2, loopy_quality},
      {3, objective_equivalence},
      {4, interpolation_endpoints},
      {5, training},
  };
  std::array<Verdict, 2> loop;
  checks.emplace_back(6, [&] {
    loop = closed_loop(data, workers);
    return loop[0];
  });
  checks.emplace_back(7, [&] { return loop[1]; });
  checks.emplace_back(8, sampler_and_properties);

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  int unexpected = 0;
  for (const auto& [id, check] : checks) {
    Verdict o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail;
    if (!o.pass && expected.count(id)) std::cout << "  [expected]";
    if (o.pass && expected.count(id)) std::cout << "  [listed as expected failure]";
    std::cout << std::endl;
    if (!o.pass && !expected.count(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
