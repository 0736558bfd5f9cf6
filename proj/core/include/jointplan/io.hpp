#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointplan/energy.hpp"
#include "jointplan/inference.hpp"
#include "jointplan/learning.hpp"
#include "jointplan/planner.hpp"
#include "jointplan/sampler.hpp"
#include "jointplan/simulator.hpp"

// Serialization of every file the tools read or write. JSON parsing errors
// and schema violations raise ParseError; file access errors raise
// InvalidArgument.
namespace jointplan::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Fields absent from the JSON keep the value in `base`; unknown keys throw.
SamplerConfig sampler_from_json(const std::string& text, const SamplerConfig& base = {});
std::string sampler_to_json(const SamplerConfig& cfg);
EnergyParams energy_params_from_json(const std::string& text, const EnergyParams& base = {});
std::string energy_params_to_json(const EnergyParams& params);
LbpConfig lbp_from_json(const std::string& text, const LbpConfig& base = {});
std::string lbp_to_json(const LbpConfig& cfg);

// A planner variant as named on the command line and in config files:
// "reactive", "nonreactive" or "interpolated-<k>".
struct VariantSpec {
  PlannerVariant variant = PlannerVariant::Reactive;
  std::size_t set_size = 1;

  std::string label() const;
  bool operator==(const VariantSpec&) const = default;
};
VariantSpec parse_variant_spec(const std::string& label);

struct RunConfig {
  std::string scenario_dir;
  std::string dataset;
  std::string output_dir = "out";
  std::string params_path;  // fitted EnergyParams; overrides `energy` when set
  std::vector<VariantSpec> variants = {VariantSpec{}};
  double condition_eps = 0.0;
  SamplerConfig sampler;
  EnergyParams energy;
  LbpConfig lbp;
  TrainOptions train;
  std::size_t k_ignore = 2;
  std::size_t n_variants = 50;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  // Planner settings for one variant, with weights taken from `energy`.
  PlannerConfig planner(const VariantSpec& v) const;
  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
// Relative paths in the file resolve against its directory; params_path is
// loaded into `energy`, under any keys the config's energy section sets.
// Referenced paths must exist.
RunConfig load_run_config(const std::filesystem::path& path);

// `default_sampler` supplies every sampler field the scenario file omits.
Scenario scenario_from_json(const std::string& text, const SamplerConfig& default_sampler = {});
std::string scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path, const SamplerConfig& default_sampler = {});
// Every *.json in dir, ordered by file name.
std::vector<Scenario> load_scenarios(const std::filesystem::path& dir, const SamplerConfig& default_sampler = {});

std::string plan_result_to_json(const PlanResult& r);
std::string tables_to_json(const EnergyTables& t);

// candidate,t,x,y,heading,speed
std::string candidates_csv(std::span<const Trajectory> candidates);
// actor,candidate,probability
std::string marginals_csv(const MarginalSet& ms);
// iteration,residual
std::string residuals_csv(const MarginalSet& ms);
// "JPPB", uint32 N+1, uint32 K, then pairwise beliefs as little-endian
// float64 in [i][j][a][b] order.
std::string pairwise_binary(const MarginalSet& ms);

// One example per line.
std::vector<TrainingExample> dataset_from_jsonl(const std::string& text);
std::string dataset_to_jsonl(std::span<const TrainingExample> examples);
// epoch,loss
std::string loss_curve_csv(std::span<const double> curve);

// One record per simulated step.
std::string trace_jsonl(const EpisodeResult& r);
std::string episode_summary_json(const EpisodeResult& r);
std::string aggregates_json(const SuiteResult& suite, const std::string& variant);
// variant,episodes,success_pct,mean_ttc_s,mean_goal_m,collision_pct,mean_brake
std::string aggregates_csv(std::span<const std::pair<std::string, SuiteAggregates>> rows);
// template,variant_id,seed,outcome,success,ttc_s,goal_m,collision,brake_events,actor_collisions
std::string episodes_csv(const SuiteResult& suite, std::span<const Scenario> templates);
// Planner,Succ (%),TTC (s),Goal (m),CR (%),Brake
std::string comparison_csv(std::span<const std::pair<std::string, SuiteAggregates>> rows);

}  // namespace jointplan::io
