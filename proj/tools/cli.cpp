#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include "jointplan/errors.hpp"
#include "jointplan/io.hpp"

namespace jointplan::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
};

io::RunConfig load_config(const Globals& g) {
  io::RunConfig cfg = g.config.empty() ? io::RunConfig{} : io::load_run_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.workers) cfg.workers = *g.workers;
  cfg.validate();
  return cfg;
}

// "ego", an actor name, or an index where 0 is the ego.
std::size_t resolve_actor(const Scenario& s, const std::string& id) {
  if (id == "ego") return 0;
  for (std::size_t i = 0; i < s.actors.size(); ++i) {
    if (s.actors[i].name == id) return i + 1;
  }
  if (!id.empty() && std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const std::size_t i = std::stoul(id);
    if (i <= s.actors.size()) return i;
  }
  throw InvalidArgument("unknown actor '" + id + "' in scenario '" + s.name + "'");
}

std::string actor_label(const Scenario& s, std::size_t i) {
  if (i == 0) return "ego";
  return s.actors[i - 1].name.empty() ? std::to_string(i) : s.actors[i - 1].name;
}

EnergyTables scene_tables(const Scenario& s, const io::RunConfig& cfg, std::vector<ActorContext>& scene) {
  scene = initial_scene(s, cfg.seed);
  return build_tables(scene, scenario_goal(s), cfg.energy);
}

int cmd_sample(const io::RunConfig& cfg, const std::string& scenario_path, const std::string& actor, std::ostream& out) {
  const Scenario s = io::load_scenario(scenario_path, cfg.sampler);
  const std::size_t idx = resolve_actor(s, actor);
  const auto scene = initial_scene(s, cfg.seed);
  const fs::path path = fs::path(cfg.output_dir) / ("candidates_" + actor_label(s, idx) + ".csv");
  io::write_file(path, io::candidates_csv(scene[idx].candidates));
  out << "wrote " << scene[idx].candidates.size() << " candidates to " << path.string() << "\n";
  return kOk;
}

int cmd_infer(const io::RunConfig& cfg, const std::string& scenario_path, bool pairwise, std::ostream& out) {
  const Scenario s = io::load_scenario(scenario_path, cfg.sampler);
  std::vector<ActorContext> scene;
  const EnergyTables tables = scene_tables(s, cfg, scene);
  const MarginalSet ms = lbp(tables, cfg.lbp);
  const fs::path dir(cfg.output_dir);
  io::write_file(dir / "marginals.csv", io::marginals_csv(ms));
  io::write_file(dir / "residuals.csv", io::residuals_csv(ms));
  if (pairwise) io::write_file(dir / "pairwise.bin", io::pairwise_binary(ms));
  out << "lbp " << (ms.converged ? "converged" : "did not converge") << " after " << ms.iters_used
      << " iterations; final residual " << (ms.residuals.empty() ? 0.0 : ms.residuals.back()) << "\n";
  return kOk;
}

int cmd_plan(const io::RunConfig& cfg, const std::string& scenario_path, const std::string& variant,
             std::ostream& out) {
  const Scenario s = io::load_scenario(scenario_path, cfg.sampler);
  const io::VariantSpec v = variant.empty() ? cfg.variants.front() : io::parse_variant_spec(variant);
  std::vector<ActorContext> scene;
  const EnergyTables tables = scene_tables(s, cfg, scene);
  const PlanResult r = plan(scene[0].candidates, tables, cfg.planner(v));
  const fs::path path = fs::path(cfg.output_dir) / "plan.json";
  io::write_file(path, io::plan_result_to_json(r));
  out << v.label() << ": chosen candidate " << r.chosen << " (cost " << r.objective_values[r.chosen] << ")\n";
  return kOk;
}

int cmd_train(io::RunConfig cfg, const std::string& dataset, std::ostream& out) {
  if (!dataset.empty()) cfg.dataset = dataset;
  if (cfg.dataset.empty()) throw InvalidArgument("train: no dataset given");
  const auto examples = io::dataset_from_jsonl(io::read_file(cfg.dataset));
  if (examples.empty()) throw InvalidArgument("train: dataset is empty");
  std::vector<PreparedExample> prepared;
  prepared.reserve(examples.size());
  for (const TrainingExample& ex : examples) prepared.push_back(prepare_example(ex, cfg.sampler, cfg.energy, cfg.k_ignore));
  const TrainResult r = train(cfg.energy, prepared, cfg.train);
  const fs::path dir(cfg.output_dir);
  io::write_file(dir / "params.json", io::energy_params_to_json(r.params));
  io::write_file(dir / "loss.csv", io::loss_curve_csv(r.loss_curve));
  out << "loss " << r.loss_curve.front() << " -> " << r.loss_curve.back() << " over " << cfg.train.epochs
      << " epochs\n";
  return kOk;
}

struct SimulateArgs {
  std::string scenarios;
  std::vector<std::string> variants;
  std::optional<std::size_t> n_variants;
  bool traces = true;
};

int cmd_simulate(io::RunConfig cfg, const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  if (!args.scenarios.empty()) cfg.scenario_dir = args.scenarios;
  if (cfg.scenario_dir.empty()) throw InvalidArgument("simulate: no scenario directory given");
  if (!args.variants.empty()) {
    cfg.variants.clear();
    for (const std::string& v : args.variants) cfg.variants.push_back(io::parse_variant_spec(v));
  }
  if (args.n_variants) cfg.n_variants = *args.n_variants;
  const std::vector<Scenario> templates = io::load_scenarios(cfg.scenario_dir, cfg.sampler);
  if (templates.empty()) throw InvalidArgument("simulate: no scenarios in " + cfg.scenario_dir);

  const fs::path dir(cfg.output_dir);
  std::vector<std::pair<std::string, SuiteAggregates>> rows;
  bool any_episode = false;
  for (const io::VariantSpec& v : cfg.variants) {
    const std::string label = v.label();
    SuiteOptions opt;
    opt.workers = cfg.workers;
    opt.record_trace = args.traces;
    const SuiteResult suite = run_suite(templates, cfg.n_variants, cfg.planner(v), cfg.energy, cfg.seed, opt);
    for (const SkippedEpisode& s : suite.skipped) {
      err << "skipped " << templates[s.template_id].name << " variant " << s.variant_id << ": " << s.reason << "\n";
    }
    any_episode = any_episode || !suite.entries.empty();
    io::write_file(dir / label / "aggregates.json", io::aggregates_json(suite, label));
    io::write_file(dir / label / "episodes.csv", io::episodes_csv(suite, templates));
    if (args.traces) {
      for (const SuiteEntry& e : suite.entries) {
        const std::string stem = templates[e.template_id].name + "_" + std::to_string(e.variant_id);
        io::write_file(dir / label / "traces" / (stem + ".jsonl"), io::trace_jsonl(e.result));
      }
    }
    rows.emplace_back(label, suite.aggregates);
    out << label << ": " << suite.aggregates.episodes << " episodes, success " << suite.aggregates.success_rate
        << "%, collisions " << suite.aggregates.collision_rate << "%\n";
  }
  io::write_file(dir / "aggregates.csv", io::aggregates_csv(rows));
  if (rows.size() > 1) io::write_file(dir / "comparison.csv", io::comparison_csv(rows));
  if (!any_episode) {
    err << "every episode was skipped\n";
    return kEmptySuite;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint prediction and planning with reactive cost evaluation", "jointplan"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Seed overriding the config");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Parallel episodes for simulate")->check(CLI::PositiveNumber);

  std::string scenario;
  std::string actor = "ego";
  auto* sample = app.add_subcommand("sample", "Dump one vehicle's candidate trajectories");
  sample->add_option("--scenario", scenario, "Scenario file")->required();
  sample->add_option("--actor", actor, "ego, actor name or index");

  bool pairwise = false;
  auto* infer = app.add_subcommand("infer", "Run LBP on the initial scene");
  infer->add_option("--scenario", scenario, "Scenario file")->required();
  infer->add_flag("--pairwise", pairwise, "Also write pairwise beliefs (binary)");

  std::string variant;
  auto* plan_cmd = app.add_subcommand("plan", "Plan once from the initial scene");
  plan_cmd->add_option("--scenario", scenario, "Scenario file")->required();
  plan_cmd->add_option("--variant", variant, "reactive, nonreactive or interpolated-<k>");

  std::string dataset;
  auto* train_cmd = app.add_subcommand("train", "Fit the unary weights");
  train_cmd->add_option("--dataset", dataset, "Training examples (JSONL)");

  SimulateArgs sim;
  bool no_traces = false;
  auto* simulate = app.add_subcommand("simulate", "Run the closed-loop suite");
  simulate->add_option("--scenarios", sim.scenarios, "Directory of scenario templates");
  simulate->add_option("--variant", sim.variants, "Planner variants (repeatable)");
  simulate->add_option("--n-variants", sim.n_variants, "Perturbed variants per template");
  simulate->add_flag("--no-traces", no_traces, "Skip per-episode traces");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    const io::RunConfig cfg = load_config(g);
    if (*sample) return cmd_sample(cfg, scenario, actor, out);
    if (*infer) return cmd_infer(cfg, scenario, pairwise, out);
    if (*plan_cmd) return cmd_plan(cfg, scenario, variant, out);
    if (*train_cmd) return cmd_train(cfg, dataset, out);
    sim.traces = !no_traces;
    return cmd_simulate(cfg, sim, out, err);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const NumericalFailure& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace jointplan::cli
