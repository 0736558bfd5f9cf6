#include "jointplan/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "jointplan/errors.hpp"
#include "json.hpp"

namespace jointplan::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) { throw ParseError(ctx + ": " + msg); }

json parse(const std::string& text, const std::string& ctx) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ctx, e.what());
  }
}

template <class T>
T as(const json& v, const std::string& ctx) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(ctx, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) fail(ctx, "expected a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(ctx, "expected a nonnegative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(ctx, "expected a number");
  }
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    fail(ctx, e.what());
  }
}

// Object accessor that remembers which keys were consumed so leftovers can
// be reported as unknown.
class Fields {
 public:
  Fields(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) fail(ctx_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const std::string& ctx() const { return ctx_; }
  std::string sub(const std::string& key) const { return ctx_ + "." + key; }

  const json& at(const std::string& key) {
    if (!has(key)) fail(ctx_, "missing '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }
  template <class T>
  T req(const std::string& key) {
    return as<T>(at(key), sub(key));
  }
  template <class T>
  void opt(const std::string& key, T& out) {
    if (has(key)) out = as<T>(at(key), sub(key));
  }
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) fail(ctx_, "unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> used_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Vec2 vec2_from(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2) fail(ctx, "expected [x, y]");
  return {as<double>(v[0], ctx), as<double>(v[1], ctx)};
}

Polyline polyline_from(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail(ctx, "expected a list of points");
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < v.size(); ++i) pts.push_back(vec2_from(v[i], ctx + "[" + std::to_string(i) + "]"));
  try {
    return Polyline(std::move(pts));
  } catch (const InvalidArgument& e) {
    fail(ctx, e.what());
  }
}

json polyline_json(const Polyline& line) {
  json out = json::array();
  for (const Vec2& p : line.points()) out.push_back({p.x, p.y});
  return out;
}

Interval interval_from(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2) fail(ctx, "expected [lo, hi]");
  return {as<double>(v[0], ctx), as<double>(v[1], ctx)};
}

std::vector<double> doubles_from(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail(ctx, "expected a list of numbers");
  std::vector<double> out;
  for (const json& x : v) out.push_back(as<double>(x, ctx));
  return out;
}

void read_sampler(Fields& f, SamplerConfig& c) {
  f.opt("num_candidates", c.num_candidates);
  f.opt("horizon_steps", c.horizon_steps);
  f.opt("dt", c.dt);
  if (f.has("mode_probs")) {
    const std::vector<double> p = doubles_from(f.at("mode_probs"), f.sub("mode_probs"));
    if (p.size() != 3) fail(f.sub("mode_probs"), "expected three probabilities");
    std::copy(p.begin(), p.end(), c.mode_probs.begin());
  }
  if (f.has("accel")) c.accel = interval_from(f.at("accel"), f.sub("accel"));
  if (f.has("curvature")) c.curvature = interval_from(f.at("curvature"), f.sub("curvature"));
  if (f.has("spiral_rate")) c.spiral_rate = interval_from(f.at("spiral_rate"), f.sub("spiral_rate"));
  f.opt("max_speed", c.max_speed);
  f.opt("stop_decel", c.stop_decel);
  f.opt("seed", c.seed);
  f.finish();
}

json sampler_json(const SamplerConfig& c) {
  return {{"num_candidates", c.num_candidates},
          {"horizon_steps", c.horizon_steps},
          {"dt", c.dt},
          {"mode_probs", c.mode_probs},
          {"accel", {c.accel.lo, c.accel.hi}},
          {"curvature", {c.curvature.lo, c.curvature.hi}},
          {"spiral_rate", {c.spiral_rate.lo, c.spiral_rate.hi}},
          {"max_speed", c.max_speed},
          {"stop_decel", c.stop_decel},
          {"seed", c.seed}};
}

void read_energy(Fields& f, EnergyParams& p) {
  if (f.has("w_ego")) p.w_ego = doubles_from(f.at("w_ego"), f.sub("w_ego"));
  if (f.has("w_actor")) p.w_actor = doubles_from(f.at("w_actor"), f.sub("w_actor"));
  f.opt("gamma", p.gamma);
  f.opt("d_safe", p.d_safe);
  f.opt("lambda_b", p.lambda_b);
  f.opt("lambda_c", p.lambda_c);
  f.opt("w_goal", p.w_goal);
  f.finish();
}

json energy_json(const EnergyParams& p) {
  return {{"w_ego", p.w_ego},   {"w_actor", p.w_actor},   {"gamma", p.gamma}, {"d_safe", p.d_safe},
          {"lambda_b", p.lambda_b}, {"lambda_c", p.lambda_c}, {"w_goal", p.w_goal}};
}

void read_lbp(Fields& f, LbpConfig& c) {
  f.opt("max_iters", c.max_iters);
  f.opt("damping", c.damping);
  f.opt("tol", c.tol);
  f.opt("fixed_iterations", c.fixed_iterations);
  f.finish();
}

json lbp_json(const LbpConfig& c) {
  return {{"max_iters", c.max_iters}, {"damping", c.damping}, {"tol", c.tol}, {"fixed_iterations", c.fixed_iterations}};
}

template <class T, class Reader>
T from_text(const std::string& text, const T& base, const std::string& ctx, Reader read) {
  const json j = parse(text, ctx);
  Fields f(j, ctx);
  T out = base;
  read(f, out);
  return out;
}

void wrap_validation(const std::string& ctx, const auto& fn) {
  try {
    fn();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidScenario&) {
    throw;
  } catch (const Error& e) {
    fail(ctx, e.what());
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

SamplerConfig sampler_from_json(const std::string& text, const SamplerConfig& base) {
  SamplerConfig c = from_text(text, base, "sampler", read_sampler);
  wrap_validation("sampler", [&] { c.validate(); });
  return c;
}
std::string sampler_to_json(const SamplerConfig& cfg) { return sampler_json(cfg).dump(2) + "\n"; }

EnergyParams energy_params_from_json(const std::string& text, const EnergyParams& base) {
  EnergyParams p = from_text(text, base, "energy", read_energy);
  wrap_validation("energy", [&] { p.validate(); });
  return p;
}
std::string energy_params_to_json(const EnergyParams& params) { return energy_json(params).dump(2) + "\n"; }

LbpConfig lbp_from_json(const std::string& text, const LbpConfig& base) {
  LbpConfig c = from_text(text, base, "lbp", read_lbp);
  wrap_validation("lbp", [&] { c.validate(); });
  return c;
}
std::string lbp_to_json(const LbpConfig& cfg) { return lbp_json(cfg).dump(2) + "\n"; }

std::string VariantSpec::label() const {
  if (variant == PlannerVariant::Interpolated) return "interpolated-" + std::to_string(set_size);
  return to_string(variant);
}

VariantSpec parse_variant_spec(const std::string& label) {
  const std::string prefix = "interpolated-";
  if (label.rfind(prefix, 0) == 0) {
    const std::string digits = label.substr(prefix.size());
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw InvalidArgument("bad interpolated set size in '" + label + "'");
    }
    return {PlannerVariant::Interpolated, std::stoul(digits)};
  }
  const PlannerVariant v = parse_variant(label);
  if (v == PlannerVariant::Interpolated) throw InvalidArgument("interpolated variant needs a set size: interpolated-<k>");
  return {v, 1};
}

PlannerConfig RunConfig::planner(const VariantSpec& v) const {
  PlannerConfig p;
  p.variant = v.variant;
  p.set_size = v.set_size;
  p.weights = cost_weights(energy);
  p.lbp = lbp;
  p.condition_eps = condition_eps;
  return p;
}

void RunConfig::validate() const {
  sampler.validate();
  energy.validate();
  lbp.validate();
  train.lbp.validate();
  if (variants.empty()) throw InvalidArgument("at least one planner variant is required");
  for (const VariantSpec& v : variants) planner(v).validate(sampler.num_candidates);
  if (n_variants < 1) throw InvalidArgument("n_variants must be >= 1");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (!(condition_eps >= 0.0)) throw InvalidArgument("condition_eps must be >= 0");
  if (!(train.learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
  if (!(train.loss.clip > 0.0)) throw InvalidArgument("loss clip must be positive");
}

namespace {

RunConfig run_config_from(const json& j) {
  RunConfig c;
  Fields f(j, "config");
  if (f.has("paths")) {
    Fields p(f.at("paths"), "config.paths");
    p.opt("scenario_dir", c.scenario_dir);
    p.opt("dataset", c.dataset);
    p.opt("output_dir", c.output_dir);
    p.opt("params", c.params_path);
    p.finish();
  }
  if (f.has("planner")) {
    Fields p(f.at("planner"), "config.planner");
    if (p.has("variants")) {
      const json& vs = p.at("variants");
      if (!vs.is_array()) fail(p.sub("variants"), "expected a list");
      c.variants.clear();
      for (const json& v : vs) {
        try {
          c.variants.push_back(parse_variant_spec(as<std::string>(v, p.sub("variants"))));
        } catch (const InvalidArgument& e) {
          fail(p.sub("variants"), e.what());
        }
      }
    }
    p.opt("condition_eps", c.condition_eps);
    p.finish();
  }
  if (f.has("sampler")) {
    Fields s(f.at("sampler"), "config.sampler");
    read_sampler(s, c.sampler);
  }
  if (f.has("energy")) {
    Fields e(f.at("energy"), "config.energy");
    read_energy(e, c.energy);
  }
  if (f.has("lbp")) {
    Fields l(f.at("lbp"), "config.lbp");
    read_lbp(l, c.lbp);
  }
  if (f.has("train")) {
    Fields t(f.at("train"), "config.train");
    t.opt("learning_rate", c.train.learning_rate);
    t.opt("epochs", c.train.epochs);
    t.opt("k_ignore", c.k_ignore);
    t.opt("renormalize_complement", c.train.loss.renormalize_complement);
    t.opt("clip", c.train.loss.clip);
    if (t.has("lbp")) {
      Fields l(t.at("lbp"), t.sub("lbp"));
      read_lbp(l, c.train.lbp);
    }
    t.finish();
  }
  if (f.has("simulate")) {
    Fields s(f.at("simulate"), "config.simulate");
    s.opt("n_variants", c.n_variants);
    s.opt("workers", c.workers);
    s.finish();
  }
  f.opt("seed", c.seed);
  f.finish();
  wrap_validation("config", [&] { c.validate(); });
  return c;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) { return run_config_from(parse(text, "config")); }

std::string run_config_to_json(const RunConfig& c) {
  json variants = json::array();
  for (const VariantSpec& v : c.variants) variants.push_back(v.label());
  json j = {
      {"paths",
       {{"scenario_dir", c.scenario_dir}, {"dataset", c.dataset}, {"output_dir", c.output_dir}, {"params", c.params_path}}},
      {"planner", {{"variants", variants}, {"condition_eps", c.condition_eps}}},
      {"sampler", sampler_json(c.sampler)},
      {"energy", energy_json(c.energy)},
      {"lbp", lbp_json(c.lbp)},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"k_ignore", c.k_ignore},
        {"renormalize_complement", c.train.loss.renormalize_complement},
        {"clip", c.train.loss.clip},
        {"lbp", lbp_json(c.train.lbp)}}},
      {"simulate", {{"n_variants", c.n_variants}, {"workers", c.workers}}},
      {"seed", c.seed}};
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const fs::path& path) {
  const std::string text = read_file(path);
  RunConfig c = run_config_from_json(text);
  const fs::path base = path.parent_path();
  auto resolve = [&](std::string& p, const char* what) {
    if (p.empty()) return;
    fs::path full = fs::path(p).is_relative() ? base / p : fs::path(p);
    if (!fs::exists(full)) throw InvalidArgument(std::string(what) + " not found: " + full.string());
    p = full.lexically_normal().string();
  };
  resolve(c.scenario_dir, "scenario_dir");
  resolve(c.dataset, "dataset");
  resolve(c.params_path, "params");
  if (!c.params_path.empty()) {
    // Keys set in the config's own energy section win over the params file.
    c.energy = energy_params_from_json(read_file(c.params_path), c.energy);
    const json j = parse(text, "config");
    if (j.contains("energy")) c.energy = energy_params_from_json(j.at("energy").dump(), c.energy);
  }
  return c;
}

namespace {

KinematicState state_from(Fields& f) {
  KinematicState s;
  s.pose = Pose2(f.req<double>("x"), f.req<double>("y"), f.req<double>("heading"));
  s.speed = f.req<double>("speed");
  return s;
}

BoxDims dims_from(Fields& f) {
  BoxDims d;
  f.opt("length", d.length);
  f.opt("width", d.width);
  return d;
}

}  // namespace

Scenario scenario_from_json(const std::string& text, const SamplerConfig& default_sampler) {
  const json j = parse(text, "scenario");
  Fields f(j, "scenario");
  Scenario s;
  s.name = f.req<std::string>("name");
  const std::string ctx = "scenario '" + s.name + "'";
  const json* ego_sampler = nullptr;
  f.opt("timer", s.timer);
  f.opt("dt", s.dt);
  {
    Fields lanes(f.at("lanes"), ctx + ".lanes");
    for (const auto& item : f.at("lanes").items()) {
      s.lanes.emplace(item.key(), polyline_from(lanes.at(item.key()), lanes.sub(item.key())));
    }
  }
  if (f.has("perturbation")) {
    Fields p(f.at("perturbation"), ctx + ".perturbation");
    p.opt("position_sigma", s.position_sigma);
    p.opt("speed_sigma", s.speed_sigma);
    p.finish();
  }
  {
    Fields e(f.at("ego"), ctx + ".ego");
    s.ego.initial = state_from(e);
    s.ego.dims = dims_from(e);
    e.opt("ref_speed", s.ego.ref_speed);
    if (e.has("sampler")) ego_sampler = &e.at("sampler");
    Fields g(e.at("goal"), e.sub("goal"));
    if (g.has("point") == g.has("lane")) fail(g.ctx(), "goal needs exactly one of 'point' or 'lane'");
    if (g.has("point")) {
      s.ego.goal = vec2_from(g.at("point"), g.sub("point"));
    } else {
      s.ego.goal = g.req<std::string>("lane");
    }
    g.finish();
    e.finish();
  }
  if (f.has("actors")) {
    const json& actors = f.at("actors");
    if (!actors.is_array()) fail(ctx + ".actors", "expected a list");
    for (std::size_t i = 0; i < actors.size(); ++i) {
      Fields a(actors[i], ctx + ".actors[" + std::to_string(i) + "]");
      ActorSpec spec;
      spec.name = "actor" + std::to_string(i + 1);
      a.opt("name", spec.name);
      spec.route = a.req<std::string>("route");
      auto lane = s.lanes.find(spec.route);
      if (lane == s.lanes.end()) fail(a.sub("route"), "unknown lane '" + spec.route + "'");
      if (a.has("s")) {
        if (a.has("x") || a.has("y") || a.has("heading")) fail(a.ctx(), "give either 's' or x/y/heading");
        spec.initial.pose = pose_on_route(lane->second, a.req<double>("s"));
        spec.initial.speed = a.req<double>("speed");
      } else {
        spec.initial = state_from(a);
      }
      spec.dims = dims_from(a);
      if (a.has("behavior")) {
        Fields b(a.at("behavior"), a.sub("behavior"));
        b.opt("desired_speed", spec.behavior.desired_speed);
        b.opt("max_accel", spec.behavior.max_accel);
        b.opt("comfortable_decel", spec.behavior.comfortable_decel);
        b.opt("hazard_lookahead", spec.behavior.hazard_lookahead);
        b.opt("min_gap", spec.behavior.min_gap);
        b.opt("corridor_margin", spec.behavior.corridor_margin);
        b.finish();
      }
      a.finish();
      s.actors.push_back(std::move(spec));
    }
  }
  if (f.has("settings")) {
    Fields st(f.at("settings"), ctx + ".settings");
    st.opt("goal_radius", s.settings.goal_radius);
    st.opt("lane_width", s.settings.lane_width);
    st.opt("hold_steps", s.settings.hold_steps);
    st.opt("replan_interval", s.settings.replan_interval);
    st.opt("brake_threshold", s.settings.brake_threshold);
    st.finish();
  }
  s.sampler = default_sampler;
  if (f.has("sampler")) {
    Fields sm(f.at("sampler"), ctx + ".sampler");
    read_sampler(sm, s.sampler);
  }
  if (ego_sampler) {
    // Unset fields come from the scenario sampler.
    Fields es(*ego_sampler, ctx + ".ego.sampler");
    s.ego.sampler = s.sampler;
    read_sampler(es, *s.ego.sampler);
  }
  f.finish();
  s.validate();
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json lanes = json::object();
  for (const auto& [name, line] : s.lanes) lanes[name] = polyline_json(line);
  json goal;
  if (const Vec2* p = std::get_if<Vec2>(&s.ego.goal)) {
    goal = {{"point", {p->x, p->y}}};
  } else {
    goal = {{"lane", std::get<std::string>(s.ego.goal)}};
  }
  json actors = json::array();
  for (const ActorSpec& a : s.actors) {
    const CarFollowingParams& b = a.behavior;
    actors.push_back({{"name", a.name},
                      {"route", a.route},
                      {"x", a.initial.pose.x},
                      {"y", a.initial.pose.y},
                      {"heading", a.initial.pose.heading},
                      {"speed", a.initial.speed},
                      {"length", a.dims.length},
                      {"width", a.dims.width},
                      {"behavior",
                       {{"desired_speed", b.desired_speed},
                        {"max_accel", b.max_accel},
                        {"comfortable_decel", b.comfortable_decel},
                        {"hazard_lookahead", b.hazard_lookahead},
                        {"min_gap", b.min_gap},
                        {"corridor_margin", b.corridor_margin}}}});
  }
  const KinematicState& e = s.ego.initial;
  json j = {{"name", s.name},
            {"timer", s.timer},
            {"dt", s.dt},
            {"lanes", lanes},
            {"perturbation", {{"position_sigma", s.position_sigma}, {"speed_sigma", s.speed_sigma}}},
            {"ego",
             {{"x", e.pose.x},
              {"y", e.pose.y},
              {"heading", e.pose.heading},
              {"speed", e.speed},
              {"length", s.ego.dims.length},
              {"width", s.ego.dims.width},
              {"ref_speed", s.ego.ref_speed},
              {"goal", goal}}},
            {"actors", actors},
            {"settings",
             {{"goal_radius", s.settings.goal_radius},
              {"lane_width", s.settings.lane_width},
              {"hold_steps", s.settings.hold_steps},
              {"replan_interval", s.settings.replan_interval},
              {"brake_threshold", s.settings.brake_threshold}}},
            {"sampler", sampler_json(s.sampler)}};
  if (s.ego.sampler) j["ego"]["sampler"] = sampler_json(*s.ego.sampler);
  return j.dump(2) + "\n";
}

Scenario load_scenario(const fs::path& path, const SamplerConfig& default_sampler) {
  try {
    return scenario_from_json(read_file(path), default_sampler);
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.what());
  }
}

std::vector<Scenario> load_scenarios(const fs::path& dir, const SamplerConfig& default_sampler) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const fs::path& p : files) out.push_back(load_scenario(p, default_sampler));
  return out;
}

namespace {

json terms_json(const ObjectiveTerms& t) {
  return {{"ego_unary", t.ego_unary},
          {"interaction", t.interaction},
          {"actor_unary", t.actor_unary},
          {"goal", t.goal},
          {"total", t.total()}};
}

json plan_json(std::size_t chosen, bool converged, std::span<const double> values,
               std::span<const ObjectiveTerms> breakdown) {
  json terms = json::array();
  for (const ObjectiveTerms& t : breakdown) terms.push_back(terms_json(t));
  return {{"chosen", chosen},
          {"converged", converged},
          {"objective_values", std::vector<double>(values.begin(), values.end())},
          {"breakdown", terms}};
}

json pose_json(const Pose2& p, double speed) {
  return {{"x", p.x}, {"y", p.y}, {"heading", p.heading}, {"speed", speed}};
}

json waypoints_json(const Trajectory& t) {
  json out = json::array();
  for (const Waypoint& w : t.waypoints) out.push_back({w.pose.x, w.pose.y, w.pose.heading, w.speed});
  return out;
}

Trajectory waypoints_from(const json& v, const std::string& ctx, double start_time, double dt) {
  if (!v.is_array()) fail(ctx, "expected a list of [x, y, heading, speed]");
  Trajectory t;
  t.start_time = start_time;
  t.dt = dt;
  for (const json& w : v) {
    if (!w.is_array() || w.size() != 4) fail(ctx, "expected [x, y, heading, speed]");
    t.waypoints.push_back(
        {Pose2(as<double>(w[0], ctx), as<double>(w[1], ctx), as<double>(w[2], ctx)), as<double>(w[3], ctx)});
  }
  return t;
}

}  // namespace

std::string plan_result_to_json(const PlanResult& r) {
  json j = plan_json(r.chosen, r.converged, r.objective_values, r.breakdown);
  j["lbp_iters"] = r.lbp_iters;
  return j.dump(2) + "\n";
}

std::string tables_to_json(const EnergyTables& t) {
  json j = {{"num_actors", t.num_actors},
            {"num_candidates", t.num_candidates},
            {"layout", "unary[i][a], pairwise[i][j][a][b], goal[a]; row-major"},
            {"unary", t.unary},
            {"pairwise", t.pairwise},
            {"goal", t.goal}};
  return j.dump() + "\n";
}

std::string candidates_csv(std::span<const Trajectory> candidates) {
  std::string out = "candidate,t,x,y,heading,speed\n";
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Trajectory& t = candidates[c];
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Waypoint& w = t.waypoints[k];
      out += std::to_string(c) + "," + num(t.start_time + static_cast<double>(k) * t.dt) + "," + num(w.pose.x) +
             "," + num(w.pose.y) + "," + num(w.pose.heading) + "," + num(w.speed) + "\n";
    }
  }
  return out;
}

std::string marginals_csv(const MarginalSet& ms) {
  std::string out = "actor,candidate,probability\n";
  for (std::size_t i = 0; i < ms.num_actors; ++i) {
    for (std::size_t a = 0; a < ms.num_candidates; ++a) {
      out += std::to_string(i) + "," + std::to_string(a) + "," + num(ms.marginal(i, a)) + "\n";
    }
  }
  return out;
}

std::string residuals_csv(const MarginalSet& ms) {
  std::string out = "iteration,residual\n";
  for (std::size_t it = 0; it < ms.residuals.size(); ++it) {
    out += std::to_string(it + 1) + "," + num(ms.residuals[it]) + "\n";
  }
  return out;
}

std::string pairwise_binary(const MarginalSet& ms) {
  std::string out = "JPPB";
  auto put_u32 = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  };
  put_u32(static_cast<std::uint32_t>(ms.num_actors));
  put_u32(static_cast<std::uint32_t>(ms.num_candidates));
  for (double v : ms.pairwise) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

std::vector<TrainingExample> dataset_from_jsonl(const std::string& text) {
  std::vector<TrainingExample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = "dataset line " + std::to_string(lineno);
    const json j = parse(line, ctx);
    Fields f(j, ctx);
    TrainingExample ex;
    f.opt("seed", ex.seed);
    const double dt = f.req<double>("dt");
    if (!(dt > 0.0)) fail(f.sub("dt"), "must be positive");
    std::map<std::string, Polyline> lanes;
    {
      Fields lf(f.at("lanes"), f.sub("lanes"));
      for (const auto& item : f.at("lanes").items()) {
        lanes.emplace(item.key(), polyline_from(lf.at(item.key()), lf.sub(item.key())));
      }
    }
    const json& actors = f.at("actors");
    if (!actors.is_array() || actors.empty()) fail(f.sub("actors"), "expected a nonempty list");
    for (std::size_t i = 0; i < actors.size(); ++i) {
      Fields a(actors[i], ctx + ".actors[" + std::to_string(i) + "]");
      const std::string lane = a.req<std::string>("lane");
      auto it = lanes.find(lane);
      if (it == lanes.end()) fail(a.sub("lane"), "unknown lane '" + lane + "'");
      ex.lanes.push_back(it->second);
      ex.ref_speeds.push_back(a.req<double>("ref_speed"));
      ex.dims.push_back(dims_from(a));
      const json& past = a.at("past");
      const double past_start = past.is_array() && !past.empty() ? -dt * static_cast<double>(past.size() - 1) : 0.0;
      ex.past.push_back(waypoints_from(past, a.sub("past"), past_start, dt));
      ex.future.push_back(waypoints_from(a.at("future"), a.sub("future"), 0.0, dt));
      a.finish();
    }
    f.finish();
    out.push_back(std::move(ex));
  }
  return out;
}

std::string dataset_to_jsonl(std::span<const TrainingExample> examples) {
  std::string out;
  for (const TrainingExample& ex : examples) {
    json lanes = json::object();
    std::vector<std::string> lane_names;
    std::vector<const Polyline*> seen;
    for (const Polyline& l : ex.lanes) {
      auto it = std::find_if(seen.begin(), seen.end(), [&](const Polyline* p) { return p->points() == l.points(); });
      if (it == seen.end()) {
        const std::string name = "lane" + std::to_string(seen.size());
        seen.push_back(&l);
        lanes[name] = polyline_json(l);
        lane_names.push_back(name);
      } else {
        lane_names.push_back("lane" + std::to_string(it - seen.begin()));
      }
    }
    json actors = json::array();
    for (std::size_t i = 0; i < ex.past.size(); ++i) {
      actors.push_back({{"lane", lane_names[i]},
                        {"ref_speed", ex.ref_speeds[i]},
                        {"length", ex.dims[i].length},
                        {"width", ex.dims[i].width},
                        {"past", waypoints_json(ex.past[i])},
                        {"future", waypoints_json(ex.future[i])}});
    }
    const double dt = ex.future.empty() ? 0.1 : ex.future.front().dt;
    json j = {{"seed", ex.seed}, {"dt", dt}, {"lanes", lanes}, {"actors", actors}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string loss_curve_csv(std::span<const double> curve) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) out += std::to_string(e) + "," + num(curve[e]) + "\n";
  return out;
}

std::string trace_jsonl(const EpisodeResult& r) {
  std::string out;
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const StepRecord& rec = r.trace[k];
    json actors = json::array();
    for (std::size_t i = 0; i < rec.actor_poses.size(); ++i) {
      actors.push_back(pose_json(rec.actor_poses[i], rec.actor_speeds[i]));
    }
    json j = {{"step", k + 1}, {"time", rec.time}, {"ego", pose_json(rec.ego_pose, rec.ego_speed)}, {"actors", actors}};
    if (rec.plan) {
      j["plan"] = plan_json(rec.plan->chosen, rec.plan->converged, rec.plan->objective_values, rec.plan->breakdown);
    } else {
      j["plan"] = nullptr;
    }
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

json episode_json(const EpisodeResult& r) {
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"outcome", to_string(r.outcome)},
          {"success", r.success},
          {"ttc", r.success ? json(r.ttc) : json(nullptr)},
          {"goal_distance", r.goal_distance},
          {"collision", r.collision},
          {"brake_events", r.brake_events},
          {"actor_collisions", r.actor_collisions},
          {"replans", r.replans},
          {"unconverged_replans", r.unconverged_replans}};
}

json aggregates_obj(const SuiteAggregates& a) {
  return {{"episodes", a.episodes},
          {"success_rate", a.success_rate},
          {"mean_ttc", finite_or_null(a.mean_ttc)},
          {"mean_goal_distance", a.mean_goal_distance},
          {"collision_rate", a.collision_rate},
          {"mean_brake_events", a.mean_brake_events}};
}

}  // namespace

std::string episode_summary_json(const EpisodeResult& r) { return episode_json(r).dump(2) + "\n"; }

std::string aggregates_json(const SuiteResult& suite, const std::string& variant) {
  json skipped = json::array();
  for (const SkippedEpisode& s : suite.skipped) {
    skipped.push_back({{"template_id", s.template_id}, {"variant_id", s.variant_id}, {"reason", s.reason}});
  }
  json j = {{"variant", variant}, {"aggregates", aggregates_obj(suite.aggregates)}, {"skipped", skipped}};
  return j.dump(2) + "\n";
}

std::string aggregates_csv(std::span<const std::pair<std::string, SuiteAggregates>> rows) {
  std::string out = "variant,episodes,success_pct,mean_ttc_s,mean_goal_m,collision_pct,mean_brake\n";
  for (const auto& [name, a] : rows) {
    out += name + "," + std::to_string(a.episodes) + "," + num(a.success_rate) + "," +
           (std::isfinite(a.mean_ttc) ? num(a.mean_ttc) : std::string("nan")) + "," + num(a.mean_goal_distance) +
           "," + num(a.collision_rate) + "," + num(a.mean_brake_events) + "\n";
  }
  return out;
}

std::string episodes_csv(const SuiteResult& suite, std::span<const Scenario> templates) {
  std::string out = "template,variant_id,seed,outcome,success,ttc_s,goal_m,collision,brake_events,actor_collisions\n";
  for (const SuiteEntry& e : suite.entries) {
    const EpisodeResult& r = e.result;
    out += templates[e.template_id].name + "," + std::to_string(e.variant_id) + "," + std::to_string(r.seed) + "," +
           to_string(r.outcome) + "," + (r.success ? "1" : "0") + "," + (r.success ? num(r.ttc) : std::string("")) +
           "," + num(r.goal_distance) + "," + (r.collision ? "1" : "0") + "," + std::to_string(r.brake_events) + "," +
           std::to_string(r.actor_collisions) + "\n";
  }
  return out;
}

std::string comparison_csv(std::span<const std::pair<std::string, SuiteAggregates>> rows) {
  std::string out = "Planner,Succ (%),TTC (s),Goal (m),CR (%),Brake\n";
  for (const auto& [name, a] : rows) {
    out += name + "," + fixed(a.success_rate, 1) + "," + fixed(a.mean_ttc, 2) + "," + fixed(a.mean_goal_distance, 2) +
           "," + fixed(a.collision_rate, 1) + "," + fixed(a.mean_brake_events, 2) + "\n";
  }
  return out;
}

}  // namespace jointplan::io
