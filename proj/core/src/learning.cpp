#include "jointplan/learning.hpp"

#include <ceres/jet.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "jointplan/errors.hpp"
#include "jointplan/lbp_impl.hpp"
#include "jointplan/random.hpp"

namespace jointplan {

Labels label_and_ignore(std::span<const std::vector<Trajectory>> candidates, std::span<const Trajectory> futures,
                        std::size_t k_ignore) {
  if (candidates.size() != futures.size()) throw DimensionMismatch("labels: actor count mismatch");
  Labels labels;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cands = candidates[i];
    if (cands.empty()) throw InvalidArgument("labels: actor without candidates");
    if (k_ignore >= cands.size()) throw InvalidIgnoreSize("ignore set must be smaller than K");
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(cands.size());
    for (std::size_t c = 0; c < cands.size(); ++c) order.emplace_back(squared_l2_distance(cands[c], futures[i]), c);
    std::sort(order.begin(), order.end());
    labels.gt.push_back(order[0].second);
    std::vector<std::size_t> ignore;
    for (std::size_t m = 1; m <= k_ignore; ++m) ignore.push_back(order[m].second);
    labels.ignore.push_back(std::move(ignore));
  }
  return labels;
}

namespace {

template <typename T>
struct LossParts {
  T node{0.0};
  T edge{0.0};
  bool clipped = false;
};

bool ignored(const Labels& labels, std::size_t i, std::size_t c) {
  const auto& d = labels.ignore[i];
  return std::find(d.begin(), d.end(), c) != d.end();
}

// Loss terms from log-domain beliefs. Indexing follows LbpState.
template <typename T>
LossParts<T> loss_terms(std::size_t n, std::size_t k, std::span<const T> log_marg, std::span<const T> log_pair,
                        const Labels& labels, const LossOptions& opt) {
  if (labels.gt.size() != n || labels.ignore.size() != n) throw DimensionMismatch("loss: labels do not match");
  LossParts<T> parts;
  const double log_clip = std::log(opt.clip);
  const double kd = static_cast<double>(k);
  std::vector<T> terms;
  auto clip = [&](T v) {
    if (detail::scalar_value(v) < log_clip) {
      parts.clipped = true;
      return T(log_clip);
    }
    return v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gt = labels.gt[i];
    T lp = log_marg[i * k + gt];
    if (opt.renormalize_complement && !labels.ignore[i].empty()) {
      terms.clear();
      for (std::size_t a = 0; a < k; ++a) {
        if (!ignored(labels, i, a)) terms.push_back(log_marg[i * k + a]);
      }
      lp = lp - detail::log_sum_exp<T>(terms);
    }
    parts.node += -clip(lp) / kd;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t base = (i * n + j) * k * k;
      T lp = log_pair[base + labels.gt[i] * k + labels.gt[j]];
      if (opt.renormalize_complement && (!labels.ignore[i].empty() || !labels.ignore[j].empty())) {
        terms.clear();
        for (std::size_t a = 0; a < k; ++a) {
          if (ignored(labels, i, a)) continue;
          for (std::size_t b = 0; b < k; ++b) {
            if (!ignored(labels, j, b)) terms.push_back(log_pair[base + a * k + b]);
          }
        }
        lp = lp - detail::log_sum_exp<T>(terms);
      }
      parts.edge += -clip(lp) / (kd * kd);
    }
  }
  return parts;
}

using Jet = ceres::Jet<double, static_cast<int>(kNumWeights)>;

template <typename T>
LossParts<T> example_loss(const PreparedExample& ex, std::span<const T> weights, const LbpConfig& cfg,
                          const LossOptions& opt) {
  const std::size_t n = ex.num_actors;
  const std::size_t k = ex.num_candidates;
  std::vector<T> unary(n * k, T(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = i == 0 ? std::size_t{0} : std::size_t{kNumFeatures};
    for (std::size_t a = 0; a < k; ++a) {
      T e(0.0);
      const FeatureVector& f = ex.features[i * k + a];
      for (std::size_t q = 0; q < kNumFeatures; ++q) e += weights[offset + q] * f[q];
      unary[i * k + a] = e;
    }
  }
  EnergyTables shape(n, k);
  shape.pairwise = ex.pairwise;
  const std::vector<double> edge = detail::edge_energies(shape);
  const detail::LbpState<T> state = detail::run_lbp<T>(n, k, unary, edge, cfg);
  return loss_terms<T>(n, k, state.log_marginals, state.log_pairwise, ex.labels, opt);
}

}  // namespace

LossReport loss(const EnergyTables& tables, const MarginalSet& ms, const Labels& labels, const LossOptions& opt) {
  if (tables.num_actors != ms.num_actors || tables.num_candidates != ms.num_candidates) {
    throw DimensionMismatch("loss: tables and marginals disagree");
  }
  const LossParts<double> parts =
      loss_terms<double>(ms.num_actors, ms.num_candidates, ms.log_marginals, ms.log_pairwise, labels, opt);
  return {parts.node + parts.edge, parts.node, parts.edge, {}, parts.clipped};
}

EnergyTables PreparedExample::tables(const EnergyParams& params) const {
  EnergyTables t(num_actors, num_candidates);
  for (std::size_t i = 0; i < num_actors; ++i) {
    for (std::size_t a = 0; a < num_candidates; ++a) {
      t.u(i, a) = unary_energy(features[i * num_candidates + a], params, i == 0);
    }
  }
  t.pairwise = pairwise;
  return t;
}

PreparedExample prepare_example(const TrainingExample& ex, const SamplerConfig& sampler,
                                const EnergyParams& params, std::size_t k_ignore) {
  const std::size_t n = ex.past.size();
  if (n == 0 || ex.future.size() != n || ex.dims.size() != n || ex.lanes.size() != n || ex.ref_speeds.size() != n) {
    throw DimensionMismatch("training example: per-actor fields disagree in length");
  }
  std::vector<ActorContext> actors;
  actors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SamplerConfig cfg = sampler;
    cfg.seed = mix_seed({ex.seed, sampler.seed, static_cast<std::uint64_t>(i)});
    ActorContext ctx{sample_candidates(estimate_state(ex.past[i]), cfg), ex.dims[i], ex.lanes[i], ex.ref_speeds[i]};
    require_same_horizon(ctx.candidates[0], ex.future[i]);
    actors.push_back(std::move(ctx));
  }
  PreparedExample out;
  out.num_actors = n;
  out.num_candidates = sampler.num_candidates;
  out.features = extract_scene_features(actors);
  out.pairwise = build_pairwise(actors, params);
  for (ActorContext& a : actors) out.candidates.push_back(std::move(a.candidates));
  out.labels = label_and_ignore(out.candidates, ex.future, k_ignore);
  return out;
}

std::vector<double> flatten_weights(const EnergyParams& params) {
  if (params.w_ego.size() != kNumFeatures || params.w_actor.size() != kNumFeatures) {
    throw DimensionMismatch("weights must have one entry per feature");
  }
  std::vector<double> flat(params.w_ego);
  flat.insert(flat.end(), params.w_actor.begin(), params.w_actor.end());
  return flat;
}

void assign_weights(EnergyParams& params, std::span<const double> flat) {
  if (flat.size() != kNumWeights) throw DimensionMismatch("flat weight vector has wrong length");
  params.w_ego.assign(flat.begin(), flat.begin() + kNumFeatures);
  params.w_actor.assign(flat.begin() + kNumFeatures, flat.end());
}

LossReport batch_loss(const EnergyParams& params, std::span<const PreparedExample> batch, const LbpConfig& cfg,
                      const LossOptions& opt, bool with_gradient) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  const std::vector<double> flat = flatten_weights(params);
  LossReport report;
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (!with_gradient) {
    for (const PreparedExample& ex : batch) {
      const LossParts<double> p = example_loss<double>(ex, flat, cfg, opt);
      report.node += scale * p.node;
      report.edge += scale * p.edge;
      report.clipped = report.clipped || p.clipped;
    }
    report.total = report.node + report.edge;
    return report;
  }

  std::vector<Jet> w(kNumWeights);
  for (std::size_t q = 0; q < kNumWeights; ++q) w[q] = Jet(flat[q], static_cast<int>(q));
  Jet total(0.0);
  for (const PreparedExample& ex : batch) {
    const LossParts<Jet> p = example_loss<Jet>(ex, w, cfg, opt);
    report.node += scale * p.node.a;
    report.edge += scale * p.edge.a;
    report.clipped = report.clipped || p.clipped;
    total += (p.node + p.edge) * scale;
  }
  report.total = report.node + report.edge;
  report.gradient.assign(total.v.data(), total.v.data() + kNumWeights);
  for (double g : report.gradient) {
    if (!std::isfinite(g)) throw NumericalFailure("gradient: non-finite component");
  }
  return report;
}

std::vector<double> gradient(const EnergyParams& params, std::span<const PreparedExample> batch,
                             const LbpConfig& cfg, const LossOptions& opt) {
  return batch_loss(params, batch, cfg, opt, true).gradient;
}

TrainResult train(const EnergyParams& initial, std::span<const PreparedExample> dataset, const TrainOptions& opt) {
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  TrainResult result;
  result.params = initial;
  std::vector<double> w = flatten_weights(initial);
  auto check = [](double loss) {
    if (!std::isfinite(loss) || loss > 1e10) throw DivergenceError("training diverged");
  };
  // After the first step, numerical breakdown means the iterates blew up.
  auto evaluate = [&](bool with_gradient, std::size_t epoch) {
    try {
      return batch_loss(result.params, dataset, opt.lbp, opt.loss, with_gradient);
    } catch (const NumericalFailure& e) {
      if (epoch == 0) throw;
      throw DivergenceError(std::string("training diverged: ") + e.what());
    }
  };
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const LossReport r = evaluate(true, epoch);
    check(r.total);
    result.loss_curve.push_back(r.total);
    for (std::size_t q = 0; q < kNumWeights; ++q) {
      w[q] -= opt.learning_rate * r.gradient[q];
      if (!std::isfinite(w[q])) throw DivergenceError("training diverged: non-finite weights");
    }
    assign_weights(result.params, w);
  }
  const LossReport final_report = evaluate(false, opt.epochs);
  check(final_report.total);
  result.loss_curve.push_back(final_report.total);
  return result;
}

double top1_accuracy(const EnergyParams& params, std::span<const PreparedExample> dataset, const LbpConfig& cfg) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const PreparedExample& ex : dataset) {
    const MarginalSet ms = lbp(ex.tables(params), cfg);
    for (std::size_t i = 0; i < ex.num_actors; ++i) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < ex.num_candidates; ++a) {
        if (ms.marginal(i, a) > ms.marginal(i, best)) best = a;
      }
      hits += best == ex.labels.gt[i] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

namespace {

// Arc (or straight line when curvature is 0) sampled every meter.
std::vector<Vec2> arc_points(Vec2 origin, double heading, double curvature, double length, double lateral) {
  std::vector<Vec2> pts;
  for (double s = 0.0; s <= length + 1e-9; s += 1.0) {
    const double th = heading + curvature * s;
    Vec2 p;
    if (std::abs(curvature) < 1e-12) {
      p = origin + Vec2{std::cos(heading), std::sin(heading)} * s;
    } else {
      p = origin + Vec2{(std::sin(th) - std::sin(heading)) / curvature, (std::cos(heading) - std::cos(th)) / curvature};
    }
    // Shift along the left normal for parallel lanes.
    pts.push_back(p + Vec2{-std::sin(th), std::cos(th)} * lateral);
  }
  return pts;
}

Trajectory follow_lane(const Polyline& lane, double s0, double speed, double dt, std::size_t steps, double t0) {
  Trajectory t;
  t.dt = dt;
  t.start_time = t0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = s0 + speed * dt * static_cast<double>(k);
    const Vec2 p = lane.point_at(s);
    t.waypoints.push_back({Pose2(p.x, p.y, lane.heading_at(s)), speed});
  }
  return t;
}

}  // namespace

std::vector<TrainingExample> synthesize_dataset(const SyntheticDatasetOptions& opt) {
  std::vector<TrainingExample> out;
  out.reserve(opt.num_examples);
  for (std::size_t e = 0; e < opt.num_examples; ++e) {
    std::mt19937_64 rng(mix_seed({opt.seed, static_cast<std::uint64_t>(e)}));
    const double heading = uniform_in(rng, -std::numbers::pi, std::numbers::pi);
    const double curvature = unit_uniform(rng) < 0.5 ? 0.0 : uniform_in(rng, -0.015, 0.015);
    const Vec2 origin{uniform_in(rng, -50.0, 50.0), uniform_in(rng, -50.0, 50.0)};
    TrainingExample ex;
    ex.seed = rng();
    for (std::size_t i = 0; i < opt.num_actors; ++i) {
      const double lateral = 3.5 * static_cast<double>(i);
      const Polyline lane(arc_points(origin, heading, curvature, 160.0, lateral));
      const double speed = uniform_in(rng, opt.min_speed, opt.max_speed);
      const double s0 = uniform_in(rng, 20.0, 50.0);
      const double past_span = speed * opt.dt * static_cast<double>(opt.past_steps - 1);
      ex.past.push_back(follow_lane(lane, s0 - past_span, speed, opt.dt, opt.past_steps,
                                    -opt.dt * static_cast<double>(opt.past_steps - 1)));
      ex.future.push_back(follow_lane(lane, s0, speed, opt.dt, opt.horizon_steps, 0.0));
      ex.dims.push_back(BoxDims{4.5, 2.0});
      ex.lanes.push_back(lane);
      ex.ref_speeds.push_back(speed);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace jointplan
