#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jointplan/energy.hpp"
#include "jointplan/inference.hpp"
#include "jointplan/sampler.hpp"

namespace jointplan {

// Per actor: index of the candidate nearest the observed future and the
// ignore set of the next k nearest candidates.
struct Labels {
  std::vector<std::size_t> gt;
  std::vector<std::vector<std::size_t>> ignore;
};

Labels label_and_ignore(std::span<const std::vector<Trajectory>> candidates, std::span<const Trajectory> futures,
                        std::size_t k_ignore);

struct LossOptions {
  // Renormalize the predicted distribution over candidates outside the
  // ignore set (default); otherwise the ignore set has no effect.
  bool renormalize_complement = true;
  double clip = 1e-30;
};

struct LossReport {
  double total = 0.0;
  double node = 0.0;
  double edge = 0.0;
  // d total / d (w_ego, w_actor); empty when not requested.
  std::vector<double> gradient;
  bool clipped = false;
};

// Negative log-likelihood of the labels:
//   node term  -(1/K)   log p(y_i = gt_i)
//   edge term  -(1/K^2) log p(y_i = gt_i, y_j = gt_j),  i < j.
LossReport loss(const EnergyTables& tables, const MarginalSet& ms, const Labels& labels,
                const LossOptions& opt = {});

// One scene with observed past and future for every actor (index 0 = ego).
struct TrainingExample {
  std::vector<Trajectory> past;
  std::vector<Trajectory> future;
  std::vector<BoxDims> dims;
  std::vector<Polyline> lanes;
  std::vector<double> ref_speeds;
  std::uint64_t seed = 0;
};

// Everything about an example that does not depend on the unary weights.
struct PreparedExample {
  std::size_t num_actors = 0;
  std::size_t num_candidates = 0;
  std::vector<FeatureVector> features;  // (N+1) x K
  std::vector<double> pairwise;         // EnergyTables::pairwise layout
  std::vector<std::vector<Trajectory>> candidates;
  Labels labels;

  // Tables for the given weights (goal left at zero).
  EnergyTables tables(const EnergyParams& params) const;
};

PreparedExample prepare_example(const TrainingExample& ex, const SamplerConfig& sampler,
                                const EnergyParams& params, std::size_t k_ignore);

inline constexpr std::size_t kNumWeights = 2 * kNumFeatures;

std::vector<double> flatten_weights(const EnergyParams& params);
void assign_weights(EnergyParams& params, std::span<const double> flat);

// Mean loss over the batch. When with_gradient is set, the gradient is
// propagated forward through every LBP sweep (cfg should use fixed iterations).
LossReport batch_loss(const EnergyParams& params, std::span<const PreparedExample> batch, const LbpConfig& cfg,
                      const LossOptions& opt = {}, bool with_gradient = true);

std::vector<double> gradient(const EnergyParams& params, std::span<const PreparedExample> batch,
                             const LbpConfig& cfg, const LossOptions& opt = {});

struct TrainOptions {
  double learning_rate = 0.5;
  std::size_t epochs = 50;
  LbpConfig lbp = {10, 0.5, 1e-6, true};
  LossOptions loss;
};

struct TrainResult {
  EnergyParams params;
  // Loss before each epoch's update, followed by the final loss.
  std::vector<double> loss_curve;
};

// Full-batch gradient descent with a constant step. Throws DivergenceError
// when the loss exceeds 1e10 or the iterates stop being finite.
TrainResult train(const EnergyParams& initial, std::span<const PreparedExample> dataset, const TrainOptions& opt);

// Fraction of (example, actor) pairs whose most probable candidate is the
// ground-truth candidate.
double top1_accuracy(const EnergyParams& params, std::span<const PreparedExample> dataset, const LbpConfig& cfg);

struct SyntheticDatasetOptions {
  std::size_t num_examples = 200;
  std::size_t num_actors = 3;  // including the ego
  std::size_t past_steps = 6;
  double dt = 0.2;
  std::size_t horizon_steps = 21;
  double min_speed = 5.0;
  double max_speed = 12.0;
  std::uint64_t seed = 7;
};

// Scenes on straight and gently curved lanes where every actor's future
// follows its lane centerline at its reference speed.
std::vector<TrainingExample> synthesize_dataset(const SyntheticDatasetOptions& opt);

}  // namespace jointplan
