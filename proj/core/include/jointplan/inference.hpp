#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jointplan/energy.hpp"

namespace jointplan {

struct LbpConfig {
  std::size_t max_iters = 50;
  double damping = 0.5;  // weight on the previous message
  double tol = 1e-6;     // on the max absolute change of any message entry
  // Run exactly max_iters sweeps and ignore tol (used for training, where
  // the unrolled updates must be a fixed-depth map).
  bool fixed_iterations = false;

  void validate() const;
};

// Node marginals and pairwise beliefs over candidates, kept both in linear
// and log form. Pairwise blocks exist for every ordered pair i != j;
// block (j, i) is the transpose of block (i, j).
struct MarginalSet {
  std::size_t num_actors = 0;
  std::size_t num_candidates = 0;
  std::vector<double> marginals;
  std::vector<double> log_marginals;
  std::vector<double> pairwise;
  std::vector<double> log_pairwise;
  bool converged = false;
  std::size_t iters_used = 0;
  // Max message change after each sweep (empty for exact inference).
  std::vector<double> residuals;

  double marginal(std::size_t i, std::size_t a) const { return marginals[i * num_candidates + a]; }
  double log_marginal(std::size_t i, std::size_t a) const { return log_marginals[i * num_candidates + a]; }
  std::size_t pair_index(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return ((i * num_actors + j) * num_candidates + a) * num_candidates + b;
  }
  double pair(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return pairwise[pair_index(i, j, a, b)];
  }
  double log_pair(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return log_pairwise[pair_index(i, j, a, b)];
  }
};

// Sum-product loopy belief propagation on the fully connected pairwise MRF
//   p(Y) ∝ exp(-sum_i unary[i][y_i] - sum_{i != j} pairwise[i][j][y_i][y_j]).
// Each unordered edge carries both ordered interaction terms. Messages live
// in the log domain and are swept in fixed round-robin order (i ascending,
// then j ascending), damped as m <- damping * m_old + (1 - damping) * m_new.
MarginalSet lbp(const EnergyTables& tables, const LbpConfig& cfg);

// Brute-force enumeration of all K^(N+1) joint states; the reference for
// lbp(). Throws StateSpaceTooLarge above kMaxEnumerationStates.
inline constexpr std::size_t kMaxEnumerationStates = 10'000'000;
MarginalSet exact_marginals(const EnergyTables& tables);

// p(y_i | y_0 = a0) for i = 1..N as an N x K row-major matrix, from the
// pairwise beliefs of a single inference pass. Throws DegenerateCondition
// when the ego marginal of a0 is <= eps.
std::vector<double> conditional_marginals(const MarginalSet& ms, std::size_t a0, double eps = 1e-12);

// p(y_i | y_0 in S) for i = 1..N: belief rows summed over S and renormalized.
std::vector<double> set_conditional_marginals(const MarginalSet& ms, std::span<const std::size_t> set,
                                              double eps = 1e-12);

// Unconditioned actor marginals p(y_i) for i = 1..N (N x K).
std::vector<double> actor_marginals(const MarginalSet& ms);

}  // namespace jointplan
