#include "jointplan/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jointplan/errors.hpp"
#include "jointplan/lbp_impl.hpp"

namespace jointplan {

void LbpConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("lbp: max_iters must be >= 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("lbp: damping must be in [0, 1)");
  if (!(tol > 0.0)) throw InvalidArgument("lbp: tol must be positive");
}

namespace {

// Fills the linear-domain views and mirrors pairwise blocks to i > j.
void finish(MarginalSet& ms) {
  const std::size_t n = ms.num_actors;
  const std::size_t k = ms.num_candidates;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          ms.log_pairwise[ms.pair_index(j, i, b, a)] = ms.log_pairwise[ms.pair_index(i, j, a, b)];
        }
      }
    }
  }
  ms.marginals.resize(ms.log_marginals.size());
  std::transform(ms.log_marginals.begin(), ms.log_marginals.end(), ms.marginals.begin(),
                 [](double x) { return std::exp(x); });
  ms.pairwise.resize(ms.log_pairwise.size());
  std::transform(ms.log_pairwise.begin(), ms.log_pairwise.end(), ms.pairwise.begin(),
                 [](double x) { return std::exp(x); });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) ms.pairwise[ms.pair_index(i, i, a, b)] = 0.0;
    }
  }
}

}  // namespace

MarginalSet lbp(const EnergyTables& tables, const LbpConfig& cfg) {
  tables.validate();
  const std::size_t n = tables.num_actors;
  const std::size_t k = tables.num_candidates;
  const std::vector<double> edge = detail::edge_energies(tables);
  detail::LbpState<double> state = detail::run_lbp<double>(n, k, tables.unary, edge, cfg);

  MarginalSet ms;
  ms.num_actors = n;
  ms.num_candidates = k;
  ms.log_marginals = std::move(state.log_marginals);
  ms.log_pairwise = std::move(state.log_pairwise);
  ms.converged = state.converged;
  ms.iters_used = state.iters;
  ms.residuals = std::move(state.residuals);
  finish(ms);
  return ms;
}

MarginalSet exact_marginals(const EnergyTables& tables) {
  tables.validate();
  const std::size_t n = tables.num_actors;
  const std::size_t k = tables.num_candidates;
  double states = 1.0;
  for (std::size_t i = 0; i < n; ++i) states *= static_cast<double>(k);
  if (states > static_cast<double>(kMaxEnumerationStates)) {
    throw StateSpaceTooLarge("exact_marginals: too many joint states");
  }

  std::vector<std::size_t> y(n, 0);
  auto energy = [&] {
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e += tables.u(i, y[i]);
      for (std::size_t j = i + 1; j < n; ++j) e += tables.edge(i, j, y[i], y[j]);
    }
    return e;
  };
  auto advance = [&] {
    for (std::size_t i = n; i-- > 0;) {
      if (++y[i] < k) return true;
      y[i] = 0;
    }
    return false;
  };

  double min_energy = std::numeric_limits<double>::infinity();
  do {
    min_energy = std::min(min_energy, energy());
  } while (advance());

  MarginalSet ms;
  ms.num_actors = n;
  ms.num_candidates = k;
  ms.marginals.assign(n * k, 0.0);
  ms.pairwise.assign(n * n * k * k, 0.0);
  double z = 0.0;
  std::fill(y.begin(), y.end(), 0);
  do {
    const double w = std::exp(-(energy() - min_energy));
    z += w;
    for (std::size_t i = 0; i < n; ++i) {
      ms.marginals[i * k + y[i]] += w;
      for (std::size_t j = i + 1; j < n; ++j) ms.pairwise[ms.pair_index(i, j, y[i], y[j])] += w;
    }
  } while (advance());

  for (double& v : ms.marginals) v /= z;
  for (double& v : ms.pairwise) v /= z;
  ms.log_marginals.resize(ms.marginals.size());
  std::transform(ms.marginals.begin(), ms.marginals.end(), ms.log_marginals.begin(),
                 [](double x) { return std::log(x); });
  ms.log_pairwise.assign(ms.pairwise.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          const std::size_t idx = ms.pair_index(i, j, a, b);
          ms.log_pairwise[idx] = std::log(ms.pairwise[idx]);
        }
      }
    }
  }
  ms.converged = true;
  finish(ms);
  return ms;
}

std::vector<double> set_conditional_marginals(const MarginalSet& ms, std::span<const std::size_t> set,
                                              double eps) {
  if (set.empty()) throw EmptyConditioningSet("conditioning set is empty");
  const std::size_t n = ms.num_actors;
  const std::size_t k = ms.num_candidates;
  std::vector<double> terms;
  terms.reserve(std::max(set.size(), k));
  for (std::size_t a : set) {
    if (a >= k) throw InvalidArgument("conditioning candidate out of range");
    terms.push_back(ms.log_marginal(0, a));
  }
  const double log_mass = detail::log_sum_exp<double>(terms);
  if (!(log_mass > std::log(eps))) throw DegenerateCondition("conditioning set has no probability mass");

  std::vector<double> out((n - 1) * k, 0.0);
  std::vector<double> row(k);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t b = 0; b < k; ++b) {
      terms.clear();
      for (std::size_t a : set) terms.push_back(ms.log_pair(0, i, a, b));
      row[b] = detail::log_sum_exp<double>(terms);
    }
    const double norm = detail::log_sum_exp<double>(row);
    if (!std::isfinite(norm)) throw DegenerateCondition("conditional belief row vanished");
    for (std::size_t b = 0; b < k; ++b) out[(i - 1) * k + b] = std::exp(row[b] - norm);
  }
  return out;
}

std::vector<double> conditional_marginals(const MarginalSet& ms, std::size_t a0, double eps) {
  const std::size_t set[1] = {a0};
  return set_conditional_marginals(ms, set, eps);
}

std::vector<double> actor_marginals(const MarginalSet& ms) {
  const std::size_t k = ms.num_candidates;
  return {ms.marginals.begin() + static_cast<std::ptrdiff_t>(k), ms.marginals.end()};
}

}  // namespace jointplan
