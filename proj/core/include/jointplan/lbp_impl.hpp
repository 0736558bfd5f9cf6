#pragma once

// Scalar-generic message passing shared by inference (double) and the
// learning module (forward-mode dual numbers, for unrolled gradients).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "jointplan/errors.hpp"
#include "jointplan/inference.hpp"

namespace jointplan::detail {

inline double scalar_value(double x) { return x; }
template <typename T>
double scalar_value(const T& x) {
  return x.a;
}

// log(sum_i exp(x_i)) with max subtraction.
template <typename T, typename Range>
T log_sum_exp(const Range& xs) {
  using std::exp;
  using std::log;
  double m = -std::numeric_limits<double>::infinity();
  for (const T& x : xs) m = std::max(m, scalar_value(x));
  if (!std::isfinite(m)) return T(m);
  T sum(0.0);
  for (const T& x : xs) sum += exp(x - m);
  return log(sum) + m;
}

template <typename T>
T log_add_exp(const T& a, const T& b) {
  using std::exp;
  using std::log;
  const double m = std::max(scalar_value(a), scalar_value(b));
  return log(exp(a - m) + exp(b - m)) + m;
}

template <typename T>
struct LbpState {
  std::size_t n = 0;
  std::size_t k = 0;
  // log m_{i->j}(b) at ((i * n + j) * k + b).
  std::vector<T> log_messages;
  std::vector<T> log_marginals;
  // log b_ij(a, b) at ((i * n + j) * k + a) * k + b, for i < j only.
  std::vector<T> log_pairwise;
  bool converged = false;
  std::size_t iters = 0;
  std::vector<double> residuals;
};

// edge[((i * n + j) * k + a) * k + b] = E_ij(a, b), symmetric under
// (i, a, j, b) <-> (j, b, i, a).
inline std::vector<double> edge_energies(const EnergyTables& t) {
  const std::size_t n = t.num_actors;
  const std::size_t k = t.num_candidates;
  std::vector<double> e(n * n * k * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) e[((i * n + j) * k + a) * k + b] = t.edge(i, j, a, b);
      }
    }
  }
  return e;
}

template <typename T>
LbpState<T> run_lbp(std::size_t n, std::size_t k, std::span<const T> unary, std::span<const double> edge,
                    const LbpConfig& cfg) {
  using std::exp;
  using std::log;
  cfg.validate();
  LbpState<T> s;
  s.n = n;
  s.k = k;
  const double log_uniform = -std::log(static_cast<double>(k));
  s.log_messages.assign(n * n * k, T(log_uniform));

  auto msg = [&](std::size_t from, std::size_t to, std::size_t b) -> T& {
    return s.log_messages[(from * n + to) * k + b];
  };
  auto energy = [&](std::size_t i, std::size_t j, std::size_t a, std::size_t b) {
    return edge[((i * n + j) * k + a) * k + b];
  };

  const bool damped = cfg.damping > 0.0;
  const double log_keep = damped ? std::log(cfg.damping) : 0.0;
  const double log_take = std::log(1.0 - cfg.damping);

  std::vector<T> cavity(k);
  std::vector<T> terms(k);
  std::vector<T> fresh(k);
  for (std::size_t iter = 0; iter < cfg.max_iters && n > 1; ++iter) {
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (std::size_t a = 0; a < k; ++a) {
          T h = -unary[i * k + a];
          for (std::size_t m = 0; m < n; ++m) {
            if (m != i && m != j) h += msg(m, i, a);
          }
          cavity[a] = h;
        }
        for (std::size_t b = 0; b < k; ++b) {
          for (std::size_t a = 0; a < k; ++a) terms[a] = cavity[a] - energy(i, j, a, b);
          fresh[b] = log_sum_exp<T>(terms);
        }
        const T norm = log_sum_exp<T>(fresh);
        for (std::size_t b = 0; b < k; ++b) {
          T next = fresh[b] - norm;
          if (damped) next = log_add_exp(T(log_keep) + msg(i, j, b), T(log_take) + next);
          const double change = std::abs(std::exp(scalar_value(next)) - std::exp(scalar_value(msg(i, j, b))));
          if (!std::isfinite(scalar_value(next))) throw NumericalFailure("lbp: non-finite message");
          residual = std::max(residual, change);
          msg(i, j, b) = next;
        }
      }
    }
    s.residuals.push_back(residual);
    s.iters = iter + 1;
    s.converged = residual < cfg.tol;
    if (s.converged && !cfg.fixed_iterations) break;
  }
  if (n == 1) s.converged = true;

  // Node beliefs.
  s.log_marginals.resize(n * k);
  std::vector<T> incoming(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      T h(0.0);
      for (std::size_t m = 0; m < n; ++m) {
        if (m != i) h += msg(m, i, a);
      }
      incoming[i * k + a] = h;
      terms[a] = h - unary[i * k + a];
    }
    const T norm = log_sum_exp<T>(terms);
    for (std::size_t a = 0; a < k; ++a) s.log_marginals[i * k + a] = terms[a] - norm;
  }

  // Pairwise beliefs for i < j.
  s.log_pairwise.assign(n * n * k * k, T(-std::numeric_limits<double>::infinity()));
  std::vector<T> block(k * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t a = 0; a < k; ++a) {
        const T hi = incoming[i * k + a] - msg(j, i, a) - unary[i * k + a];
        for (std::size_t b = 0; b < k; ++b) {
          block[a * k + b] = hi + incoming[j * k + b] - msg(i, j, b) - unary[j * k + b] - energy(i, j, a, b);
        }
      }
      const T norm = log_sum_exp<T>(block);
      for (std::size_t ab = 0; ab < k * k; ++ab) {
        s.log_pairwise[(i * n + j) * k * k + ab] = block[ab] - norm;
      }
    }
  }

  for (const T& v : s.log_marginals) {
    if (!std::isfinite(scalar_value(v))) throw NumericalFailure("lbp: non-finite belief");
  }
  return s;
}

}  // namespace jointplan::detail
