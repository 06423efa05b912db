#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adrqn/pomdp/belief.hpp"

namespace adrqn::pomdp {

/// Regular grid on the belief simplex with spacing 1/resolution, for 1 to 3 states.
///
/// For three states the simplex is split into the usual two triangles per
/// grid cell and beliefs are interpolated barycentrically inside their triangle.
class BeliefGrid {
 public:
  BeliefGrid(std::size_t num_states, std::size_t resolution) : states_(num_states), n_(resolution) {
    if (num_states == 0 || num_states > 3) throw ModelError("belief grid supports 1 to 3 states");
    if (resolution == 0) throw ModelError("belief grid resolution must be positive");
    const double n = static_cast<double>(n_);
    if (states_ == 1) {
      points_.push_back(Belief{{1.0}});
    } else if (states_ == 2) {
      for (std::size_t i = 0; i <= n_; ++i) {
        const double x = static_cast<double>(i) / n;
        points_.push_back(Belief{{x, 1.0 - x}});
      }
    } else {
      row_offset_.resize(n_ + 2, 0);
      for (std::size_t i = 0; i <= n_; ++i) {
        row_offset_[i + 1] = row_offset_[i] + (n_ - i + 1);
        for (std::size_t j = 0; i + j <= n_; ++j) {
          const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
          points_.push_back(Belief{{x, y, static_cast<double>(n_ - i - j) / n}});
        }
      }
    }
  }

  std::size_t num_states() const { return states_; }
  std::size_t resolution() const { return n_; }
  std::size_t size() const { return points_.size(); }
  const Belief& point(std::size_t k) const { return points_[k]; }

  /// Grid points and barycentric weights whose combination reproduces b.
  std::vector<std::pair<std::size_t, double>> interpolate(const Belief& b) const {
    if (b.size() != states_) throw ModelError("belief size does not match grid");
    if (states_ == 1) return {{0, 1.0}};
    const double n = static_cast<double>(n_);
    if (states_ == 2) {
      const double u = std::clamp(b[0], 0.0, 1.0) * n;
      std::size_t i = std::min(static_cast<std::size_t>(u), n_ - 1);
      const double f = u - static_cast<double>(i);
      return {{i, 1.0 - f}, {i + 1, f}};
    }
    const double u = std::clamp(b[0], 0.0, 1.0) * n;
    const double v = std::clamp(b[1], 0.0, 1.0) * n;
    const auto i = std::min(static_cast<std::size_t>(u), n_);
    const auto j = std::min(static_cast<std::size_t>(v), n_ - i);
    if (i + j >= n_) return {{index(i, n_ - i), 1.0}};
    const double fu = u - static_cast<double>(i), fv = v - static_cast<double>(j);
    if (fu + fv <= 1.0 || i + j + 2 > n_) {
      const double w0 = std::max(0.0, 1.0 - fu - fv);
      return {{index(i, j), w0}, {index(i + 1, j), fu}, {index(i, j + 1), fv}};
    }
    return {{index(i + 1, j + 1), fu + fv - 1.0}, {index(i + 1, j), 1.0 - fv}, {index(i, j + 1), 1.0 - fu}};
  }

  /// Grid index of a vertex belief (point mass on state s).
  std::size_t vertex(std::size_t s) const {
    if (states_ == 1) return 0;
    if (states_ == 2) return s == 0 ? n_ : 0;
    if (s == 0) return index(n_, 0);
    if (s == 1) return index(0, n_);
    return index(0, 0);
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return row_offset_[i] + j; }

  std::size_t states_;
  std::size_t n_;
  std::vector<Belief> points_;
  std::vector<std::size_t> row_offset_;
};

class ValueIterationError : public std::runtime_error {
 public:
  ValueIterationError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Converged value table on a belief grid.
struct BeliefValueFunction {
  BeliefGrid grid;
  std::vector<double> values;
  std::vector<std::size_t> policy;
  std::vector<double> residuals;  // sup-norm change of every sweep

  std::size_t sweeps() const { return residuals.size(); }

  double value(const Belief& b) const {
    double v = 0.0;
    for (const auto& [k, w] : grid.interpolate(b)) v += w * values[k];
    return v;
  }

  /// One-step lookahead with the interpolated value function.
  double q_value(const PomdpModel& m, const Belief& b, std::size_t a) const {
    double q = expected_reward(m, b, a);
    if (m.discount() == 0.0) return q;
    for (std::size_t z = 0; z < m.num_observations(); ++z) {
      const double pz = obs_likelihood(m, b, a, z);
      if (pz <= 0.0) continue;
      q += m.discount() * pz * value(belief_update(m, b, a, z));
    }
    return q;
  }

  std::size_t greedy_action(const PomdpModel& m, const Belief& b) const {
    std::size_t best = 0;
    double best_q = q_value(m, b, 0);
    for (std::size_t a = 1; a < m.num_actions(); ++a) {
      const double q = q_value(m, b, a);
      if (q > best_q) {
        best_q = q;
        best = a;
      }
    }
    return best;
  }
};

/// Value iteration on the belief MDP, with successor beliefs interpolated onto the grid:
///   V(b) = max_a [ rho(b, a) + gamma * sum_z P(z | b, a) V(SE(b, a, z)) ].
/// Stops once the sup-norm change of a sweep drops below `tolerance`.
inline BeliefValueFunction belief_value_iteration(const PomdpModel& m, std::size_t resolution, double tolerance,
                                                  std::size_t max_sweeps = 100000) {
  m.validate(1e-9);
  if (m.num_states() > 3) throw ModelError("belief value iteration supports at most 3 states");
  if (!(m.discount() < 1.0)) throw ModelError("belief value iteration requires discount < 1");

  BeliefValueFunction out{BeliefGrid(m.num_states(), resolution), {}, {}, {}};
  const BeliefGrid& grid = out.grid;
  const std::size_t G = grid.size(), A = m.num_actions();

  struct Backup {
    double reward = 0.0;
    std::vector<std::pair<std::size_t, double>> next;
  };
  std::vector<Backup> backups(G * A);
  for (std::size_t g = 0; g < G; ++g) {
    const Belief& b = grid.point(g);
    for (std::size_t a = 0; a < A; ++a) {
      Backup& bk = backups[g * A + a];
      bk.reward = expected_reward(m, b, a);
      for (std::size_t z = 0; z < m.num_observations(); ++z) {
        const double pz = obs_likelihood(m, b, a, z);
        if (pz <= 0.0) continue;
        for (const auto& [k, w] : grid.interpolate(belief_update(m, b, a, z))) {
          if (w != 0.0) bk.next.emplace_back(k, pz * w);
        }
      }
    }
  }

  std::vector<double> v(G, 0.0), next(G, 0.0);
  std::vector<std::size_t> policy(G, 0);
  const double gamma = m.discount();
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_a = 0;
      for (std::size_t a = 0; a < A; ++a) {
        const Backup& bk = backups[g * A + a];
        double q = bk.reward;
        for (const auto& [k, p] : bk.next) q += gamma * p * v[k];
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      next[g] = best;
      policy[g] = best_a;
      residual = std::max(residual, std::abs(best - v[g]));
    }
    v.swap(next);
    out.residuals.push_back(residual);
    if (residual < tolerance) {
      out.values = std::move(v);
      out.policy = std::move(policy);
      return out;
    }
  }
  throw ValueIterationError("belief value iteration did not converge in " + std::to_string(max_sweeps) + " sweeps",
                            out.residuals.back());
}

struct PolicyReturn {
  double mean_discounted_return = 0.0;
  double standard_error = 0.0;
  double mean_step_reward = 0.0;
  std::size_t episodes = 0;
};

using BeliefPolicy = std::function<std::size_t(const Belief&)>;

/// Monte-Carlo return of a belief-based policy, tracking the exact belief.
inline PolicyReturn oracle_policy_return(const PomdpModel& m, const BeliefPolicy& policy, std::size_t episodes,
                                         std::size_t horizon, std::mt19937_64& rng) {
  auto sample = [&rng](auto&& prob, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng), acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += prob(k);
      if (x < acc) return k;
    }
    return n - 1;
  };
  PolicyReturn out;
  out.episodes = episodes;
  std::vector<double> returns;
  returns.reserve(episodes);
  double reward_sum = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = sample([&](std::size_t k) { return m.start()[k]; }, m.num_states());
    Belief b = m.start();
    double ret = 0.0, discount = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t a = policy(b);
      const double r = m.R(s, a);
      ret += discount * r;
      reward_sum += r;
      discount *= m.discount();
      const std::size_t s2 = sample([&](std::size_t k) { return m.T(s, a, k); }, m.num_states());
      const std::size_t z = sample([&](std::size_t k) { return m.O(s2, a, k); }, m.num_observations());
      b = belief_update(m, b, a, z);
      s = s2;
    }
    returns.push_back(ret);
  }
  const double n = static_cast<double>(std::max<std::size_t>(episodes, 1));
  double mean = 0.0, var = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  for (double r : returns) var += (r - mean) * (r - mean);
  var = episodes > 1 ? var / (n - 1.0) : 0.0;
  out.mean_discounted_return = mean;
  out.standard_error = std::sqrt(var / n);
  out.mean_step_reward = reward_sum / (n * static_cast<double>(std::max<std::size_t>(horizon, 1)));
  return out;
}

}  // namespace adrqn::pomdp
