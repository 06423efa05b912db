#pragma once

#include <string>
#include <vector>

#include "adrqn/pomdp/model.hpp"

namespace adrqn::pomdp {

/// The observation has probability zero under the current belief and action.
class ImpossibleObservation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {
inline void check_indices(const PomdpModel& m, const Belief& b, std::size_t a) {
  if (b.size() != m.num_states()) throw ModelError("belief size does not match state count");
  if (a >= m.num_actions()) throw ModelError("action index out of range");
}
}  // namespace detail

/// Predicted state distribution after action a: sum_i T(s_i, a, s') b(s_i).
inline Belief predict(const PomdpModel& m, const Belief& b, std::size_t a) {
  detail::check_indices(m, b, a);
  Belief out{std::vector<double>(m.num_states(), 0.0)};
  for (std::size_t i = 0; i < m.num_states(); ++i) {
    if (b[i] == 0.0) continue;
    for (std::size_t j = 0; j < m.num_states(); ++j) out[j] += m.T(i, a, j) * b[i];
  }
  return out;
}

/// P(z | a, b) = sum_j O(s_j, a, z) sum_i T(s_i, a, s_j) b(s_i).
inline double obs_likelihood(const PomdpModel& m, const Belief& b, std::size_t a, std::size_t z) {
  if (z >= m.num_observations()) throw ModelError("observation index out of range");
  const Belief pred = predict(m, b, a);
  double p = 0.0;
  for (std::size_t j = 0; j < m.num_states(); ++j) p += m.O(j, a, z) * pred[j];
  return p;
}

/// Bayes filter step b' = SE(b, a, z).
inline Belief belief_update(const PomdpModel& m, const Belief& b, std::size_t a, std::size_t z) {
  if (z >= m.num_observations()) throw ModelError("observation index out of range");
  Belief out = predict(m, b, a);
  double norm = 0.0;
  for (std::size_t j = 0; j < m.num_states(); ++j) {
    out[j] *= m.O(j, a, z);
    norm += out[j];
  }
  if (!(norm > 0.0)) {
    throw ImpossibleObservation("observation '" + m.observations()[z] + "' has zero likelihood after action '" +
                                m.actions()[a] + "'");
  }
  for (double& v : out.p) v /= norm;
  return out;
}

/// rho(b, a) = sum_i b(s_i) R(s_i, a).
inline double expected_reward(const PomdpModel& m, const Belief& b, std::size_t a) {
  detail::check_indices(m, b, a);
  double r = 0.0;
  for (std::size_t i = 0; i < m.num_states(); ++i) r += b[i] * m.R(i, a);
  return r;
}

}  // namespace adrqn::pomdp
