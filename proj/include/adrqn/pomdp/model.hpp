#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrqn::pomdp {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Probability mass over the states of a model.
struct Belief {
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
  double& operator[](std::size_t i) { return p[i]; }

  static Belief uniform(std::size_t n) { return Belief{std::vector<double>(n, 1.0 / static_cast<double>(n))}; }
  static Belief point(std::size_t n, std::size_t s) {
    Belief b{std::vector<double>(n, 0.0)};
    b.p.at(s) = 1.0;
    return b;
  }

  /// Entries non-negative and summing to one within `tol`.
  bool valid(double tol = 1e-12) const {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) return false;
      sum += v;
    }
    return !p.empty() && std::abs(sum - 1.0) <= tol;
  }
};

/// Finite discrete POMDP <S, A, Z, T, O, R> with discount and start belief.
///
/// T(s, a, s') and O(s', a, z) follow the usual convention: the observation
/// depends on the state reached and the action that led there.
class PomdpModel {
 public:
  PomdpModel() = default;
  PomdpModel(std::vector<std::string> states, std::vector<std::string> actions, std::vector<std::string> observations,
             double discount)
      : states_(std::move(states)),
        actions_(std::move(actions)),
        observations_(std::move(observations)),
        discount_(discount),
        transition_(num_states() * num_actions() * num_states(), 0.0),
        observation_(num_states() * num_actions() * num_observations(), 0.0),
        reward_(num_states() * num_actions(), 0.0),
        start_(Belief::uniform(num_states())) {
    if (states_.empty() || actions_.empty() || observations_.empty()) {
      throw ModelError("pomdp model needs at least one state, action and observation");
    }
  }

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_observations() const { return observations_.size(); }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }
  const std::vector<std::string>& observations() const { return observations_; }

  double discount() const { return discount_; }
  void set_discount(double g) { discount_ = g; }
  const Belief& start() const { return start_; }
  void set_start(Belief b) { start_ = std::move(b); }

  double T(std::size_t s, std::size_t a, std::size_t s2) const { return transition_[(s * num_actions() + a) * num_states() + s2]; }
  double& T(std::size_t s, std::size_t a, std::size_t s2) { return transition_[(s * num_actions() + a) * num_states() + s2]; }
  double O(std::size_t s2, std::size_t a, std::size_t z) const {
    return observation_[(s2 * num_actions() + a) * num_observations() + z];
  }
  double& O(std::size_t s2, std::size_t a, std::size_t z) {
    return observation_[(s2 * num_actions() + a) * num_observations() + z];
  }
  double R(std::size_t s, std::size_t a) const { return reward_[s * num_actions() + a]; }
  double& R(std::size_t s, std::size_t a) { return reward_[s * num_actions() + a]; }

  std::size_t state_index(const std::string& name) const { return index_of(states_, name, "state"); }
  std::size_t action_index(const std::string& name) const { return index_of(actions_, name, "action"); }
  std::size_t observation_index(const std::string& name) const { return index_of(observations_, name, "observation"); }

  /// Checks stochasticity of T and O (to `tol`), the start belief and the discount.
  void validate(double tol = 1e-12) const {
    if (!(discount_ >= 0.0 && discount_ <= 1.0)) throw ModelError("discount must lie in [0, 1]");
    for (std::size_t s = 0; s < num_states(); ++s) {
      for (std::size_t a = 0; a < num_actions(); ++a) {
        double sum = 0.0;
        for (std::size_t s2 = 0; s2 < num_states(); ++s2) {
          if (T(s, a, s2) < 0.0) throw ModelError("negative transition probability");
          sum += T(s, a, s2);
        }
        if (std::abs(sum - 1.0) > tol) {
          throw ModelError("T(" + states_[s] + ", " + actions_[a] + ", .) sums to " + std::to_string(sum));
        }
        double osum = 0.0;
        for (std::size_t z = 0; z < num_observations(); ++z) {
          if (O(s, a, z) < 0.0) throw ModelError("negative observation probability");
          osum += O(s, a, z);
        }
        if (std::abs(osum - 1.0) > tol) {
          throw ModelError("O(" + states_[s] + ", " + actions_[a] + ", .) sums to " + std::to_string(osum));
        }
      }
    }
    if (start_.size() != num_states() || !start_.valid(tol)) throw ModelError("start belief is not a distribution");
  }

 private:
  static std::size_t index_of(const std::vector<std::string>& names, const std::string& name, const char* kind) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw ModelError(std::string("unknown ") + kind + " '" + name + "'");
  }

  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::vector<std::string> observations_;
  double discount_ = 0.95;
  std::vector<double> transition_;
  std::vector<double> observation_;
  std::vector<double> reward_;
  Belief start_;
};

struct TigerParams {
  double listen_accuracy = 0.85;
  double listen_reward = -1.0;
  double treasure_reward = 10.0;
  double tiger_reward = -100.0;
  double discount = 0.95;
};

/// The classic two-door tiger problem. Opening a door resets the tiger uniformly.
inline PomdpModel tiger_model(const TigerParams& params = {}) {
  PomdpModel m({"tiger-left", "tiger-right"}, {"listen", "open-left", "open-right"}, {"hear-left", "hear-right"},
               params.discount);
  const double acc = params.listen_accuracy;
  for (std::size_t s = 0; s < 2; ++s) {
    m.T(s, 0, s) = 1.0;
    m.O(s, 0, s) = acc;
    m.O(s, 0, 1 - s) = 1.0 - acc;
    for (std::size_t a = 1; a < 3; ++a) {
      for (std::size_t s2 = 0; s2 < 2; ++s2) {
        m.T(s, a, s2) = 0.5;
        m.O(s2, a, 0) = 0.5;
        m.O(s2, a, 1) = 0.5;
      }
    }
    m.R(s, 0) = params.listen_reward;
    // open-left (1) finds the tiger when s == tiger-left (0)
    m.R(s, 1) = s == 0 ? params.tiger_reward : params.treasure_reward;
    m.R(s, 2) = s == 1 ? params.tiger_reward : params.treasure_reward;
  }
  m.validate();
  return m;
}

}  // namespace adrqn::pomdp
