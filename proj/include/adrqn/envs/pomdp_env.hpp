#pragma once

#include <random>

#include "adrqn/envs/environment.hpp"
#include "adrqn/pomdp/model.hpp"

namespace adrqn::envs {

/// Runs a tabular model as an environment. Observations are one-hot over the
/// model's observation set; the reset observation is all zeros. Action 0 doubles
/// as the no-op, which for Tiger is "listen". Episodes last `horizon` steps.
class PomdpEnvironment : public EnvironmentBase {
 public:
  PomdpEnvironment(pomdp::PomdpModel model, std::size_t horizon, std::string name = "pomdp")
      : EnvironmentBase(EnvSpec{Shape{model.num_observations()}, model.num_actions(), horizon}),
        model_(std::move(model)),
        name_(std::move(name)) {
    model_.validate(1e-9);
  }

  std::string name() const override { return name_; }
  const pomdp::PomdpModel& model() const { return model_; }
  std::size_t hidden_state() const { return state_; }

  Tensor reset(Rng& rng) override {
    begin_episode();
    state_ = sample(rng, [&](std::size_t k) { return model_.start()[k]; }, model_.num_states());
    info_.hidden_state = {static_cast<double>(state_)};
    return Tensor(spec_.observation_shape, 0.0);
  }

  EnvStep step(ActionId action, Rng& rng) override {
    check_step(action);
    EnvStep out;
    out.reward = model_.R(state_, action);
    const std::size_t s = state_;
    state_ = sample(rng, [&](std::size_t k) { return model_.T(s, action, k); }, model_.num_states());
    const std::size_t z =
        sample(rng, [&](std::size_t k) { return model_.O(state_, action, k); }, model_.num_observations());
    out.obs = Tensor(spec_.observation_shape, 0.0);
    out.obs[z] = 1.0;
    out.done = finish_step(false);
    info_.hidden_state = {static_cast<double>(state_)};
    out.info = info_;
    return out;
  }

 private:
  template <typename Prob>
  static std::size_t sample(Rng& rng, Prob&& prob, std::size_t n) {
    const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += prob(k);
      if (x < acc) return k;
    }
    return n - 1;
  }

  pomdp::PomdpModel model_;
  std::string name_;
  std::size_t state_ = 0;
};

inline EnvPtr make_tiger(const pomdp::TigerParams& params = {}, std::size_t horizon = 50) {
  return std::make_unique<PomdpEnvironment>(pomdp::tiger_model(params), horizon, "tiger");
}

}  // namespace adrqn::envs
