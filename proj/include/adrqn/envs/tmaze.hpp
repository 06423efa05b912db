#pragma once

#include <random>

#include "adrqn/envs/environment.hpp"

namespace adrqn::envs {

/// Cue-recall T-maze. The goal side is shown only in the first observation;
/// the agent walks a corridor of length N and must turn toward the cue at the junction.
///
/// Actions: 0 no-op, 1 left, 2 right. Every action advances one cell along the
/// corridor. At the junction (position N) left/right ends the episode with +1 when
/// it matches the cue and -1 otherwise; no-op waits. Episodes are cut at N + 2 steps.
///
/// Observation: one-hot position over N + 1 cells followed by two cue channels.
class TMaze : public EnvironmentBase {
 public:
  enum Action : ActionId { kWait = 0, kLeft = 1, kRight = 2 };

  struct State {
    std::size_t position = 0;
    std::size_t cue = 0;  // 0 left, 1 right
  };

  explicit TMaze(std::size_t corridor_length = 4)
      : EnvironmentBase(EnvSpec{Shape{corridor_length + 3}, 3, corridor_length + 2}), n_(corridor_length) {
    if (corridor_length == 0) throw EnvError("t-maze corridor length must be positive");
  }

  std::string name() const override { return "tmaze"; }
  std::size_t corridor_length() const { return n_; }
  const State& state() const { return state_; }

  Tensor reset(Rng& rng) override {
    begin_episode();
    state_ = State{0, std::bernoulli_distribution(0.5)(rng) ? std::size_t{1} : std::size_t{0}};
    update_info();
    return observe(true);
  }

  EnvStep step(ActionId action, Rng&) override {
    check_step(action);
    EnvStep out;
    bool terminal = false;
    if (state_.position < n_) {
      ++state_.position;
    } else if (action != kWait) {
      const std::size_t side = action == kLeft ? 0 : 1;
      out.reward = side == state_.cue ? 1.0 : -1.0;
      terminal = true;
    }
    out.done = finish_step(terminal);
    update_info();
    out.obs = observe(false);
    out.info = info_;
    return out;
  }

 private:
  Tensor observe(bool show_cue) const {
    Tensor obs(spec_.observation_shape, 0.0);
    obs[state_.position] = 1.0;
    if (show_cue) obs[n_ + 1 + state_.cue] = 1.0;
    return obs;
  }

  void update_info() {
    info_.hidden_state = {static_cast<double>(state_.position), static_cast<double>(state_.cue)};
  }

  std::size_t n_;
  State state_;
};

}  // namespace adrqn::envs
