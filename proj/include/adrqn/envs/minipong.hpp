#pragma once

#include <algorithm>
#include <random>

#include "adrqn/envs/environment.hpp"

namespace adrqn::envs {

struct MiniPongConfig {
  std::size_t grid = 12;
  std::size_t paddle = 3;
  std::size_t max_steps = 500;
};

/// Single-frame Pong on a G x G grid. The agent paddle sits on the right column,
/// a tracking opponent on the left. The ball moves one cell diagonally per frame
/// and bounces off the top and bottom walls and off paddles.
///
/// Actions: 0 no-op, 1 up, 2 down. Reward +1 when the opponent misses, -1 when the
/// agent misses; either ends the episode. The opponent moves one cell toward the
/// ball row on every other frame, so fast diagonals can beat it.
///
/// Observation [1, G, G]: ball cell 1.0, paddle cells 0.5. One frame carries no
/// velocity information.
class MiniPong : public EnvironmentBase {
 public:
  enum Action : ActionId { kStay = 0, kUp = 1, kDown = 2 };

  struct State {
    int ball_row = 0;
    int ball_col = 0;
    int vel_row = 1;
    int vel_col = 1;
    int agent_top = 0;
    int opponent_top = 0;
    std::size_t frame = 0;
  };

  explicit MiniPong(MiniPongConfig config = {})
      : EnvironmentBase(EnvSpec{Shape{1, config.grid, config.grid}, 3, config.max_steps}), config_(config) {
    if (config.grid < 5) throw EnvError("minipong grid must be at least 5");
    if (config.paddle == 0 || config.paddle >= config.grid) throw EnvError("minipong paddle must fit the grid");
  }

  std::string name() const override { return "minipong"; }
  const MiniPongConfig& config() const { return config_; }
  const State& state() const { return state_; }

  /// Places the game in an arbitrary state and starts an episode from it.
  void set_state(const State& s) {
    begin_episode();
    state_ = s;
    update_info();
  }

  Tensor reset(Rng& rng) override {
    begin_episode();
    const int g = static_cast<int>(config_.grid);
    const int centre = g / 2;
    const int paddle_top = (g - static_cast<int>(config_.paddle)) / 2;
    std::bernoulli_distribution coin(0.5);
    state_.ball_row = centre;
    state_.ball_col = centre;
    state_.vel_row = coin(rng) ? 1 : -1;
    state_.vel_col = coin(rng) ? 1 : -1;
    state_.agent_top = paddle_top;
    state_.opponent_top = paddle_top;
    state_.frame = 0;
    update_info();
    return render();
  }

  EnvStep step(ActionId action, Rng&) override {
    check_step(action);
    const int g = static_cast<int>(config_.grid);
    const int max_top = g - static_cast<int>(config_.paddle);
    State& s = state_;
    if (action == kUp) s.agent_top = std::max(0, s.agent_top - 1);
    if (action == kDown) s.agent_top = std::min(max_top, s.agent_top + 1);
    if (s.frame % 2 == 1) {
      const int centre = s.opponent_top + static_cast<int>(config_.paddle) / 2;
      if (s.ball_row < centre) s.opponent_top = std::max(0, s.opponent_top - 1);
      if (s.ball_row > centre) s.opponent_top = std::min(max_top, s.opponent_top + 1);
    }
    ++s.frame;

    if (s.ball_row + s.vel_row < 0 || s.ball_row + s.vel_row >= g) s.vel_row = -s.vel_row;
    s.ball_row += s.vel_row;

    EnvStep out;
    bool terminal = false;
    const int next_col = s.ball_col + s.vel_col;
    if (next_col == g - 1) {
      if (covers(s.agent_top, s.ball_row)) {
        s.vel_col = -s.vel_col;
      } else {
        s.ball_col = next_col;
        out.reward = -1.0;
        terminal = true;
      }
    } else if (next_col == 0) {
      if (covers(s.opponent_top, s.ball_row)) {
        s.vel_col = -s.vel_col;
      } else {
        s.ball_col = next_col;
        out.reward = 1.0;
        terminal = true;
      }
    } else {
      s.ball_col = next_col;
    }
    out.done = finish_step(terminal);
    update_info();
    out.obs = render();
    out.info = info_;
    return out;
  }

  /// Observation of the current state.
  Tensor render() const {
    const std::size_t g = config_.grid;
    Tensor obs(spec_.observation_shape, 0.0);
    for (std::size_t k = 0; k < config_.paddle; ++k) {
      obs[(static_cast<std::size_t>(state_.agent_top) + k) * g + (g - 1)] = 0.5;
      obs[(static_cast<std::size_t>(state_.opponent_top) + k) * g] = 0.5;
    }
    obs[static_cast<std::size_t>(state_.ball_row) * g + static_cast<std::size_t>(state_.ball_col)] = 1.0;
    return obs;
  }

 private:
  bool covers(int top, int row) const { return row >= top && row < top + static_cast<int>(config_.paddle); }

  void update_info() {
    const State& s = state_;
    info_.hidden_state = {static_cast<double>(s.ball_row),  static_cast<double>(s.ball_col),
                          static_cast<double>(s.vel_row),   static_cast<double>(s.vel_col),
                          static_cast<double>(s.agent_top), static_cast<double>(s.opponent_top)};
  }

  MiniPongConfig config_;
  State state_;
};

}  // namespace adrqn::envs
