#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "adrqn/agents/network.hpp"
#include "adrqn/numkit/adam.hpp"
#include "adrqn/numkit/loss.hpp"
#include "adrqn/replay/replay_memory.hpp"

namespace adrqn::agents {

struct AgentConfig {
  double gamma = 0.99;
  std::size_t explore = 1000000;
  double epsilon_final = 0.1;
  double epsilon_eval = 0.0;
  std::size_t target_sync = 10000;
  std::size_t batch_size = 32;
  std::size_t warmup = 10000;  // iterations before the first train step
  std::size_t train_every = 1;
  std::size_t replay_capacity = 400000;
  double learning_rate = 1e-3;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
    if (explore == 0) throw std::invalid_argument("explore must be positive");
    if (!(epsilon_final >= 0.0 && epsilon_final <= 1.0)) throw std::invalid_argument("epsilon_final must lie in [0, 1]");
    if (!(epsilon_eval >= 0.0 && epsilon_eval <= 1.0)) throw std::invalid_argument("epsilon_eval must lie in [0, 1]");
    if (target_sync == 0) throw std::invalid_argument("target_sync must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (train_every == 0) throw std::invalid_argument("train_every must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  }

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// max(epsilon_final, 1 - 0.9 * iter / explore)
inline double epsilon(std::size_t iter, const AgentConfig& cfg) {
  const double linear = 1.0 - 0.9 * static_cast<double>(iter) / static_cast<double>(cfg.explore);
  return std::max(cfg.epsilon_final, linear);
}

/// Index of the largest entry; ties go to the lowest index.
inline ActionId argmax(const Tensor& q) {
  if (q.empty()) throw std::invalid_argument("argmax of an empty tensor");
  ActionId best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

inline ActionId select_action(const Tensor& q, double eps, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("select_action: empty q");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("select_action: epsilon must lie in [0, 1]");
  if (eps > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps) {
    return std::uniform_int_distribution<ActionId>(0, q.size() - 1)(rng);
  }
  return argmax(q);
}

/// One batch of windows laid out step-major for the networks.
struct WindowBatch {
  std::vector<std::vector<ActionId>> prev_actions;  // [L][B]
  std::vector<Tensor> obs;                          // [L] of [B, ...]
  std::vector<std::vector<ActionId>> actions;       // [L][B]
  std::vector<Tensor> rewards;                      // [L] of [B]
  std::vector<Tensor> dones;                        // [L] of [B]
  Tensor final_next_obs;                            // [B, ...], o_{L}

  std::size_t length() const { return obs.size(); }
  std::size_t batch() const { return actions.empty() ? 0 : actions.front().size(); }
};

inline WindowBatch make_batch(std::span<const replay::Window> windows) {
  if (windows.empty()) throw std::invalid_argument("make_batch: no windows");
  const std::size_t L = windows.front().size(), B = windows.size();
  WindowBatch out;
  std::vector<Tensor> frames(B);
  for (std::size_t j = 0; j < L; ++j) {
    std::vector<ActionId> prev(B), act(B);
    Tensor r(Shape{B}), d(Shape{B});
    for (std::size_t b = 0; b < B; ++b) {
      const auto& t = windows[b][j];
      prev[b] = t.prev_action;
      act[b] = t.action;
      r[b] = t.reward;
      d[b] = t.done ? 1.0 : 0.0;
      frames[b] = t.obs;
    }
    out.prev_actions.push_back(std::move(prev));
    out.actions.push_back(std::move(act));
    out.rewards.push_back(std::move(r));
    out.dones.push_back(std::move(d));
    out.obs.push_back(numkit::stack(frames));
  }
  for (std::size_t b = 0; b < B; ++b) frames[b] = windows[b][L - 1].next_obs;
  out.final_next_obs = numkit::stack(frames);
  return out;
}

struct TdTargets {
  std::vector<Tensor> targets;  // [L] of [B, A], only taken entries are meaningful
  std::vector<Tensor> masks;    // [L] of [B, A], 1 on the taken action
};

/// y_j = r_j                                   if o_{j+1} is terminal
///     = r_j + gamma * max_a Q^-(h_j, a_j, o_{j+1}, a)  otherwise
///
/// The target network rolls forward from a zero state over (a_{-1}, o_0), (a_0, o_1), ...,
/// one step ahead of the online network.
inline TdTargets td_targets(const WindowBatch& batch, const QNetwork& target, double gamma) {
  const std::size_t L = batch.length(), B = batch.batch(), A = target.spec().num_actions;
  TdTargets out;
  RecurrentState state = target.initial_state(B);
  if (target.spec().recurrent()) state = target.step(state, batch.prev_actions[0], batch.obs[0]).state;
  for (std::size_t j = 0; j < L; ++j) {
    const Tensor& next_obs = j + 1 < L ? batch.obs[j + 1] : batch.final_next_obs;
    QOutput next = target.step(state, batch.actions[j], next_obs);
    state = std::move(next.state);
    Tensor y(Shape{B, A}), mask(Shape{B, A});
    for (std::size_t b = 0; b < B; ++b) {
      double best = next.q.at(b, 0);
      for (std::size_t a = 1; a < A; ++a) best = std::max(best, next.q.at(b, a));
      const double done = batch.dones[j][b];
      const double value = batch.rewards[j][b] + (done != 0.0 ? 0.0 : gamma * best);
      const ActionId taken = batch.actions[j][b];
      y.at(b, taken) = value;
      mask.at(b, taken) = 1.0;
    }
    out.targets.push_back(std::move(y));
    out.masks.push_back(std::move(mask));
  }
  return out;
}

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Tensor> dq;  // [L] of [B, A]
};

/// Masked MSE over every (step, batch) entry of the taken actions.
inline LossAndGrads window_loss(const std::vector<Tensor>& q, const TdTargets& td) {
  const std::size_t L = q.size();
  const std::size_t rows = q.front().dim(0), A = q.front().dim(1);
  Tensor pred(Shape{L * rows, A}), target(Shape{L * rows, A}), mask(Shape{L * rows, A});
  for (std::size_t j = 0; j < L; ++j) {
    std::copy(q[j].data(), q[j].data() + q[j].size(), pred.data() + j * rows * A);
    std::copy(td.targets[j].data(), td.targets[j].data() + q[j].size(), target.data() + j * rows * A);
    std::copy(td.masks[j].data(), td.masks[j].data() + q[j].size(), mask.data() + j * rows * A);
  }
  numkit::LossResult lr = numkit::mse_loss(pred, target, mask);
  LossAndGrads out;
  out.loss = lr.loss;
  for (std::size_t j = 0; j < L; ++j) {
    Tensor g(Shape{rows, A});
    std::copy(lr.grad.data() + j * rows * A, lr.grad.data() + (j + 1) * rows * A, g.data());
    out.dq.push_back(std::move(g));
  }
  return out;
}

/// Forward pass of the online network over a batch from a zero state, keeping caches.
inline std::vector<Tensor> unroll_online(const QNetwork& net, const WindowBatch& batch,
                                         std::vector<QNetwork::StepCache>& caches) {
  const std::size_t L = batch.length();
  caches.assign(L, {});
  std::vector<Tensor> q(L);
  RecurrentState state = net.initial_state(batch.batch());
  for (std::size_t j = 0; j < L; ++j) {
    QOutput out = net.step(state, batch.prev_actions[j], batch.obs[j], &caches[j]);
    q[j] = std::move(out.q);
    state = std::move(out.state);
  }
  return q;
}

/// Loss and parameter gradients for one batch (gradients are overwritten).
inline double compute_gradients(QNetwork& online, const WindowBatch& batch, const TdTargets& td) {
  numkit::zero_grads(online.parameters());
  std::vector<QNetwork::StepCache> caches;
  const std::vector<Tensor> q = unroll_online(online, batch, caches);
  const LossAndGrads lg = window_loss(q, td);
  online.backward(caches, lg.dq);
  return lg.loss;
}

/// One learning step: sample windows, build targets, BPTT, optimizer update.
/// Returns nullopt when the memory has no window of the required length yet.
inline std::optional<double> train_step(QNetwork& online, const QNetwork& target, const replay::ReplayMemory& memory,
                                        numkit::Adam& optimizer, const AgentConfig& cfg, Rng& rng) {
  const std::size_t L = online.spec().window_length();
  if (memory.eligible_windows(L) == 0) return std::nullopt;
  const auto windows = memory.sample_sequences(cfg.batch_size, L, rng);
  const WindowBatch batch = make_batch(windows);
  const TdTargets td = td_targets(batch, target, cfg.gamma);
  const double loss = compute_gradients(online, batch, td);
  optimizer.apply(online.parameters());
  return loss;
}

inline void sync_target(QNetwork& online, QNetwork& target) { target.copy_parameters_from(online); }

/// Online and target networks, optimizer and the acting state of the current episode.
class Agent {
 public:
  Agent(const NetworkSpec& spec, const AgentConfig& cfg, Rng& init_rng)
      : cfg_(cfg), online_(spec), target_(spec), optimizer_(numkit::AdamConfig{cfg.learning_rate}) {
    cfg_.validate();
    online_.init(init_rng);
    sync_target(online_, target_);
    begin_episode();
  }

  const AgentConfig& config() const { return cfg_; }
  QNetwork& online() { return online_; }
  QNetwork& target() { return target_; }
  const QNetwork& online() const { return online_; }
  numkit::Adam& optimizer() { return optimizer_; }
  const RecurrentState& state() const { return state_; }
  ActionId prev_action() const { return prev_action_; }

  void begin_episode() {
    state_ = online_.initial_state(1);
    prev_action_ = 0;
  }

  /// Feeds (a_{t-1}, o_t), advances the recurrent state and picks a_t.
  ActionId act(const Tensor& obs, double eps, Rng& rng) {
    QOutput out = online_.forward(state_, prev_action_, obs);
    state_ = std::move(out.state);
    last_q_ = std::move(out.q);
    prev_action_ = select_action(last_q_, eps, rng);
    return prev_action_;
  }

  const Tensor& last_q() const { return last_q_; }

  std::optional<double> learn(const replay::ReplayMemory& memory, Rng& rng) {
    return train_step(online_, target_, memory, optimizer_, cfg_, rng);
  }

  void sync() { sync_target(online_, target_); }

 private:
  AgentConfig cfg_;
  QNetwork online_;
  QNetwork target_;
  numkit::Adam optimizer_;
  RecurrentState state_;
  ActionId prev_action_ = 0;
  Tensor last_q_;
};

}  // namespace adrqn::agents
