#pragma once

#include <cstdint>
#include <deque>
#include <random>

#include "adrqn/envs/environment.hpp"

namespace adrqn::envs {

/// Forwards everything to an owned inner environment.
class Wrapper : public Environment {
 public:
  explicit Wrapper(EnvPtr inner) : inner_(std::move(inner)) {
    if (!inner_) throw EnvError("wrapper needs an inner environment");
  }

  std::string name() const override { return inner_->name(); }
  const EnvSpec& spec() const override { return inner_->spec(); }
  Tensor reset(Rng& rng) override { return inner_->reset(rng); }
  EnvStep step(ActionId action, Rng& rng) override { return inner_->step(action, rng); }
  bool done() const override { return inner_->done(); }
  const StepInfo& last_info() const override { return inner_->last_info(); }

  Environment& inner() { return *inner_; }
  const Environment& inner() const { return *inner_; }

 protected:
  EnvPtr inner_;
};

/// Replaces each emitted observation, including the reset one, by zeros with probability p.
///
/// The flicker coin has its own generator, so the inner environment sees exactly
/// the same random stream with or without the wrapper.
class FlickerEnv : public Wrapper {
 public:
  FlickerEnv(EnvPtr inner, double p, std::uint64_t seed = 0) : Wrapper(std::move(inner)), p_(p), coin_rng_(seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw EnvError("flicker probability must lie in [0, 1], got " + std::to_string(p));
  }

  double probability() const { return p_; }
  Rng& coin_rng() { return coin_rng_; }

  Tensor reset(Rng& rng) override {
    Tensor obs = inner_->reset(rng);
    info_ = inner_->last_info();
    apply(obs);
    return obs;
  }

  EnvStep step(ActionId action, Rng& rng) override {
    EnvStep out = inner_->step(action, rng);
    info_ = out.info;
    apply(out.obs);
    out.info = info_;
    return out;
  }

  const StepInfo& last_info() const override { return info_; }

 private:
  void apply(Tensor& obs) {
    bool hide = p_ >= 1.0;
    if (p_ > 0.0 && p_ < 1.0) hide = std::bernoulli_distribution(p_)(coin_rng_);
    info_.obscured = hide;
    if (hide) obs.fill(0.0);
  }

  double p_;
  Rng coin_rng_;
  StepInfo info_;
};

/// Repeats each action for k + 1 inner frames. Rewards are summed; the episode
/// ends as soon as any inner frame ends it.
class FrameSkipEnv : public Wrapper {
 public:
  FrameSkipEnv(EnvPtr inner, std::size_t k) : Wrapper(std::move(inner)), k_(k) {
    spec_ = inner_->spec();
    spec_.max_episode_length = (spec_.max_episode_length + k_) / (k_ + 1);
  }

  std::size_t skip() const { return k_; }
  const EnvSpec& spec() const override { return spec_; }

  EnvStep step(ActionId action, Rng& rng) override {
    EnvStep out = inner_->step(action, rng);
    for (std::size_t i = 0; i < k_ && !out.done; ++i) {
      EnvStep next = inner_->step(action, rng);
      next.reward += out.reward;
      out = std::move(next);
    }
    return out;
  }

 private:
  std::size_t k_;
  EnvSpec spec_;
};

/// Concatenates the last n observations along the leading axis, oldest first.
/// Missing history at the start of an episode is zero-filled.
class FrameStackEnv : public Wrapper {
 public:
  FrameStackEnv(EnvPtr inner, std::size_t n) : Wrapper(std::move(inner)), n_(n) {
    if (n == 0) throw EnvError("frame stack depth must be positive");
    spec_ = inner_->spec();
    spec_.observation_shape[0] *= n_;
  }

  std::size_t depth() const { return n_; }
  const EnvSpec& spec() const override { return spec_; }

  Tensor reset(Rng& rng) override {
    Tensor obs = inner_->reset(rng);
    frames_.assign(n_ - 1, Tensor::zeros_like(obs));
    frames_.push_back(std::move(obs));
    return stacked();
  }

  EnvStep step(ActionId action, Rng& rng) override {
    EnvStep out = inner_->step(action, rng);
    frames_.pop_front();
    frames_.push_back(std::move(out.obs));
    out.obs = stacked();
    return out;
  }

 private:
  Tensor stacked() const {
    if (n_ == 1) return frames_.back();
    Tensor out(spec_.observation_shape, 0.0);
    const std::size_t frame_size = frames_.front().size();
    for (std::size_t i = 0; i < n_; ++i) {
      std::copy(frames_[i].data(), frames_[i].data() + frame_size, out.data() + i * frame_size);
    }
    return out;
  }

  std::size_t n_;
  EnvSpec spec_;
  std::deque<Tensor> frames_;
};

/// First layer of type T in a wrapper chain, or nullptr.
template <typename T>
T* find_layer(Environment& env) {
  Environment* e = &env;
  while (e) {
    if (auto* hit = dynamic_cast<T*>(e)) return hit;
    auto* w = dynamic_cast<Wrapper*>(e);
    e = w ? &w->inner() : nullptr;
  }
  return nullptr;
}

}  // namespace adrqn::envs
