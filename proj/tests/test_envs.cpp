#include <gtest/gtest.h>

#include <set>

#include "adrqn/envs.hpp"
#include "adrqn/pomdp/belief.hpp"

using namespace adrqn::envs;

namespace {

/// Inner environment with scripted rewards and a fixed length, for wrapper tests.
class Scripted : public EnvironmentBase {
 public:
  Scripted(std::vector<double> rewards, std::size_t length)
      : EnvironmentBase(EnvSpec{Shape{2}, 2, 1000}), rewards_(std::move(rewards)), length_(length) {}

  std::string name() const override { return "scripted"; }
  std::size_t frames() const { return frames_; }

  Tensor reset(Rng&) override {
    begin_episode();
    frames_ = 0;
    return frame();
  }

  EnvStep step(ActionId action, Rng&) override {
    check_step(action);
    EnvStep out;
    out.reward = frames_ < rewards_.size() ? rewards_[frames_] : 0.0;
    ++frames_;
    out.done = finish_step(frames_ >= length_);
    out.obs = frame();
    return out;
  }

 private:
  Tensor frame() const { return Tensor::vector({static_cast<double>(frames_), 1.0}); }

  std::vector<double> rewards_;
  std::size_t length_;
  std::size_t frames_ = 0;
};

struct Trace {
  std::vector<Tensor> obs;
  std::vector<double> rewards;
  std::vector<bool> dones;
};

Trace run(Environment& env, Rng& rng, std::size_t steps, std::uint64_t action_seed) {
  Rng act(action_seed);
  std::uniform_int_distribution<ActionId> pick(0, env.spec().num_actions - 1);
  Trace t;
  t.obs.push_back(env.reset(rng));
  for (std::size_t i = 0; i < steps; ++i) {
    if (env.done()) t.obs.push_back(env.reset(rng));
    EnvStep s = env.step(pick(act), rng);
    t.obs.push_back(s.obs);
    t.rewards.push_back(s.reward);
    t.dones.push_back(s.done);
  }
  return t;
}

}  // namespace

TEST(TMaze, ResetShowsCueAtStart) {
  TMaze env(4);
  Rng rng(3);
  const Tensor obs = env.reset(rng);
  ASSERT_EQ(obs.shape(), (Shape{7}));
  EXPECT_EQ(obs[0], 1.0);
  const std::size_t cue = env.state().cue;
  EXPECT_EQ(obs[5 + cue], 1.0);
  EXPECT_EQ(obs[5 + (1 - cue)], 0.0);
  const EnvStep s = env.step(TMaze::kWait, rng);
  EXPECT_EQ(s.obs[1], 1.0);
  EXPECT_EQ(s.obs[5] + s.obs[6], 0.0);
}

TEST(TMaze, SameSeedSameFirstObservation) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    TMaze a, b;
    Rng ra(seed), rb(seed);
    EXPECT_EQ(a.reset(ra), b.reset(rb));
  }
}

TEST(TMaze, TurningTowardTheCueWins) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    for (bool correct : {true, false}) {
      TMaze env(4);
      env.reset(rng);
      const std::size_t cue = env.state().cue;
      for (int i = 0; i < 4; ++i) EXPECT_FALSE(env.step(TMaze::kRight, rng).done);
      const ActionId turn = (cue == 0) == correct ? TMaze::kLeft : TMaze::kRight;
      const EnvStep s = env.step(turn, rng);
      EXPECT_TRUE(s.done);
      EXPECT_EQ(s.reward, correct ? 1.0 : -1.0);
    }
  }
}

TEST(TMaze, WaitingAtTheJunctionTruncates) {
  TMaze env(4);
  Rng rng(1);
  env.reset(rng);
  for (int i = 0; i < 5; ++i) EXPECT_FALSE(env.step(TMaze::kWait, rng).done);
  const EnvStep last = env.step(TMaze::kWait, rng);
  EXPECT_TRUE(last.done);
  EXPECT_EQ(last.reward, 0.0);
  EXPECT_EQ(env.steps(), env.spec().max_episode_length);
  EXPECT_THROW(env.step(TMaze::kWait, rng), EnvError);
}

TEST(TMaze, RejectsBadActionsAndStepBeforeReset) {
  TMaze env;
  Rng rng(1);
  EXPECT_THROW(env.step(0, rng), EnvError);
  env.reset(rng);
  EXPECT_THROW(env.step(3, rng), EnvError);
}

TEST(MiniPong, ResetPutsBallAtCentre) {
  MiniPong env;
  Rng rng(5);
  std::set<int> col_dirs;
  for (int i = 0; i < 50; ++i) {
    const Tensor obs = env.reset(rng);
    ASSERT_EQ(obs.shape(), (Shape{1, 12, 12}));
    EXPECT_EQ(env.state().ball_row, 6);
    EXPECT_EQ(obs[6 * 12 + 6], 1.0);
    col_dirs.insert(env.state().vel_col);
    double paddles = 0.0;
    for (double v : obs.values()) paddles += v == 0.5 ? 1.0 : 0.0;
    EXPECT_EQ(paddles, 6.0);
  }
  EXPECT_EQ(col_dirs.size(), 2u);
}

TEST(MiniPong, AgentMissLosesAndOpponentMissWins) {
  MiniPong env;
  Rng rng(1);
  MiniPong::State s;
  s.ball_row = 2;
  s.ball_col = 10;
  s.vel_row = 1;
  s.vel_col = 1;
  s.agent_top = 8;
  s.opponent_top = 4;
  env.set_state(s);
  EnvStep out = env.step(MiniPong::kStay, rng);
  EXPECT_TRUE(out.done);
  EXPECT_EQ(out.reward, -1.0);

  s.ball_col = 1;
  s.vel_col = -1;
  s.opponent_top = 8;
  s.frame = 0;
  env.set_state(s);
  out = env.step(MiniPong::kStay, rng);
  EXPECT_TRUE(out.done);
  EXPECT_EQ(out.reward, 1.0);
}

TEST(MiniPong, PaddleReturnsTheBall) {
  MiniPong env;
  Rng rng(1);
  MiniPong::State s;
  s.ball_row = 4;
  s.ball_col = 10;
  s.vel_row = 1;
  s.vel_col = 1;
  s.agent_top = 4;
  s.opponent_top = 4;
  env.set_state(s);
  const EnvStep out = env.step(MiniPong::kStay, rng);
  EXPECT_FALSE(out.done);
  EXPECT_EQ(env.state().vel_col, -1);
  EXPECT_EQ(env.state().ball_row, 5);
}

TEST(MiniPong, SingleFramesAreMarkovInsufficient) {
  MiniPong a, b;
  Rng rng(1);
  MiniPong::State s;
  s.ball_row = 5;
  s.ball_col = 6;
  s.agent_top = 4;
  s.opponent_top = 4;
  s.vel_row = 1;
  s.vel_col = 1;
  a.set_state(s);
  s.vel_row = -1;
  s.vel_col = -1;
  b.set_state(s);
  EXPECT_EQ(a.render(), b.render());
  EXPECT_NE(a.step(MiniPong::kStay, rng).obs, b.step(MiniPong::kStay, rng).obs);
}

TEST(MiniPong, IdenticalSeedsGiveIdenticalEpisodes) {
  MiniPong a, b;
  Rng ra(42), rb(42);
  const Trace ta = run(a, ra, 600, 9), tb = run(b, rb, 600, 9);
  EXPECT_EQ(ta.obs, tb.obs);
  EXPECT_EQ(ta.rewards, tb.rewards);
}

TEST(Tiger, ListenNeverEndsTheEpisodeBeforeTheHorizon) {
  auto env = make_tiger({}, 50);
  Rng rng(2);
  const Tensor first = env->reset(rng);
  EXPECT_EQ(first.max_abs(), 0.0);
  for (int t = 0; t < 49; ++t) {
    const EnvStep s = env->step(0, rng);
    EXPECT_FALSE(s.done);
    EXPECT_EQ(s.reward, -1.0);
  }
  EXPECT_TRUE(env->step(0, rng).done);
}

TEST(Tiger, ListeningAccuracyAndDoorRewards) {
  PomdpEnvironment env(adrqn::pomdp::tiger_model(), 1000);
  Rng rng(8);
  std::size_t correct = 0, total = 0;
  for (int e = 0; e < 20; ++e) {
    env.reset(rng);
    for (int t = 0; t < 500; ++t) {
      const std::size_t tiger = env.hidden_state();
      const EnvStep s = env.step(0, rng);
      correct += s.obs[tiger] == 1.0;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(correct) / total, 0.85, 0.01);
  env.reset(rng);
  const std::size_t tiger = env.hidden_state();
  EXPECT_EQ(env.step(1 + tiger, rng).reward, -100.0);
  const std::size_t now = env.hidden_state();
  EXPECT_EQ(env.step(1 + (1 - now), rng).reward, 10.0);
}

TEST(Flicker, ZeroProbabilityIsTransparent) {
  FlickerEnv wrapped(std::make_unique<MiniPong>(), 0.0, 7);
  MiniPong plain;
  Rng ra(3), rb(3);
  const Trace a = run(wrapped, ra, 300, 1), b = run(plain, rb, 300, 1);
  EXPECT_EQ(a.obs, b.obs);
  EXPECT_EQ(a.rewards, b.rewards);
}

TEST(Flicker, FullProbabilityBlanksEverything) {
  FlickerEnv wrapped(std::make_unique<MiniPong>(), 1.0);
  Rng rng(3);
  for (const Tensor& o : run(wrapped, rng, 200, 1).obs) EXPECT_EQ(o.max_abs(), 0.0);
}

TEST(Flicker, HalfProbabilityObscuresHalfAndKeepsRewards) {
  FlickerEnv wrapped(std::make_unique<MiniPong>(), 0.5, 99);
  MiniPong plain;
  Rng ra(4), rb(4);
  std::size_t obscured = 0;
  Rng act(2);
  std::uniform_int_distribution<ActionId> pick(0, 2);
  wrapped.reset(ra);
  plain.reset(rb);
  for (int i = 0; i < 10000; ++i) {
    if (wrapped.done()) {
      wrapped.reset(ra);
      plain.reset(rb);
    }
    const ActionId a = pick(act);
    const EnvStep w = wrapped.step(a, ra);
    const EnvStep p = plain.step(a, rb);
    ASSERT_EQ(w.reward, p.reward);
    ASSERT_EQ(w.done, p.done);
    if (w.info.obscured) {
      ++obscured;
      EXPECT_EQ(w.obs.max_abs(), 0.0);
    } else {
      EXPECT_EQ(w.obs, p.obs);
    }
  }
  EXPECT_NEAR(obscured / 10000.0, 0.5, 0.02);
}

TEST(Flicker, RejectsProbabilityOutsideUnitInterval) {
  EXPECT_THROW(FlickerEnv(std::make_unique<TMaze>(), 1.5), EnvError);
  EXPECT_THROW(FlickerEnv(std::make_unique<TMaze>(), -0.1), EnvError);
}

TEST(FrameSkip, ZeroSkipIsIdentity) {
  FrameSkipEnv wrapped(std::make_unique<MiniPong>(), 0);
  MiniPong plain;
  Rng ra(6), rb(6);
  const Trace a = run(wrapped, ra, 300, 4), b = run(plain, rb, 300, 4);
  EXPECT_EQ(a.obs, b.obs);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.dones, b.dones);
}

TEST(FrameSkip, FourSkipsAdvanceFiveFramesAndSumRewards) {
  auto inner = std::make_unique<Scripted>(std::vector<double>{0, 0, 1, 0, 0, 0, 0, 0, 0, 0}, 100);
  Scripted* raw = inner.get();
  FrameSkipEnv env(std::move(inner), 4);
  Rng rng(1);
  env.reset(rng);
  const EnvStep s = env.step(1, rng);
  EXPECT_EQ(raw->frames(), 5u);
  EXPECT_EQ(s.reward, 1.0);
  EXPECT_EQ(s.obs[0], 5.0);
  env.step(0, rng);
  EXPECT_EQ(raw->frames(), 10u);
}

TEST(FrameSkip, TerminalInsideTheSkipPropagates) {
  auto inner = std::make_unique<Scripted>(std::vector<double>{0, 1, 1, 1, 1}, 7);
  Scripted* raw = inner.get();
  FrameSkipEnv env(std::move(inner), 4);
  Rng rng(1);
  env.reset(rng);
  EXPECT_FALSE(env.step(0, rng).done);
  const EnvStep s = env.step(0, rng);
  EXPECT_TRUE(s.done);
  EXPECT_EQ(raw->frames(), 7u);
  EXPECT_EQ(s.reward, 0.0);
}

TEST(FrameStack, StacksOldestFirstWithZeroPadding) {
  FrameStackEnv env(std::make_unique<Scripted>(std::vector<double>{}, 100), 3);
  EXPECT_EQ(env.spec().observation_shape, (Shape{6}));
  Rng rng(1);
  const Tensor first = env.reset(rng);
  EXPECT_EQ(first, Tensor(Shape{6}, std::vector<double>{0, 0, 0, 0, 0, 1}));
  env.step(0, rng);
  const Tensor third = env.step(0, rng).obs;
  EXPECT_EQ(third, Tensor(Shape{6}, std::vector<double>{0, 1, 1, 1, 2, 1}));
}

TEST(Factory, BuildsWrappersInOrder) {
  EnvConfig cfg;
  cfg.name = "minipong";
  cfg.flicker = 0.5;
  cfg.frame_skip = 1;
  cfg.frame_stack = 2;
  EnvPtr env = make_environment(cfg, 5);
  EXPECT_EQ(env->spec().observation_shape, (Shape{2, 12, 12}));
  EXPECT_EQ(env->spec().max_episode_length, 250u);
  auto* stack = dynamic_cast<FrameStackEnv*>(env.get());
  ASSERT_NE(stack, nullptr);
  auto* flicker = dynamic_cast<FlickerEnv*>(&stack->inner());
  ASSERT_NE(flicker, nullptr);
  EXPECT_NE(dynamic_cast<FrameSkipEnv*>(&flicker->inner()), nullptr);
  EXPECT_EQ(find_layer<FlickerEnv>(*env), flicker);
  cfg.name = "nope";
  EXPECT_THROW(make_environment(cfg), EnvError);
  cfg.name = "pomdp-file";
  cfg.model_file = ADRQN_DATA_DIR "/tiger.pomdp";
  EXPECT_EQ(make_base_environment(cfg)->spec().num_actions, 3u);
}
