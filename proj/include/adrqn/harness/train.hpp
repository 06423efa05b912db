#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "adrqn/agents/training.hpp"
#include "adrqn/envs/factory.hpp"
#include "adrqn/harness/checkpoint.hpp"
#include "adrqn/harness/config.hpp"
#include "adrqn/harness/csv.hpp"
#include "adrqn/harness/evaluate.hpp"
#include "adrqn/harness/seeding.hpp"

namespace adrqn::harness {

/// Any failure inside a run, prefixed with where it happened.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  bool resume = false;         // continue from output_dir/checkpoint.*
  std::size_t stop_after = 0;  // > 0: checkpoint and return at the first episode boundary at or past this iteration
  std::ostream* progress = nullptr;
};

struct TrainResult {
  std::size_t iterations = 0;
  std::size_t episodes = 0;
  bool interrupted = false;
  double final_trailing = 0.0;  // trailing-window mean raw return at the end
  double best_trailing = 0.0;   // best trailing mean over the windows completed in this call
  std::optional<EvalResult> final_eval;
  fs::path output_dir;
};

namespace detail {

inline std::string config_without_budget(RunConfig c) {
  c.total_iterations = 0;
  c.checkpoint_period = 0;
  return config_string(c);
}

}  // namespace detail

/// The training loop. Writes episodes.csv, evals.csv and checkpoint.* to cfg.output_dir.
inline TrainResult train(const RunConfig& cfg, const TrainOptions& opt = {}) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  TrainState st;
  std::optional<Checkpoint> ck;
  if (opt.resume) {
    ck = load_checkpoint(dir);
    if (detail::config_without_budget(ck->config) != detail::config_without_budget(cfg)) {
      throw RunError("resume: configuration differs from the checkpoint in " + dir.string());
    }
    st = ck->state;
  }

  std::string where = "run seed=" + std::to_string(cfg.seed) + " dir=" + dir.string();
  try {
    const agents::NetworkSpec spec = network_spec(cfg);
    const envs::EnvConfig env_cfg = cfg.effective_env();
    envs::EnvPtr env = envs::make_environment(env_cfg, substream_seed(cfg.seed, "flicker"));
    auto* flicker = envs::find_layer<envs::FlickerEnv>(*env);

    Rng init_rng = substream(cfg.seed, "init");
    Rng env_rng = substream(cfg.seed, "env");
    Rng explore_rng = substream(cfg.seed, "explore");
    Rng replay_rng = substream(cfg.seed, "replay");
    agents::Agent agent(spec, cfg.agent, init_rng);
    replay::ReplayMemory memory(cfg.agent.replay_capacity, envs::kNoOp);

    if (ck) {
      agent.online().load(ck->archive, "online/");
      agent.target().load(ck->archive, "target/");
      load_adam(agent.optimizer(), ck->archive, "adam/");
      memory = replay::ReplayMemory::load(ck->archive, "replay/");
      env_rng = rng_from_state(st.env_rng);
      explore_rng = rng_from_state(st.explore_rng);
      replay_rng = rng_from_state(st.replay_rng);
      if (flicker) flicker->coin_rng() = rng_from_state(st.flicker_rng);
      truncate_csv(dir / "episodes.csv", st.episode_rows);
      truncate_csv(dir / "evals.csv", st.eval_rows);
      ck.reset();
    }
    CsvWriter episodes_csv(dir / "episodes.csv", kEpisodeColumns, opt.resume);
    CsvWriter evals_csv(dir / "evals.csv", kEvalColumns, opt.resume);
    std::deque<double> recent(st.recent_returns.begin(), st.recent_returns.end());

    auto snapshot = [&] {
      st.env_rng = rng_state(env_rng);
      st.explore_rng = rng_state(explore_rng);
      st.replay_rng = rng_state(replay_rng);
      st.flicker_rng = flicker ? rng_state(flicker->coin_rng()) : "";
      st.recent_returns.assign(recent.begin(), recent.end());
      save_checkpoint(dir, cfg, agent, memory, st);
    };
    auto run_eval = [&] {
      EvalOptions eo;
      eo.episodes = cfg.eval_episodes;
      eo.flicker = cfg.evaluation_flicker();
      eo.epsilon = cfg.agent.epsilon_eval;
      eo.seed = cfg.seed;
      eo.stream = st.iteration;
      EvalResult r = evaluate_network(agent.online(), env_cfg, eo);
      evals_csv.write_row({fmt(cfg.seed), fmt(st.iteration), fmt(r.mean_return), fmt(r.std_return), fmt(r.episodes),
                           fmt(r.flicker_p)});
      ++st.eval_rows;
      st.last_eval_iteration = st.iteration;
      return r;
    };

    TrainResult result;
    result.output_dir = dir;
    bool have_trailing = false;
    if (!opt.resume) snapshot();
    std::size_t next_checkpoint = cfg.checkpoint_period ? st.iteration + cfg.checkpoint_period : 0;

    while (st.iteration < cfg.total_iterations) {
      where = "run seed=" + std::to_string(cfg.seed) + " episode=" + std::to_string(st.episode) + " dir=" + dir.string();
      Tensor obs = env->reset(env_rng);
      agent.begin_episode();
      agents::ActionId prev = envs::kNoOp;
      double raw = 0.0, clipped = 0.0, loss_sum = 0.0;
      std::size_t length = 0, updates = 0;
      bool done = false;
      while (!done) {
        const agents::ActionId a = agent.act(obs, agents::epsilon(st.iteration, cfg.agent), explore_rng);
        envs::EnvStep step = env->step(a, env_rng);
        done = step.done;
        raw += step.reward;
        clipped += replay::clip_reward(step.reward);
        memory.push({prev, obs, a, replay::clip_reward(step.reward), step.obs, step.done});
        prev = a;
        obs = std::move(step.obs);
        ++length;
        ++st.iteration;
        if (st.iteration >= cfg.agent.warmup && st.iteration % cfg.agent.train_every == 0) {
          if (auto loss = agent.learn(memory, replay_rng)) {
            loss_sum += *loss;
            ++updates;
          }
        }
        if (st.iteration % cfg.agent.target_sync == 0) agent.sync();
        if (cfg.eval_period && st.iteration % cfg.eval_period == 0) run_eval();
      }

      recent.push_back(raw);
      if (recent.size() > cfg.curve_window) recent.pop_front();
      const double trailing = mean(std::vector<double>(recent.begin(), recent.end()));
      if (recent.size() == cfg.curve_window) {
        result.best_trailing = have_trailing ? std::max(result.best_trailing, trailing) : trailing;
        have_trailing = true;
      }
      result.final_trailing = trailing;
      episodes_csv.write_row({fmt(cfg.seed), fmt(st.episode), fmt(st.iteration), fmt(raw), fmt(clipped), fmt(length),
                              fmt(agents::epsilon(st.iteration, cfg.agent)),
                              updates ? fmt(loss_sum / static_cast<double>(updates)) : "nan", fmt(updates),
                              fmt(trailing)});
      ++st.episode;
      ++st.episode_rows;
      if (opt.progress && st.episode % 100 == 0) {
        *opt.progress << "seed " << cfg.seed << " episode " << st.episode << " iteration " << st.iteration
                      << " trailing " << trailing << std::endl;
      }

      if (opt.stop_after && st.iteration >= opt.stop_after && st.iteration < cfg.total_iterations) {
        snapshot();
        result.interrupted = true;
        result.iterations = st.iteration;
        result.episodes = st.episode;
        return result;
      }
      if (next_checkpoint && st.iteration >= next_checkpoint && st.iteration < cfg.total_iterations) {
        snapshot();
        next_checkpoint = st.iteration + cfg.checkpoint_period;
      }
    }

    if (cfg.total_iterations > 0) {
      where = "run seed=" + std::to_string(cfg.seed) + " final evaluation dir=" + dir.string();
      if (st.last_eval_iteration != st.iteration) {
        result.final_eval = run_eval();
      } else {
        const CsvTable evals = read_csv(dir / "evals.csv");
        EvalResult r;
        r.mean_return = std::stod(evals.rows.back()[evals.column("mean_return")]);
        r.std_return = std::stod(evals.rows.back()[evals.column("std_return")]);
        r.episodes = cfg.eval_episodes;
        r.flicker_p = cfg.evaluation_flicker();
        result.final_eval = r;
      }
      snapshot();
    }
    result.iterations = st.iteration;
    result.episodes = st.episode;
    if (!have_trailing) result.best_trailing = result.final_trailing;
    return result;
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(where + ": " + e.what());
  }
}

}  // namespace adrqn::harness
