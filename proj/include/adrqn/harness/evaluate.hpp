#pragma once

#include <cstdint>
#include <vector>

#include "adrqn/agents/training.hpp"
#include "adrqn/envs/factory.hpp"
#include "adrqn/harness/config.hpp"
#include "adrqn/harness/csv.hpp"
#include "adrqn/harness/seeding.hpp"
#include "adrqn/harness/stats.hpp"

namespace adrqn::harness {

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  std::size_t episodes = 0;
  double flicker_p = 0.0;
  std::vector<double> returns;
};

struct EvalOptions {
  std::size_t episodes = 50;
  double flicker = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;     // picks the evaluation substreams, usually the training iteration
  CsvWriter* trace = nullptr;   // optional per-step trace
};

/// Network spec with num_actions and obs_shape filled in from the environment.
inline agents::NetworkSpec network_spec(const RunConfig& cfg) {
  const envs::EnvPtr env = envs::make_environment(cfg.effective_env());
  agents::NetworkSpec spec = cfg.network;
  spec.num_actions = env->spec().num_actions;
  spec.obs_shape = env->spec().observation_shape;
  spec.validate();
  return spec;
}

inline void check_compatible(const agents::NetworkSpec& spec, const envs::EnvSpec& env) {
  if (spec.num_actions != env.num_actions || spec.obs_shape != env.observation_shape) {
    throw std::invalid_argument("network expects " + std::to_string(spec.num_actions) + " actions and observations " +
                                numkit::shape_string(spec.obs_shape) + ", environment has " +
                                std::to_string(env.num_actions) + " and " +
                                numkit::shape_string(env.observation_shape));
  }
}

/// Greedy (or epsilon_eval) rollouts with raw rewards. The recurrent state and the
/// previous action restart at every episode. Does not modify the network.
inline EvalResult evaluate_network(const agents::QNetwork& net, envs::EnvConfig env_cfg, const EvalOptions& opt) {
  if (opt.episodes == 0) throw std::invalid_argument("evaluate: episode count must be positive");
  env_cfg.flicker = opt.flicker;
  envs::EnvPtr env = envs::make_environment(env_cfg, substream_seed(opt.seed, "eval.flicker", opt.stream));
  check_compatible(net.spec(), env->spec());
  Rng env_rng = substream(opt.seed, "eval.env", opt.stream);
  Rng act_rng = substream(opt.seed, "eval.explore", opt.stream);

  EvalResult out;
  out.flicker_p = opt.flicker;
  out.episodes = opt.episodes;
  for (std::size_t e = 0; e < opt.episodes; ++e) {
    Tensor obs = env->reset(env_rng);
    agents::RecurrentState state = net.initial_state(1);
    agents::ActionId prev = envs::kNoOp;
    double total = 0.0;
    for (std::size_t t = 0; !env->done(); ++t) {
      agents::QOutput q = net.forward(state, prev, obs);
      state = std::move(q.state);
      prev = agents::select_action(q.q, opt.epsilon, act_rng);
      envs::EnvStep step = env->step(prev, env_rng);
      total += step.reward;
      if (opt.trace) {
        opt.trace->write_row({fmt(e), fmt(t), fmt(prev), fmt(step.reward), step.done ? "1" : "0",
                              step.info.obscured ? "1" : "0"});
      }
      obs = std::move(step.obs);
    }
    out.returns.push_back(total);
  }
  out.mean_return = mean(out.returns);
  out.std_return = stddev(out.returns);
  return out;
}

struct SweepRow {
  double obs_prob = 0.0;
  EvalResult result;
};

/// Evaluates at each observation probability q (flicker p = 1 - q). Every point
/// uses the same evaluation substreams.
inline std::vector<SweepRow> sweep_network(const agents::QNetwork& net, const envs::EnvConfig& env_cfg,
                                           const std::vector<double>& obs_probs, EvalOptions opt) {
  std::vector<SweepRow> out;
  for (double q : obs_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sweep: observation probability outside [0, 1]");
    opt.flicker = 1.0 - q;
    out.push_back({q, evaluate_network(net, env_cfg, opt)});
  }
  return out;
}

inline std::vector<double> default_obs_probs() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

}  // namespace adrqn::harness
