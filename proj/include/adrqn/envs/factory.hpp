#pragma once

#include <string>

#include "adrqn/envs/minipong.hpp"
#include "adrqn/envs/pomdp_env.hpp"
#include "adrqn/envs/tmaze.hpp"
#include "adrqn/envs/wrappers.hpp"
#include "adrqn/pomdp/parser.hpp"

namespace adrqn::envs {

struct EnvConfig {
  std::string name = "tmaze";  // tmaze | minipong | tiger | pomdp-file
  std::size_t corridor_length = 4;
  MiniPongConfig minipong;
  pomdp::TigerParams tiger;
  std::size_t horizon = 50;
  std::string model_file;
  double flicker = 0.0;
  std::size_t frame_skip = 0;
  std::size_t frame_stack = 1;
};

/// Base environment without wrappers.
inline EnvPtr make_base_environment(const EnvConfig& cfg) {
  if (cfg.name == "tmaze") return std::make_unique<TMaze>(cfg.corridor_length);
  if (cfg.name == "minipong") return std::make_unique<MiniPong>(cfg.minipong);
  if (cfg.name == "tiger") return make_tiger(cfg.tiger, cfg.horizon);
  if (cfg.name == "pomdp-file") {
    if (cfg.model_file.empty()) throw EnvError("pomdp-file environment needs a model_file");
    return std::make_unique<PomdpEnvironment>(pomdp::load_pomdp(cfg.model_file), cfg.horizon, "pomdp-file");
  }
  throw EnvError("unknown environment '" + cfg.name + "' (expected tmaze, minipong, tiger or pomdp-file)");
}

/// Base environment, then frame skip, then flicker, then frame stacking.
inline EnvPtr make_environment(const EnvConfig& cfg, std::uint64_t flicker_seed = 0) {
  EnvPtr env = make_base_environment(cfg);
  if (cfg.frame_skip > 0) env = std::make_unique<FrameSkipEnv>(std::move(env), cfg.frame_skip);
  if (cfg.flicker != 0.0) env = std::make_unique<FlickerEnv>(std::move(env), cfg.flicker, flicker_seed);
  if (cfg.frame_stack > 1) env = std::make_unique<FrameStackEnv>(std::move(env), cfg.frame_stack);
  return env;
}

}  // namespace adrqn::envs
