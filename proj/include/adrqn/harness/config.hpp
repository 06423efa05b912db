#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrqn/agents/training.hpp"
#include "adrqn/envs/factory.hpp"

namespace adrqn::harness {

namespace pt = boost::property_tree;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t total_iterations = 50000;
  std::size_t eval_period = 0;  // 0: only the final evaluation
  std::size_t eval_episodes = 50;
  double eval_flicker = -1.0;  // < 0: same as env.flicker
  std::size_t checkpoint_period = 10000;
  std::size_t curve_window = 100;  // trailing window of the training curve
  std::string output_dir = "runs/default";

  envs::EnvConfig env;
  agents::NetworkSpec network;  // num_actions and obs_shape come from the environment
  agents::AgentConfig agent;

  double evaluation_flicker() const { return eval_flicker < 0.0 ? env.flicker : eval_flicker; }

  /// Environment actually built: DQN gets its frame stack here.
  envs::EnvConfig effective_env() const {
    envs::EnvConfig e = env;
    e.frame_stack = network.variant == agents::Variant::DQN ? network.stacked_frames : 1;
    return e;
  }

  void validate() const {
    if (eval_episodes == 0) throw ConfigError("run.eval_episodes must be positive");
    if (curve_window == 0) throw ConfigError("run.curve_window must be positive");
    if (eval_flicker > 1.0) throw ConfigError("run.eval_flicker must be at most 1");
    if (!(env.flicker >= 0.0 && env.flicker <= 1.0)) throw ConfigError("env.flicker must lie in [0, 1]");
    if (network.variant == agents::Variant::DQN && network.stacked_frames == 0) {
      throw ConfigError("network.stacked_frames must be positive");
    }
    try {
      agent.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("agent: ") + e.what());
    }
  }
};

/// "16:3:1,32:3:2" -> conv layers (channels:kernel:stride)
inline std::vector<agents::ConvLayerSpec> parse_conv(const std::string& text) {
  std::vector<agents::ConvLayerSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    agents::ConvLayerSpec c;
    char s1 = 0, s2 = 0;
    std::istringstream is(item);
    if (!(is >> c.channels >> s1 >> c.kernel >> s2 >> c.stride) || s1 != ':' || s2 != ':') {
      throw ConfigError("bad conv layer '" + item + "' (expected channels:kernel:stride)");
    }
    if (c.channels == 0 || c.kernel == 0 || c.stride == 0) throw ConfigError("conv layer sizes must be positive");
    out.push_back(c);
  }
  return out;
}

inline std::string format_conv(const std::vector<agents::ConvLayerSpec>& conv) {
  std::string out;
  for (const auto& c : conv) {
    if (!out.empty()) out += ",";
    out += std::to_string(c.channels) + ":" + std::to_string(c.kernel) + ":" + std::to_string(c.stride);
  }
  return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad layer size '" + item + "'");
    }
    if (v == 0) throw ConfigError("layer sizes must be positive");
    out.push_back(v);
  }
  return out;
}

inline std::string format_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t s : sizes) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Reads keys from a ptree and remembers which ones were used.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& key, T& value) {
    used_.insert(key);
    auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!node) return;
    try {
      value = node->get_value<T>();
    } catch (const pt::ptree_bad_data&) {
      throw ConfigError("config key " + key + ": cannot parse '" + node->data() + "'");
    }
  }

  void get(const std::string& key, std::string& value) {
    used_.insert(key);
    if (auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'))) value = node->data();
  }

  void check_unknown(const std::set<std::string>& ignored_sections) const {
    for (const auto& [section, body] : tree_) {
      if (ignored_sections.count(section)) continue;
      if (body.empty()) throw ConfigError("config key '" + section + "' outside of a section");
      for (const auto& [key, value] : body) {
        if (!used_.count(section + "." + key)) throw ConfigError("unknown config key " + section + "." + key);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

}  // namespace detail

inline pt::ptree to_ptree(const RunConfig& c) {
  using detail::format_double;
  pt::ptree t;
  t.put("run.seed", c.seed);
  t.put("run.total_iterations", c.total_iterations);
  t.put("run.eval_period", c.eval_period);
  t.put("run.eval_episodes", c.eval_episodes);
  t.put("run.eval_flicker", format_double(c.eval_flicker));
  t.put("run.checkpoint_period", c.checkpoint_period);
  t.put("run.curve_window", c.curve_window);
  t.put("run.output_dir", c.output_dir);

  t.put("env.name", c.env.name);
  t.put("env.corridor_length", c.env.corridor_length);
  t.put("env.minipong_grid", c.env.minipong.grid);
  t.put("env.minipong_paddle", c.env.minipong.paddle);
  t.put("env.minipong_max_steps", c.env.minipong.max_steps);
  t.put("env.tiger_accuracy", format_double(c.env.tiger.listen_accuracy));
  t.put("env.tiger_listen_reward", format_double(c.env.tiger.listen_reward));
  t.put("env.tiger_treasure_reward", format_double(c.env.tiger.treasure_reward));
  t.put("env.tiger_penalty", format_double(c.env.tiger.tiger_reward));
  t.put("env.horizon", c.env.horizon);
  t.put("env.model_file", c.env.model_file);
  t.put("env.flicker", format_double(c.env.flicker));
  t.put("env.frame_skip", c.env.frame_skip);

  t.put("network.variant", agents::to_string(c.network.variant));
  t.put("network.conv", format_conv(c.network.encoder.conv));
  t.put("network.dense", format_sizes(c.network.encoder.dense));
  t.put("network.action_embedding", c.network.action_embedding);
  t.put("network.hidden", c.network.hidden);
  t.put("network.unroll", c.network.unroll);
  t.put("network.stacked_frames", c.network.stacked_frames);

  t.put("agent.gamma", format_double(c.agent.gamma));
  t.put("agent.explore", c.agent.explore);
  t.put("agent.epsilon_final", format_double(c.agent.epsilon_final));
  t.put("agent.epsilon_eval", format_double(c.agent.epsilon_eval));
  t.put("agent.target_sync", c.agent.target_sync);
  t.put("agent.batch_size", c.agent.batch_size);
  t.put("agent.warmup", c.agent.warmup);
  t.put("agent.train_every", c.agent.train_every);
  t.put("agent.replay_capacity", c.agent.replay_capacity);
  t.put("agent.learning_rate", format_double(c.agent.learning_rate));
  return t;
}

/// Overlays the keys present in `tree` on `c`. Sections in `ignored_sections` are skipped.
inline void apply_ptree(const pt::ptree& tree, RunConfig& c, const std::set<std::string>& ignored_sections = {}) {
  detail::Reader r(tree);
  r.get("run.seed", c.seed);
  r.get("run.total_iterations", c.total_iterations);
  r.get("run.eval_period", c.eval_period);
  r.get("run.eval_episodes", c.eval_episodes);
  r.get("run.eval_flicker", c.eval_flicker);
  r.get("run.checkpoint_period", c.checkpoint_period);
  r.get("run.curve_window", c.curve_window);
  r.get("run.output_dir", c.output_dir);

  r.get("env.name", c.env.name);
  r.get("env.corridor_length", c.env.corridor_length);
  r.get("env.minipong_grid", c.env.minipong.grid);
  r.get("env.minipong_paddle", c.env.minipong.paddle);
  r.get("env.minipong_max_steps", c.env.minipong.max_steps);
  r.get("env.tiger_accuracy", c.env.tiger.listen_accuracy);
  r.get("env.tiger_listen_reward", c.env.tiger.listen_reward);
  r.get("env.tiger_treasure_reward", c.env.tiger.treasure_reward);
  r.get("env.tiger_penalty", c.env.tiger.tiger_reward);
  r.get("env.horizon", c.env.horizon);
  r.get("env.model_file", c.env.model_file);
  r.get("env.flicker", c.env.flicker);
  r.get("env.frame_skip", c.env.frame_skip);

  std::string variant = agents::to_string(c.network.variant);
  std::string conv = format_conv(c.network.encoder.conv);
  std::string dense = format_sizes(c.network.encoder.dense);
  r.get("network.variant", variant);
  r.get("network.conv", conv);
  r.get("network.dense", dense);
  try {
    c.network.variant = agents::parse_variant(variant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.network.encoder.conv = parse_conv(conv);
  c.network.encoder.dense = parse_sizes(dense);
  r.get("network.action_embedding", c.network.action_embedding);
  r.get("network.hidden", c.network.hidden);
  r.get("network.unroll", c.network.unroll);
  r.get("network.stacked_frames", c.network.stacked_frames);

  r.get("agent.gamma", c.agent.gamma);
  r.get("agent.explore", c.agent.explore);
  r.get("agent.epsilon_final", c.agent.epsilon_final);
  r.get("agent.epsilon_eval", c.agent.epsilon_eval);
  r.get("agent.target_sync", c.agent.target_sync);
  r.get("agent.batch_size", c.agent.batch_size);
  r.get("agent.warmup", c.agent.warmup);
  r.get("agent.train_every", c.agent.train_every);
  r.get("agent.replay_capacity", c.agent.replay_capacity);
  r.get("agent.learning_rate", c.agent.learning_rate);
  r.check_unknown(ignored_sections);
}

inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  apply_ptree(tree, base);
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(in, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_config(std::ostream& os, const RunConfig& c) { pt::write_ini(os, to_ptree(c)); }

inline std::string config_string(const RunConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

}  // namespace adrqn::harness
