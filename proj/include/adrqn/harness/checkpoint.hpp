#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adrqn/agents/training.hpp"
#include "adrqn/harness/config.hpp"
#include "adrqn/harness/seeding.hpp"
#include "adrqn/numkit/archive.hpp"
#include "adrqn/replay/replay_memory.hpp"

namespace adrqn::harness {

namespace fs = std::filesystem;

inline constexpr const char* kCheckpointBin = "checkpoint.bin";
inline constexpr const char* kCheckpointIni = "checkpoint.ini";

/// Loop state at an episode boundary.
struct TrainState {
  std::size_t iteration = 0;
  std::size_t episode = 0;
  std::size_t episode_rows = 0;
  std::size_t eval_rows = 0;
  std::size_t last_eval_iteration = static_cast<std::size_t>(-1);
  std::string env_rng;
  std::string explore_rng;
  std::string replay_rng;
  std::string flicker_rng;  // empty without a flicker layer
  std::vector<double> recent_returns;  // last curve_window raw returns
};

inline void save_adam(const numkit::Adam& adam, numkit::TensorArchive& ar, const std::string& prefix) {
  const auto& m = adam.first_moments();
  const auto& v = adam.second_moments();
  ar.put(prefix + "meta", numkit::Tensor::vector({static_cast<double>(adam.step_count()), static_cast<double>(m.size())}));
  for (std::size_t k = 0; k < m.size(); ++k) {
    ar.put(prefix + "m" + std::to_string(k), m[k]);
    ar.put(prefix + "v" + std::to_string(k), v[k]);
  }
}

inline void load_adam(numkit::Adam& adam, const numkit::TensorArchive& ar, const std::string& prefix) {
  const numkit::Tensor& meta = ar.get(prefix + "meta");
  std::vector<numkit::Tensor> m, v;
  for (std::size_t k = 0; k < static_cast<std::size_t>(meta[1]); ++k) {
    m.push_back(ar.get(prefix + "m" + std::to_string(k)));
    v.push_back(ar.get(prefix + "v" + std::to_string(k)));
  }
  adam.restore(static_cast<std::uint64_t>(meta[0]), std::move(m), std::move(v));
}

/// Writes checkpoint.bin and checkpoint.ini into `dir`, each via a temporary and a rename.
inline void save_checkpoint(const fs::path& dir, const RunConfig& cfg, agents::Agent& agent,
                            const replay::ReplayMemory& memory, const TrainState& st) {
  numkit::TensorArchive ar;
  agent.online().save(ar, "online/");
  agent.target().save(ar, "target/");
  save_adam(agent.optimizer(), ar, "adam/");
  memory.save(ar, "replay/");
  if (!st.recent_returns.empty()) ar.put("state/recent_returns", numkit::Tensor(numkit::Shape{st.recent_returns.size()}, st.recent_returns));

  pt::ptree tree = to_ptree(cfg);
  tree.put("state.iteration", st.iteration);
  tree.put("state.episode", st.episode);
  tree.put("state.episode_rows", st.episode_rows);
  tree.put("state.eval_rows", st.eval_rows);
  tree.put("state.last_eval_iteration", static_cast<long long>(st.last_eval_iteration));
  tree.put("state.env_rng", st.env_rng);
  tree.put("state.explore_rng", st.explore_rng);
  tree.put("state.replay_rng", st.replay_rng);
  tree.put("state.flicker_rng", st.flicker_rng);

  const fs::path bin = dir / kCheckpointBin, ini = dir / kCheckpointIni;
  ar.save(fs::path(bin).concat(".tmp"));
  {
    std::ofstream out(fs::path(ini).concat(".tmp"));
    pt::write_ini(out, tree);
    if (!out) throw std::runtime_error("cannot write " + ini.string());
  }
  fs::rename(fs::path(bin).concat(".tmp"), bin);
  fs::rename(fs::path(ini).concat(".tmp"), ini);
}

struct Checkpoint {
  RunConfig config;
  TrainState state;
  numkit::TensorArchive archive;
};

inline Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path ini = dir / kCheckpointIni, bin = dir / kCheckpointBin;
  if (!fs::exists(ini) || !fs::exists(bin)) throw std::runtime_error("no checkpoint in " + dir.string());
  pt::ptree tree;
  try {
    pt::read_ini(ini.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  Checkpoint ck;
  apply_ptree(tree, ck.config, {"state"});
  TrainState& st = ck.state;
  st.iteration = tree.get<std::size_t>("state.iteration");
  st.episode = tree.get<std::size_t>("state.episode");
  st.episode_rows = tree.get<std::size_t>("state.episode_rows");
  st.eval_rows = tree.get<std::size_t>("state.eval_rows");
  st.last_eval_iteration = static_cast<std::size_t>(tree.get<long long>("state.last_eval_iteration"));
  st.env_rng = tree.get<std::string>("state.env_rng");
  st.explore_rng = tree.get<std::string>("state.explore_rng");
  st.replay_rng = tree.get<std::string>("state.replay_rng");
  st.flicker_rng = tree.get<std::string>("state.flicker_rng", "");
  ck.archive = numkit::TensorArchive::load(bin);
  if (ck.archive.contains("state/recent_returns")) {
    const auto v = ck.archive.get("state/recent_returns").values();
    st.recent_returns.assign(v.begin(), v.end());
  }
  return ck;
}

/// Online network of a checkpoint.
inline agents::QNetwork load_network(const Checkpoint& ck, const agents::NetworkSpec& spec) {
  agents::QNetwork net(spec);
  net.load(ck.archive, "online/");
  return net;
}

}  // namespace adrqn::harness
