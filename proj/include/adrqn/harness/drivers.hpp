#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "adrqn/harness/checkpoint.hpp"
#include "adrqn/harness/evaluate.hpp"
#include "adrqn/harness/train.hpp"

namespace adrqn::harness {

/// Evaluates the online network stored in a run directory.
/// `env_override` replaces the checkpoint's environment (its spec must match the network).
inline EvalResult evaluate_checkpoint(const fs::path& run_dir, std::size_t episodes, double flicker,
                                      std::uint64_t seed, const std::optional<envs::EnvConfig>& env_override = {},
                                      CsvWriter* trace = nullptr) {
  const Checkpoint ck = load_checkpoint(run_dir);
  const agents::QNetwork net = load_network(ck, network_spec(ck.config));
  RunConfig cfg = ck.config;
  if (env_override) cfg.env = *env_override;
  EvalOptions eo;
  eo.episodes = episodes;
  eo.flicker = flicker;
  eo.epsilon = cfg.agent.epsilon_eval;
  eo.seed = seed;
  eo.stream = ck.state.iteration;
  eo.trace = trace;
  return evaluate_network(net, cfg.effective_env(), eo);
}

/// Sweep over observation probabilities; writes one row per probability to `csv_path`.
inline std::vector<SweepRow> sweep_checkpoint(const fs::path& run_dir, const std::vector<double>& obs_probs,
                                              std::size_t episodes, std::uint64_t seed, const fs::path& csv_path) {
  const Checkpoint ck = load_checkpoint(run_dir);
  const agents::QNetwork net = load_network(ck, network_spec(ck.config));
  EvalOptions eo;
  eo.episodes = episodes;
  eo.epsilon = ck.config.agent.epsilon_eval;
  eo.seed = seed;
  eo.stream = ck.state.iteration;
  const auto rows = sweep_network(net, ck.config.effective_env(), obs_probs, eo);
  CsvWriter out(csv_path, kSweepColumns);
  for (const auto& r : rows) {
    out.write_row({fmt(seed), fmt(r.obs_prob), fmt(r.result.flicker_p), fmt(r.result.mean_return),
                   fmt(r.result.std_return), fmt(r.result.episodes)});
  }
  return rows;
}

struct CompareRun {
  agents::Variant variant;
  std::uint64_t seed = 0;
  TrainResult result;
};

struct VariantSummary {
  agents::Variant variant;
  std::size_t seeds = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double min_return = 0.0;
  double max_return = 0.0;
  std::vector<double> finals;  // final evaluation mean per seed, in seed order
};

struct CompareResult {
  std::vector<CompareRun> runs;  // variant-major, seeds in the given order
  std::vector<VariantSummary> summary;
};

/// Trains every (variant, seed) pair on the same environment and budget into
/// out_dir/<variant>/seed_<n>, then writes runs.csv and summary.csv to out_dir.
inline CompareResult compare(const RunConfig& base, const std::vector<agents::Variant>& variants,
                             const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                             std::size_t workers = 1, std::ostream* progress = nullptr) {
  if (variants.empty() || seeds.empty()) throw std::invalid_argument("compare: need at least one variant and one seed");
  fs::create_directories(out_dir);
  CompareResult out;
  std::vector<RunConfig> configs;
  for (auto v : variants) {
    for (auto s : seeds) {
      RunConfig c = base;
      c.network.variant = v;
      c.seed = s;
      c.output_dir = (out_dir / agents::to_string(v) / ("seed_" + std::to_string(s))).string();
      configs.push_back(c);
      out.runs.push_back({v, s, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::exception_ptr> errors(configs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out.runs[i].result = train(configs[i]);
        if (progress) {
          std::lock_guard lock(mu);
          *progress << agents::to_string(out.runs[i].variant) << " seed " << out.runs[i].seed << " final "
                    << out.runs[i].result.final_eval->mean_return << std::endl;
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, configs.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CsvWriter runs_csv(out_dir / "runs.csv", kRunColumns);
  for (const auto& r : out.runs) {
    const EvalResult& e = *r.result.final_eval;
    runs_csv.write_row({agents::to_string(r.variant), fmt(r.seed), fmt(e.mean_return), fmt(e.std_return),
                        fmt(e.episodes), fmt(r.result.iterations), fmt(r.result.episodes)});
  }
  CsvWriter summary_csv(out_dir / "summary.csv", kSummaryColumns);
  for (auto v : variants) {
    VariantSummary s;
    s.variant = v;
    for (const auto& r : out.runs) {
      if (r.variant == v) s.finals.push_back(r.result.final_eval->mean_return);
    }
    s.seeds = s.finals.size();
    s.mean_return = mean(s.finals);
    s.std_return = stddev(s.finals);
    s.min_return = *std::min_element(s.finals.begin(), s.finals.end());
    s.max_return = *std::max_element(s.finals.begin(), s.finals.end());
    summary_csv.write_row({agents::to_string(v), fmt(s.seeds), fmt(s.mean_return), fmt(s.std_return),
                           fmt(s.min_return), fmt(s.max_return)});
    out.summary.push_back(std::move(s));
  }
  return out;
}

}  // namespace adrqn::harness
