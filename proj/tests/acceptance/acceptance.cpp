// Acceptance run: one PASS/FAIL line per criterion.
// Usage: adrqn_acceptance [work_dir] [criterion ...]

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../pomdp_oracles.hpp"
#include "adrqn/harness.hpp"
#include "adrqn/pomdp.hpp"
#include "pinned_configs.hpp"

namespace fs = std::filesystem;
using namespace adrqn;
using namespace adrqn::acceptance;
using harness::RunConfig;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};

fs::path g_work = "acceptance_runs";

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto families = harness::layer_gradient_suite(20, 1);
  const double secs = seconds_since(t0);
  Outcome o{secs < kGradSeconds, ""};
  for (const auto& f : families) {
    o.pass = o.pass && f.worst < kGradTolerance;
    o.detail += f.name + "=" + num(f.worst, 3) + " ";
  }
  o.detail += "time=" + num(secs, 3) + "s";
  return o;
}

Outcome belief_exactness() {
  using namespace pomdp;
  std::mt19937_64 rng(20240601);
  double worst = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PomdpModel m = testing::random_model(3, 2, 3, rng);
    const Belief b{testing::random_simplex(3, rng)};
    for (std::size_t a = 0; a < m.num_actions(); ++a) {
      for (std::size_t z = 0; z < m.num_observations(); ++z) {
        const Belief post = belief_update(m, b, a, z);
        const auto oracle = testing::enumerate_posterior(m, b, a, z);
        double sum = 0.0;
        for (std::size_t s = 0; s < 3; ++s) {
          worst = std::max(worst, std::abs(post[s] - oracle[s]));
          sum += post[s];
        }
        worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
      }
    }
  }
  // hear-left from uniform; 0.15 is stored as 1 - 0.85
  const Belief tiger = belief_update(tiger_model(), Belief::uniform(2), 0, 0);
  const bool tiger_ok = tiger[0] == 0.85 && tiger[1] == 1.0 - 0.85;
  return {worst < kBeliefTolerance && worst_norm < kBeliefTolerance && tiger_ok,
          "max_err=" + num(worst, 3) + " max_norm_err=" + num(worst_norm, 3) + " tiger=(" + num(tiger[0], 17) + ", " +
              num(tiger[1], 17) + ")"};
}

Outcome value_iteration_oracle() {
  using namespace pomdp;
  const PomdpModel m = testing::revealing_model(0.9);
  const double tol = 1e-10;
  const auto vf = belief_value_iteration(m, 30, tol);
  const auto exact = testing::tabular_values(m, 1e-13);
  const double bound = 1e-6 + tol * m.discount() / (1.0 - m.discount());
  double worst = 0.0;
  for (std::size_t s = 0; s < m.num_states(); ++s) {
    worst = std::max(worst, std::abs(vf.values[vf.grid.vertex(s)] - exact[s]));
  }
  bool monotone = true;
  for (std::size_t k = 2; k < vf.residuals.size(); ++k) monotone = monotone && vf.residuals[k] <= vf.residuals[k - 1];
  return {worst <= bound && monotone, "max_vertex_err=" + num(worst, 3) + " bound=" + num(bound, 3) +
                                          " sweeps=" + std::to_string(vf.sweeps()) +
                                          (monotone ? " residuals non-increasing" : " residuals increased")};
}

Outcome schedule_protocol() {
  std::ostringstream d;
  bool pass = true;

  agents::AgentConfig cfg;
  cfg.explore = 10000;
  const double e0 = agents::epsilon(0, cfg), e1 = agents::epsilon(cfg.explore, cfg),
               eh = agents::epsilon(cfg.explore / 2, cfg);
  pass = pass && e0 == 1.0 && e1 == 0.1 && std::abs(eh - 0.55) < 1e-15;
  d << "eps=(" << e0 << ", " << e1 << ", " << num(eh, 17) << ")";

  // sync: train the online net away from the target, then copy
  agents::NetworkSpec spec;
  spec.variant = agents::Variant::ADRQN;
  spec.num_actions = 3;
  spec.obs_shape = {5};
  spec.encoder.dense = {6};
  spec.action_embedding = 4;
  spec.hidden = 5;
  spec.unroll = 3;
  agents::AgentConfig acfg;
  acfg.batch_size = 4;
  numkit::Rng rng(99);
  agents::Agent agent(spec, acfg, rng);
  replay::ReplayMemory memory(1000);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_obs = [&] {
    numkit::Tensor t(numkit::Shape{5});
    for (double& v : t.values()) v = unit(rng);
    return t;
  };
  for (int e = 0; e < 10; ++e) {
    agents::ActionId prev = 0;
    numkit::Tensor obs = random_obs();
    for (int t = 0; t < 6; ++t) {
      numkit::Tensor next = random_obs();
      const auto a = static_cast<agents::ActionId>(t % 3);
      memory.push({prev, obs, a, 1.0 - t % 2, next, t == 5});
      prev = a;
      obs = next;
    }
  }
  for (int i = 0; i < 20; ++i) agent.learn(memory, rng);
  std::vector<numkit::Tensor> inputs;
  for (int i = 0; i < 100; ++i) inputs.push_back(random_obs());
  auto max_diff = [&] {
    double m = 0.0;
    for (const auto& x : inputs) {
      const auto qa = agent.online().forward(agent.online().initial_state(), 1, x).q;
      const auto qb = agent.target().forward(agent.target().initial_state(), 1, x).q;
      for (std::size_t i = 0; i < qa.size(); ++i) m = std::max(m, std::abs(qa[i] - qb[i]));
    }
    return m;
  };
  const double before = max_diff();
  agent.sync();
  const double after = max_diff();
  pass = pass && before > 0.0 && after == 0.0;
  d << " sync_diff before=" << num(before, 3) << " after=" << after;

  // replay windows
  replay::ReplayMemory m(1000);
  const std::size_t L = 10;
  double base = 0.0;
  for (std::size_t len : {12, 15, 10, 4}) {
    agents::ActionId prev = m.noop_action();
    for (std::size_t t = 0; t < len; ++t) {
      const agents::ActionId a = (t % 2) + 1;
      numkit::Tensor o(numkit::Shape{1}, base + t), n(numkit::Shape{1}, base + t + 1);
      m.push({prev, o, a, 0.0, n, t + 1 == len});
      prev = a;
    }
    base += 100.0;
  }
  const std::size_t n = 10000;
  std::map<std::pair<const replay::Episode*, std::size_t>, double> counts;
  bool chained = true;
  for (const auto& w : m.sample_sequences(n, L, rng)) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      chained = chained && w[i].next_obs == w[i + 1].obs && w[i].action == w[i + 1].prev_action && !w[i].done;
    }
    counts[{&w.episode(), w.start()}] += 1.0;
  }
  const std::size_t cells = m.eligible_windows(L);
  const double expected = static_cast<double>(n) / static_cast<double>(cells);
  double chi2 = 0.0;
  for (const auto& [key, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  chi2 += expected * static_cast<double>(cells - counts.size());  // unseen cells
  const double crit = boost::math::quantile(boost::math::chi_squared(static_cast<double>(cells - 1)), 0.999);
  pass = pass && chained && chi2 < crit;
  d << " chain=" << (chained ? "ok" : "broken") << " chi2=" << num(chi2, 4) << " (crit " << num(crit, 4) << ", "
    << cells << " cells)";
  return {pass, d.str()};
}

Outcome determinism() {
  RunConfig base = minipong_config();
  base.total_iterations = 3000;
  base.eval_period = 1000;
  base.eval_episodes = 10;
  base.checkpoint_period = 500;
  base.agent.warmup = 200;
  base.agent.explore = 1500;
  const fs::path dir = g_work / "determinism";
  fs::remove_all(dir);
  auto run = [&](const std::string& name, const harness::TrainOptions& opt = {}) {
    RunConfig c = base;
    c.output_dir = (dir / name).string();
    return harness::train(c, opt);
  };
  run("a");
  run("b");
  harness::TrainOptions stop;
  stop.stop_after = 1700;
  const auto first = run("resumed", stop);
  harness::TrainOptions resume;
  resume.resume = true;
  run("resumed", resume);
  bool same = true, resumed_same = first.interrupted;
  for (const char* f : {"episodes.csv", "evals.csv", "checkpoint.bin"}) {
    const std::string a = harness::read_file(dir / "a" / f);
    same = same && a == harness::read_file(dir / "b" / f);
    resumed_same = resumed_same && a == harness::read_file(dir / "resumed" / f);
  }
  return {same && resumed_same, std::string("repeat ") + (same ? "identical" : "differs") + ", resume at " +
                                    std::to_string(first.iterations) + " " +
                                    (resumed_same ? "identical" : "differs")};
}

Outcome memory_learning() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  std::size_t reached = 0;
  d << "adrqn best trailing-100:";
  for (auto seed : kSeeds) {
    RunConfig c = tmaze_config(agents::Variant::ADRQN);
    c.seed = seed;
    c.output_dir = (g_work / "tmaze" / "adrqn" / ("seed_" + std::to_string(seed))).string();
    const auto r = harness::train(c);
    if (r.best_trailing >= kTmazeTrailing) ++reached;
    d << " " << num(r.best_trailing, 3);
  }
  bool dqn_ok = true;
  d << "; dqn greedy eval:";
  for (auto seed : kSeeds) {
    RunConfig c = tmaze_config(agents::Variant::DQN);
    c.seed = seed;
    c.output_dir = (g_work / "tmaze" / "dqn" / ("seed_" + std::to_string(seed))).string();
    harness::train(c);
    const auto e = harness::evaluate_checkpoint(c.output_dir, kDqnEvalEpisodes, c.evaluation_flicker(), 1000 + seed);
    dqn_ok = dqn_ok && std::abs(e.mean_return) <= kDqnChanceBand;
    d << " " << num(e.mean_return, 3);
  }
  d << "; " << reached << "/" << kSeeds.size() << " seeds reached " << kTmazeTrailing
    << "; time=" << num(seconds_since(t0), 4) << "s";
  return {reached >= kTmazeSeedsNeeded && dqn_ok, d.str()};
}

fs::path minipong_dir() { return g_work / "minipong"; }

Outcome flicker_comparison() {
  const auto result = harness::compare(minipong_config(), {agents::Variant::ADRQN, agents::Variant::DRQN}, kSeeds,
                                       minipong_dir(), 1);
  const auto& a = result.summary[0];
  const auto& b = result.summary[1];
  const auto sign = harness::sign_test(a.finals, b.finals);
  std::ostringstream d;
  d << "adrqn mean=" << num(a.mean_return) << " drqn mean=" << num(b.mean_return) << "; per seed";
  for (std::size_t i = 0; i < a.finals.size(); ++i) d << " " << num(a.finals[i], 3) << "/" << num(b.finals[i], 3);
  d << "; sign test wins=" << sign.wins << " losses=" << sign.losses << " ties=" << sign.ties
    << " p=" << num(sign.p_value);
  return {a.mean_return >= b.mean_return, d.str()};
}

Outcome generalization_trend() {
  const auto probs = harness::default_obs_probs();
  std::vector<double> pooled(probs.size(), 0.0);
  for (auto seed : kSeeds) {
    const fs::path run = minipong_dir() / "adrqn" / ("seed_" + std::to_string(seed));
    if (!fs::exists(run / "checkpoint.ini")) {
      RunConfig c = minipong_config();
      c.seed = seed;
      c.output_dir = run.string();
      harness::train(c);
    }
    const auto rows = harness::sweep_checkpoint(run, probs, kSweepEpisodes, 2000 + seed,
                                                g_work / ("sweep_seed_" + std::to_string(seed) + ".csv"));
    for (std::size_t i = 0; i < rows.size(); ++i) pooled[i] += rows[i].result.mean_return / kSeeds.size();
  }
  const double rho = harness::spearman(probs, pooled);
  std::ostringstream d;
  d << "spearman=" << num(rho) << "; mean score by q:";
  for (std::size_t i = 0; i < probs.size(); ++i) d << " " << probs[i] << ":" << num(pooled[i], 3);
  return {rho > 0.0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_correctness", gradient_correctness},
      {"belief_oracle_exactness", belief_exactness},
      {"value_iteration_oracle", value_iteration_oracle},
      {"schedule_protocol_exactness", schedule_protocol},
      {"determinism", determinism},
      {"memory_learning_tmaze", memory_learning},
      {"flickering_comparison_minipong", flicker_comparison},
      {"generalization_trend_minipong", generalization_trend},
  };
  std::vector<std::string> only;
  if (argc > 1) g_work = argv[1];
  for (int i = 2; i < argc; ++i) only.emplace_back(argv[i]);
  fs::create_directories(g_work);

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
