// adrqn command-line driver.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "adrqn/harness.hpp"
#include "adrqn/pomdp.hpp"

namespace fs = std::filesystem;
using namespace adrqn;
using namespace adrqn::harness;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::optional<double> flicker;
  std::optional<std::string> env;
  std::optional<std::size_t> iterations;
  std::vector<std::string> sets;

  void add_to(CLI::App* app, bool with_run_flags = true) {
    app->add_option("--config", config, "INI config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "run seed");
    app->add_option("--out", out, "output directory");
    app->add_option("--variant", variant, "adrqn | drqn | ddrqn | dqn");
    app->add_option("--flicker", flicker, "flicker probability used in training")->check(CLI::Range(0.0, 1.0));
    app->add_option("--env", env, "tmaze | minipong | tiger | pomdp-file");
    if (with_run_flags) app->add_option("--iterations", iterations, "total training iterations");
    app->add_option("--set", sets, "extra override, section.key=value (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config.empty()) c = load_config(config);
    if (!sets.empty()) {
      pt::ptree tree;
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || s.find('.') > eq) throw ConfigError("--set expects section.key=value, got " + s);
        tree.put(s.substr(0, eq), s.substr(eq + 1));
      }
      apply_ptree(tree, c);
    }
    if (seed) c.seed = *seed;
    if (out) c.output_dir = *out;
    if (variant) c.network.variant = agents::parse_variant(*variant);
    if (flicker) c.env.flicker = *flicker;
    if (env) c.env.name = *env;
    if (iterations) c.total_iterations = *iterations;
    c.validate();
    return c;
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v)) throw std::invalid_argument("bad list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void print_eval(const EvalResult& r) {
  std::printf("mean_return %.6g  std %.6g  episodes %zu  flicker_p %.6g\n", r.mean_return, r.std_return, r.episodes,
              r.flicker_p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADRQN training, evaluation and oracle tools"};
  app.require_subcommand(1);

  // train
  Overrides train_o;
  bool resume = false;
  std::size_t stop_after = 0;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "train one agent");
  train_o.add_to(train_cmd);
  train_cmd->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
  train_cmd->add_option("--stop-after", stop_after, "checkpoint and stop at the first episode end past N iterations");
  train_cmd->add_flag("--quiet", quiet, "no progress lines");

  // evaluate
  std::string run_dir, trace_path;
  std::optional<std::size_t> eval_episodes;
  std::optional<double> eval_flicker;
  std::optional<std::uint64_t> eval_seed;
  auto* eval_cmd = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
  eval_cmd->add_option("--out,--run", run_dir, "run directory holding checkpoint.*")->required();
  eval_cmd->add_option("--episodes", eval_episodes, "episode count (default: run.eval_episodes)");
  eval_cmd->add_option("--flicker", eval_flicker, "flicker probability (default: the run's)")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed (default: the run's)");
  eval_cmd->add_option("--trace", trace_path, "write a per-step trace CSV");

  // sweep
  std::string sweep_run, sweep_csv, probs_text;
  std::optional<std::size_t> sweep_episodes;
  std::optional<std::uint64_t> sweep_seed;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a checkpoint over observation probabilities");
  sweep_cmd->add_option("--run", sweep_run, "run directory holding checkpoint.*")->required();
  sweep_cmd->add_option("--out", sweep_csv, "CSV path (default: <run>/sweep.csv)");
  sweep_cmd->add_option("--probs", probs_text, "comma separated observation probabilities (default 0,0.1,...,1)");
  sweep_cmd->add_option("--episodes", sweep_episodes, "episodes per point (default: run.eval_episodes)");
  sweep_cmd->add_option("--seed", sweep_seed, "evaluation seed (default: the run's)");

  // compare
  Overrides cmp_o;
  std::string variants_text = "adrqn,drqn,ddrqn";
  std::string seeds_text = "1,2,3,4,5";
  std::size_t workers = 1;
  auto* cmp_cmd = app.add_subcommand("compare", "train several variants over several seeds");
  cmp_o.add_to(cmp_cmd);
  cmp_cmd->add_option("--variants", variants_text, "comma separated variants");
  cmp_cmd->add_option("--seeds", seeds_text, "comma separated seeds");
  cmp_cmd->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);

  // grad-check
  std::size_t gc_instances = 20;
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference check of every layer and network variant");
  gc_cmd->add_option("--instances", gc_instances, "random instances per layer family");
  gc_cmd->add_option("--seed", gc_seed, "seed");
  gc_cmd->add_option("--tolerance", gc_tol, "maximum relative error");

  // oracle
  std::string model_path;
  std::size_t resolution = 200, oracle_episodes = 0, horizon = 50;
  double vi_tol = 1e-9;
  std::uint64_t oracle_seed = 1;
  auto* oracle_cmd = app.add_subcommand("oracle", "belief-grid value iteration on a small POMDP");
  oracle_cmd->add_option("--model", model_path, "model file (default: built-in tiger)")->check(CLI::ExistingFile);
  oracle_cmd->add_option("--resolution", resolution, "belief grid resolution");
  oracle_cmd->add_option("--tolerance", vi_tol, "sup-norm stopping tolerance");
  oracle_cmd->add_option("--episodes", oracle_episodes, "also simulate the greedy policy for N episodes");
  oracle_cmd->add_option("--horizon", horizon, "simulation horizon");
  oracle_cmd->add_option("--seed", oracle_seed, "simulation seed");

  // print-config
  Overrides print_o;
  auto* print_cmd = app.add_subcommand("print-config", "print the resolved configuration with all defaults");
  print_o.add_to(print_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*print_cmd) {
      write_config(std::cout, print_o.resolve());
      return 0;
    }

    if (*train_cmd) {
      const RunConfig cfg = resume && train_o.config.empty() && train_o.out
                                ? [&] {
                                    RunConfig c = load_checkpoint(*train_o.out).config;
                                    if (train_o.iterations) c.total_iterations = *train_o.iterations;
                                    return c;
                                  }()
                                : train_o.resolve();
      TrainOptions opt;
      opt.resume = resume;
      opt.stop_after = stop_after;
      if (!quiet) opt.progress = &std::cerr;
      const TrainResult r = train(cfg, opt);
      std::printf("%s after %zu iterations, %zu episodes; trailing mean %.6g (best %.6g)\n",
                  r.interrupted ? "stopped" : "finished", r.iterations, r.episodes, r.final_trailing,
                  r.best_trailing);
      if (r.final_eval) print_eval(*r.final_eval);
      std::printf("output: %s\n", r.output_dir.c_str());
      return 0;
    }

    if (*eval_cmd) {
      const Checkpoint ck = load_checkpoint(run_dir);
      std::optional<CsvWriter> trace;
      if (!trace_path.empty()) trace.emplace(trace_path, kTraceColumns);
      const EvalResult r =
          evaluate_checkpoint(run_dir, eval_episodes.value_or(ck.config.eval_episodes),
                              eval_flicker.value_or(ck.config.evaluation_flicker()), eval_seed.value_or(ck.config.seed),
                              {}, trace ? &*trace : nullptr);
      print_eval(r);
      return 0;
    }

    if (*sweep_cmd) {
      const Checkpoint ck = load_checkpoint(sweep_run);
      const auto probs = probs_text.empty() ? default_obs_probs() : parse_list<double>(probs_text);
      const fs::path csv = sweep_csv.empty() ? fs::path(sweep_run) / "sweep.csv" : fs::path(sweep_csv);
      const auto rows = sweep_checkpoint(sweep_run, probs, sweep_episodes.value_or(ck.config.eval_episodes),
                                         sweep_seed.value_or(ck.config.seed), csv);
      std::vector<double> q, m;
      std::printf("%-9s %-9s %-12s %s\n", "obs_prob", "flicker", "mean", "std");
      for (const auto& r : rows) {
        std::printf("%-9.3g %-9.3g %-12.6g %.6g\n", r.obs_prob, r.result.flicker_p, r.result.mean_return,
                    r.result.std_return);
        q.push_back(r.obs_prob);
        m.push_back(r.result.mean_return);
      }
      if (rows.size() >= 2) std::printf("spearman(obs_prob, mean) = %.4f\n", spearman(q, m));
      std::printf("written: %s\n", csv.c_str());
      return 0;
    }

    if (*cmp_cmd) {
      const RunConfig cfg = cmp_o.resolve();
      std::vector<agents::Variant> variants;
      for (const auto& v : parse_list<std::string>(variants_text)) variants.push_back(agents::parse_variant(v));
      const auto seeds = parse_list<std::uint64_t>(seeds_text);
      const CompareResult r = compare(cfg, variants, seeds, cfg.output_dir, workers, &std::cerr);
      std::printf("%-8s %-6s %-12s %-12s %-12s %s\n", "variant", "seeds", "mean", "std", "min", "max");
      for (const auto& s : r.summary) {
        std::printf("%-8s %-6zu %-12.6g %-12.6g %-12.6g %.6g\n", agents::to_string(s.variant).c_str(), s.seeds,
                    s.mean_return, s.std_return, s.min_return, s.max_return);
      }
      for (std::size_t i = 1; i < r.summary.size(); ++i) {
        const SignTest t = sign_test(r.summary[0].finals, r.summary[i].finals);
        std::printf("sign test %s > %s: %zu wins, %zu losses, %zu ties, p = %.4g\n",
                    agents::to_string(r.summary[0].variant).c_str(), agents::to_string(r.summary[i].variant).c_str(),
                    t.wins, t.losses, t.ties, t.p_value);
      }
      return 0;
    }

    if (*gc_cmd) {
      numkit::GradCheckOptions o;
      o.tolerance = gc_tol;
      auto families = layer_gradient_suite(gc_instances, gc_seed, o);
      for (auto& f : network_gradient_suite(3, gc_seed, o)) families.push_back(f);
      bool ok = true;
      for (const auto& f : families) {
        const bool pass = f.worst < gc_tol;
        ok = ok && pass;
        std::printf("%-18s instances %-3zu max_rel_error %.3e  %s\n", f.name.c_str(), f.instances, f.worst,
                    pass ? "ok" : "FAIL");
      }
      return ok ? 0 : 1;
    }

    if (*oracle_cmd) {
      const pomdp::PomdpModel m = model_path.empty() ? pomdp::tiger_model() : pomdp::load_pomdp(model_path);
      const auto vf = pomdp::belief_value_iteration(m, resolution, vi_tol);
      const pomdp::Belief& b0 = m.start();
      const std::size_t a = vf.greedy_action(m, b0);
      std::printf("%s: %zu states, %zu actions, %zu observations, discount %g\n",
                  model_path.empty() ? "tiger" : model_path.c_str(), m.num_states(), m.num_actions(),
                  m.num_observations(), m.discount());
      std::printf("grid points %zu, sweeps %zu, final residual %.3e\n", vf.grid.size(), vf.sweeps(),
                  vf.residuals.empty() ? 0.0 : vf.residuals.back());
      std::printf("V(start) = %.6f, greedy action %s\n", vf.value(b0), m.actions()[a].c_str());
      if (oracle_episodes > 0) {
        std::mt19937_64 rng(oracle_seed);
        const auto r = pomdp::oracle_policy_return(
            m, [&](const pomdp::Belief& b) { return vf.greedy_action(m, b); }, oracle_episodes, horizon, rng);
        std::printf("simulated discounted return %.6f +- %.6f over %zu episodes (horizon %zu)\n",
                    r.mean_discounted_return, r.standard_error, r.episodes, horizon);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
